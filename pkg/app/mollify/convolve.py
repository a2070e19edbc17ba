"""
Mollification on the eroded grid.

f_ε is evaluated by direct tensor quadrature over the kernel support
(scipy.ndimage.correlate) and cropped to the nodes whose whole kernel
support lies in the grid. The result keeps the parent spacing, so its grid
is an aligned sub-grid of the input grid.
"""
from dataclasses import replace
import logging

import numpy as np
from scipy import ndimage

from app.errors import BadInputError
from app.fields.grid import MIN_NODES, Grid2, MatrixField, ScalarField, VectorField, align
from app.fields.holder import holder_profile
from app.fields.quadrature import TestFunction, pair
from app.mollify.kernel import DEFAULT_KERNEL, Kernel, ScaleLadder
from app.mollify.rates import RateFit, fit_rate
from app.parallel import ordered_map

logger = logging.getLogger(__name__)

PRODUCT_MIN_SCALES = 4


def eroded_grid(grid: Grid2, eps: float, kernel: Kernel = DEFAULT_KERNEL) -> Grid2:
    if eps < 2 * grid.h * (1 - 1e-12):
        raise BadInputError(f"eps={eps:.4g} below 2*h={2 * grid.h:.4g}; kernel not resolved")
    kx, ky = kernel.half_widths(eps, grid)
    nx, ny = grid.nx - 2 * kx, grid.ny - 2 * ky
    if nx < MIN_NODES or ny < MIN_NODES:
        need_x = (2 * kx + MIN_NODES - 1) * grid.hx
        need_y = (2 * ky + MIN_NODES - 1) * grid.hy
        raise BadInputError(
            f"mollification at eps={eps:.4g} empties the grid; domain must be at least "
            f"{need_x:.4g} x {need_y:.4g}")
    return grid.sub(kx, ky, nx, ny)


def _apply(arrays: np.ndarray, weights: np.ndarray, grid: Grid2, out: Grid2) -> np.ndarray:
    """Correlate every leading-axis slice and crop to `out`."""
    i0, j0 = out.offset_in(grid)
    lead = arrays.shape[:-2]
    flat = arrays.reshape((-1,) + grid.shape)
    res = np.empty((flat.shape[0],) + out.shape)
    for c in range(flat.shape[0]):
        full = ndimage.correlate(flat[c], weights, mode="constant", cval=0.0)
        res[c] = full[j0:j0 + out.ny, i0:i0 + out.nx]
    return res.reshape(lead + out.shape)


def mollify(f, eps: float, kernel: Kernel = DEFAULT_KERNEL):
    """f_ε for a Scalar/Vector/MatrixField, on the eroded grid."""
    g = f.grid
    out = eroded_grid(g, eps, kernel)
    w = kernel.weights(eps, g)
    if isinstance(f, ScalarField):
        return ScalarField(out, _apply(f.values, w, g, out))
    if isinstance(f, VectorField):
        return VectorField(out, _apply(f.data, w, g, out))
    if isinstance(f, MatrixField):
        data = _apply(f.data, w, g, out)
        if f.symmetric:
            data[1, 0] = data[0, 1]
        return MatrixField(out, data, f.symmetric)
    raise BadInputError(f"cannot mollify {type(f).__name__}")


def mollified_derivative(f, eps: float, axis: int, kernel: Kernel = DEFAULT_KERNEL):
    """∂_axis (f_ε) by correlation with the differentiated kernel."""
    g = f.grid
    out = eroded_grid(g, eps, kernel)
    w = kernel.derivative_weights(eps, g, axis)
    if isinstance(f, ScalarField):
        return ScalarField(out, _apply(f.values, w, g, out))
    if isinstance(f, VectorField):
        return VectorField(out, _apply(f.data, w, g, out))
    if isinstance(f, MatrixField):
        return MatrixField(out, _apply(f.data, w, g, out))
    raise BadInputError(f"cannot differentiate {type(f).__name__}")


def mollified_gradient(f: ScalarField, eps: float, kernel: Kernel = DEFAULT_KERNEL) -> VectorField:
    d1 = mollified_derivative(f, eps, 0, kernel)
    d2 = mollified_derivative(f, eps, 1, kernel)
    return VectorField(d1.grid, np.stack([d1.values, d2.values]))


def commutator(f: ScalarField, h: ScalarField, eps: float,
               kernel: Kernel = DEFAULT_KERNEL) -> ScalarField:
    """f_ε h_ε − (fh)_ε."""
    if f.grid != h.grid:
        raise BadInputError("commutator operands live on different grids")
    fe, he = mollify(f, eps, kernel), mollify(h, eps, kernel)
    return fe * he - mollify(f * h, eps, kernel)


# ── Distributional product ────────────────────────────────────────────────────

def distributional_product(f: ScalarField, h: ScalarField, j: int, psi: TestFunction,
                           ladder: ScaleLadder, kernel: Kernel = DEFAULT_KERNEL,
                           threads: int | None = None) -> tuple[float, RateFit, list[float]]:
    """
    a(ε) = pair(f_ε ∂ⱼh_ε, ψ) along the ladder (j = 1 or 2).

    Returns (limit, RateFit of the Cauchy increments |a(ε_k+1) − a(ε_k)|, the
    raw a values). The limit is the value at the finest scale. When the
    increments decay at a positive rate the fit also carries the
    Richardson-extrapolated value as `extrapolated`.
    """
    if j not in (1, 2):
        raise BadInputError(f"axis must be 1 or 2, got {j}")
    if ladder.count < PRODUCT_MIN_SCALES:
        raise BadInputError(f"distributional_product needs a ladder of at least "
                            f"{PRODUCT_MIN_SCALES} scales, got {ladder.count}")
    ladder.check(f.grid)

    def one(eps):
        fe = mollify(f, eps, kernel)
        dh = mollified_derivative(h, eps, j - 1, kernel)
        return pair(fe * dh, psi)

    values = [float(v) for v in ordered_map(one, ladder.scales, threads)]
    increments = [abs(b - a) for a, b in zip(values[:-1], values[1:])]
    fit = fit_rate(ladder.scales[:-1], increments, quantity=f"product_increment_d{j}",
                   min_measurements=PRODUCT_MIN_SCALES - 1)
    limit = values[-1]
    if fit.exponent is not None and fit.exponent > 0:
        rp = ladder.ratio ** fit.exponent
        extrapolated = limit + (limit - values[-2]) * rp / (1 - rp)
        fit = replace(fit, extra={**fit.extra, "extrapolated": float(extrapolated)})
    logger.debug("[mollify] product d%d: limit=%.12g extrapolated=%s", j, limit,
                 fit.extra.get("extrapolated"))
    return limit, fit, values


# ── Convolution estimates ─────────────────────────────────────────────────────

def approximation_bounds(f: ScalarField, alpha: float, ladder: ScaleLadder,
                         kernel: Kernel = DEFAULT_KERNEL) -> dict:
    """
    Per scale, the ratios
        ‖f_ε − f‖₀ / ([f]_{0,α|ε} ε^α)   and   ‖∇f_ε‖₀ / ([f]_{0,α|ε} ε^{α−1}),
    whose maxima calibrate the constants of the two convolution estimates.
    A zero seminorm gives ratio 0.
    """
    ladder.check(f.grid)
    profile = holder_profile(f, alpha, ladder.scales)
    seminorm = dict(zip(profile.scales, profile.values))
    rows = []
    for eps in ladder.scales:
        fe = mollify(f, eps, kernel)
        dev = float(np.max(np.abs(fe.values - align(f, fe.grid).values)))
        slope = float(np.max(mollified_gradient(f, eps, kernel).norm()))
        s = seminorm[eps]
        rows.append({
            "eps": eps,
            "seminorm": s,
            "deviation": dev,
            "gradient": slope,
            "deviation_ratio": dev / (s * eps ** alpha) if s > 0 else 0.0,
            "gradient_ratio": slope / (s * eps ** (alpha - 1)) if s > 0 else 0.0,
        })
    return {
        "alpha": alpha,
        "rows": rows,
        "max_deviation_ratio": max(r["deviation_ratio"] for r in rows),
        "max_gradient_ratio": max(r["gradient_ratio"] for r in rows),
    }
