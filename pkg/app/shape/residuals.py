"""
Residual experiments on the mollified immersion.

Every sup-norm is taken over the eroded grid minus STENCIL_MARGIN nodes, so
one-sided boundary stencils never enter a measurement. Rate functions run one
mollification per ladder scale (ordered_map keeps the ladder order) and fit
log Q against log ε. Stencil derivatives of fields that are constant up to
rounding sit near 1e-16/h, so these fits treat values below STENCIL_FLOOR as
zero.
"""
import logging

import numpy as np

from app.errors import BadInputError, NumericalError
from app.fields.calculus import d1, d2
from app.fields.grid import MatrixField, ScalarField, VectorField, align, trim
from app.fields.quadrature import TestFunction, default_battery, pair, w11_norm
from app.mollify.convolve import eroded_grid, mollify
from app.mollify.kernel import DEFAULT_KERNEL, Kernel, ScaleLadder
from app.mollify.rates import RateFit, fit_rate
from app.parallel import ordered_map
from app.shape.christoffel import ChristoffelField, christoffel
from app.shape.forms import STENCIL_MARGIN, FormField, form_of, unit_normal
from app.surfaces.corpus import ImmersionField
from app.surfaces.metric import isometry_defect, pullback_metric

logger = logging.getLogger(__name__)

STENCIL_FLOOR = 1e-10
ISOMETRY_TOLERANCE = 1e-8


def _inner(values: np.ndarray) -> np.ndarray:
    m = STENCIL_MARGIN
    return values[..., m:-m, m:-m]


def _sup(values: np.ndarray) -> float:
    return float(np.max(np.abs(_inner(values))))


def required_exponents(alpha: float) -> dict[str, float]:
    return {
        "metric_C1": 2 * alpha - 1,
        "metric_C0": 2 * alpha - 1,
        "normal": alpha,
        "christoffel": 2 * alpha - 1,
        "curl": 3 * alpha - 2,
        "gauss_pairing": 2 * alpha - 1,
    }


def _require_isometric(u: ImmersionField, tolerance: float) -> None:
    defect = isometry_defect(u)
    if defect > tolerance:
        raise NumericalError(f"not isometric: defect {defect:.3e} exceeds tolerance {tolerance:.1e}")


def smoothed_metric(f: FormField) -> MatrixField:
    return pullback_metric(f.smoothed)


def mollified_metric(u: ImmersionField, eps: float, kernel: Kernel = DEFAULT_KERNEL) -> MatrixField:
    """g^ε from the mollified Jacobian alone."""
    due = mollify(u.du, eps, kernel)
    du = due.data
    return MatrixField.symmetric2(due.grid,
                                  np.sum(du[0] * du[0], axis=0), np.sum(du[0] * du[1], axis=0),
                                  np.sum(du[1] * du[1], axis=0))


def form_christoffel(f: FormField) -> ChristoffelField:
    return christoffel(smoothed_metric(f))


# ── Metric deviation ──────────────────────────────────────────────────────────

def metric_norms(g: MatrixField) -> dict[str, float]:
    """C⁰ and C¹ norms of g − E₂ on the inner grid."""
    dev = g.data - np.eye(2)[:, :, None, None]
    c0 = _sup(dev)
    h = g.grid
    c1 = c0 + max(_sup(d1(dev, h.hx)), _sup(d2(dev, h.hy)))
    return {"C0": c0, "C1": c1}


def metric_deviation(u: ImmersionField, ladder: ScaleLadder, norm: str = "C1",
                     alpha: float | None = None, tolerance: float = ISOMETRY_TOLERANCE,
                     kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> RateFit:
    if norm not in ("C0", "C1"):
        raise BadInputError(f"norm must be C0 or C1, got {norm}")
    _require_isometric(u, tolerance)
    ladder.check(u.grid)
    values = ordered_map(lambda eps: metric_norms(mollified_metric(u, eps, kernel))[norm],
                         ladder.scales, threads)
    required = None if alpha is None else required_exponents(alpha)[f"metric_{norm}"]
    return fit_rate(ladder.scales, values, quantity=f"metric_{norm}",
                    required_exponent=required, floor=STENCIL_FLOOR)


# ── Codazzi and Gauss ─────────────────────────────────────────────────────────

def codazzi_field(f: FormField, gamma: ChristoffelField | None = None) -> VectorField:
    """
    Rows of the Codazzi–Mainardi system with e, f, g = A₁₁, A₁₂, A₂₂:
      ∂₂e − ∂₁f − (eΓ¹₁₂ + f(Γ²₁₂ − Γ¹₁₁) − gΓ²₁₁)
      ∂₂f − ∂₁g − (eΓ¹₂₂ + f(Γ²₂₂ − Γ¹₁₂) − gΓ²₁₂)
    """
    G = (gamma or form_christoffel(f)).gamma
    grid = f.grid
    a11, a12, a22 = f.form.data[0, 0], f.form.data[0, 1], f.form.data[1, 1]
    r1 = (d2(a11, grid.hy) - d1(a12, grid.hx)
          - (a11 * G[0, 0, 1] + a12 * (G[1, 0, 1] - G[0, 0, 0]) - a22 * G[1, 0, 0]))
    r2 = (d2(a12, grid.hy) - d1(a22, grid.hx)
          - (a11 * G[0, 1, 1] + a12 * (G[1, 1, 1] - G[0, 0, 1]) - a22 * G[1, 0, 1]))
    return VectorField(grid, np.stack([r1, r2]))


def codazzi_residual(u, eps: float | None = None,
                     kernel: Kernel = DEFAULT_KERNEL) -> tuple[VectorField, float]:
    """Residual rows on the inner grid and their sup-norm."""
    f = form_of(u, eps, kernel)
    residual = trim(codazzi_field(f), STENCIL_MARGIN)
    return residual, residual.max_abs()


def gauss_density(f: FormField) -> ScalarField:
    A = f.form.data
    return ScalarField(f.grid, A[0, 0] * A[1, 1] - A[0, 1] * A[0, 1])


def gauss_pairing(u, eps: float | None, psi: TestFunction,
                  kernel: Kernel = DEFAULT_KERNEL) -> float:
    f = form_of(u, eps, kernel)
    return pair(gauss_density(f), psi)


def gauss_identity_residual(u, eps: float | None = None,
                            kernel: Kernel = DEFAULT_KERNEL) -> float:
    """sup over i, j, m of ∂ᵢⱼu_ε − Γ^k_ij ∂_k u_ε − A_ij N^ε."""
    f = form_of(u, eps, kernel)
    G = form_christoffel(f).gamma
    du = f.smoothed.du.data            # [k, m, ...]
    N = f.normal.data
    worst = 0.0
    for i in range(2):
        for j in range(i, 2):
            tangential = G[0, i, j] * du[0] + G[1, i, j] * du[1]
            r = f.hessian[i, j] - tangential - f.form.data[i, j] * N
            worst = max(worst, _sup(r))
    return worst


# ── Rate suite ────────────────────────────────────────────────────────────────

def normal_deviation(u: ImmersionField, ladder: ScaleLadder, alpha: float | None = None,
                     kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> RateFit:
    ladder.check(u.grid)
    n = unit_normal(u)

    def one(eps):
        Ne = form_of(u, eps, kernel).normal
        gap = Ne.data - align(n, Ne.grid).data
        return _sup(np.linalg.norm(gap, axis=0))

    values = ordered_map(one, ladder.scales, threads)
    return fit_rate(ladder.scales, values, quantity="normal", required_exponent=alpha,
                    floor=STENCIL_FLOOR)


def christoffel_rate(u: ImmersionField, ladder: ScaleLadder, alpha: float | None = None,
                     kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> RateFit:
    ladder.check(u.grid)
    values = ordered_map(lambda eps: _sup(form_christoffel(form_of(u, eps, kernel)).gamma),
                         ladder.scales, threads)
    required = None if alpha is None else required_exponents(alpha)["christoffel"]
    return fit_rate(ladder.scales, values, quantity="christoffel", required_exponent=required,
                    floor=STENCIL_FLOOR)


def curl_sup(f: FormField) -> float:
    A = f.form.data
    grid = f.grid
    curl = d1(A[:, 1], grid.hx) - d2(A[:, 0], grid.hy)
    return _sup(curl)


def curl_rate(u: ImmersionField, ladder: ScaleLadder, alpha: float | None = None,
              kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> RateFit:
    ladder.check(u.grid)
    values = ordered_map(lambda eps: curl_sup(form_of(u, eps, kernel)), ladder.scales, threads)
    required = None if alpha is None else required_exponents(alpha)["curl"]
    return fit_rate(ladder.scales, values, quantity="curl", required_exponent=required,
                    floor=STENCIL_FLOOR)


def ladder_battery(u: ImmersionField, ladder: ScaleLadder,
                   kernel: Kernel = DEFAULT_KERNEL) -> list[TestFunction]:
    """Default battery inside the inner grid of the coarsest scale."""
    coarse = eroded_grid(u.grid, ladder.eps0, kernel)
    inner = coarse.sub(STENCIL_MARGIN, STENCIL_MARGIN, coarse.nx - 2 * STENCIL_MARGIN,
                       coarse.ny - 2 * STENCIL_MARGIN)
    return default_battery(inner.box)


def pairing_max(f: FormField, battery: list[TestFunction]) -> float:
    density = gauss_density(f)
    return max(abs(pair(density, psi)) / w11_norm(psi, f.grid) for psi in battery)


def gauss_pairing_rate(u: ImmersionField, ladder: ScaleLadder,
                       battery: list[TestFunction] | None = None, alpha: float | None = None,
                       kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> RateFit:
    ladder.check(u.grid)
    battery = battery or ladder_battery(u, ladder, kernel)
    values = ordered_map(lambda eps: pairing_max(form_of(u, eps, kernel), battery),
                         ladder.scales, threads)
    required = None if alpha is None else required_exponents(alpha)["gauss_pairing"]
    return fit_rate(ladder.scales, values, quantity="gauss_pairing", required_exponent=required,
                    floor=STENCIL_FLOOR, battery_size=len(battery))


def residual_rows(u: ImmersionField, ladder: ScaleLadder, battery: list[TestFunction] | None = None,
                  kernel: Kernel = DEFAULT_KERNEL, threads: int | None = None) -> list[dict]:
    """One row per scale: eps, metric_dev_C1, codazzi_sup, gauss_pairing_max_over_battery, gauss_identity_sup."""
    ladder.check(u.grid)
    battery = battery or ladder_battery(u, ladder, kernel)

    def one(eps):
        f = form_of(u, eps, kernel)
        row = {
            "eps": eps,
            "metric_dev_C1": metric_norms(smoothed_metric(f))["C1"],
            "codazzi_sup": codazzi_residual(f)[1],
            "gauss_pairing_max_over_battery": pairing_max(f, battery),
            "gauss_identity_sup": gauss_identity_residual(f),
        }
        logger.info("[shape] eps=%.4g codazzi %.3e gauss-id %.3e", eps, row["codazzi_sup"],
                    row["gauss_identity_sup"])
        return row

    return ordered_map(one, ladder.scales, threads)
