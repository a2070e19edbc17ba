"""
Very weak Monge–Ampère pairing.

  Det D²v[ψ] = −½ ∫ (∂₂v)² ∂₁₁ψ + (∂₁v)² ∂₂₂ψ − 2 ∂₁v ∂₂v ∂₁₂ψ

Derivatives of ψ default to the stencil derivatives of the realized bump.
With centered differences on both factors the discrete sum obeys summation
by parts exactly, so quadratic v reproduce det ∇²v·∫ψ and affine shifts of v
leave the pairing unchanged up to rounding. `derivatives="analytic"` samples
the closed-form derivatives of the bump profile instead; the two agree to
quadrature accuracy.
"""
import logging

from app.errors import BadInputError, NumericalError
from app.fields.calculus import d1, d2
from app.fields.grid import ScalarField
from app.fields.quadrature import TestFunction, integrate, w11_norm
from app.mollify.convolve import mollify
from app.mollify.kernel import DEFAULT_KERNEL, Kernel, ScaleLadder
from app.mollify.rates import RateFit, fit_rate
from app.parallel import ordered_map
from app.surfaces.corpus import ImmersionField
from app.surfaces.metric import isometry_defect

logger = logging.getLogger(__name__)

SUPPORT_MARGIN_CELLS = 2
ISOMETRY_TOLERANCE = 1e-8
PSI_DERIVATIVES = ("stencil", "analytic")
COMPONENT_FLOOR = 1e-9                     # pairings below this are rounding


def ma_pairing(v: ScalarField, psi: TestFunction, derivatives: str = "stencil") -> float:
    if derivatives not in PSI_DERIVATIVES:
        raise BadInputError(f"derivatives must be one of {PSI_DERIVATIVES}, got {derivatives!r}")
    g = v.grid
    psi.check_support(g, margin_cells=SUPPORT_MARGIN_CELLS)
    p = psi.stencil_derivatives(g) if derivatives == "stencil" else psi.derivatives(g)
    v1 = d1(v.values, g.hx)
    v2 = d2(v.values, g.hy)
    density = v2 * v2 * p["d11"] + v1 * v1 * p["d22"] - 2.0 * v1 * v2 * p["d12"]
    return -0.5 * integrate(density, g)


def component_pairing(u: ImmersionField, eps: float | None, psi: TestFunction,
                      kernel: Kernel = DEFAULT_KERNEL, require_isometric: bool = True,
                      tolerance: float = ISOMETRY_TOLERANCE, ladder: ScaleLadder | None = None,
                      threads: int | None = None, derivatives: str = "stencil"):
    """
    ma_pairing of each component of u_ε.

    With `eps`: the three pairings as a tuple. With `ladder` instead: one
    RateFit per component of |pairing| across the scales, raw values in
    `values` and ‖ψ‖_{W^{1,1}} in `extra`. Pairings under COMPONENT_FLOOR
    count as zero, so exactly flat components come back identically zero.
    """
    if (eps is None) == (ladder is None):
        raise BadInputError("component_pairing needs exactly one of eps or ladder")
    if require_isometric:
        defect = isometry_defect(u)
        if defect > tolerance:
            raise NumericalError(f"not isometric: defect {defect:.3e} exceeds tolerance {tolerance:.1e}")

    def at(scale: float) -> tuple[float, float, float]:
        ue = mollify(u.u, scale, kernel)
        return tuple(ma_pairing(c, psi, derivatives) for c in ue.components())

    if ladder is None:
        return at(eps)

    ladder.check(u.grid)
    rows = ordered_map(at, ladder.scales, threads)
    norm = w11_norm(psi, u.grid)
    fits: list[RateFit] = []
    for m in range(3):
        values = [abs(row[m]) for row in rows]
        fits.append(fit_rate(ladder.scales, values, quantity=f"component_pairing_u{m + 1}",
                             floor=COMPONENT_FLOOR, psi=psi.label, w11_norm=norm))
        logger.debug("[weakdet] u%d over %s: %s", m + 1, ladder.spec(),
                     "zero" if fits[-1].identically_zero else f"exponent {fits[-1].exponent:.3f}")
    return tuple(fits)
