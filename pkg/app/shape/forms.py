"""
Mollified normals and the weak second fundamental form.

  u_ε     = u ⋆ φ_ε
  ∂ᵢu_ε   = (∂ᵢu) ⋆ φ_ε               (analytic du, mollified)
  ∂ᵢⱼu_ε  = (∂ᵢu) ⋆ ∂ⱼφ_ε             (derivative kernel, mixed entry averaged)
  N^ε     = ∂₁u_ε × ∂₂u_ε / |…|
  A^ε_ij  = ∂ᵢⱼu_ε · N^ε

The alternative −∂ᵢu_ε · ∂ⱼN^ε (stencil derivative of N^ε) is computed
alongside; its maximal discrepancy from A^ε is kept on the FormField.
"""
from dataclasses import dataclass
import logging

import numpy as np

from app.errors import NumericalError
from app.fields.calculus import d1, d2
from app.fields.grid import Grid2, MatrixField, VectorField, trim
from app.mollify.convolve import mollified_derivative, mollify
from app.mollify.kernel import DEFAULT_KERNEL, Kernel
from app.surfaces.corpus import ImmersionField

logger = logging.getLogger(__name__)

STENCIL_MARGIN = 2


def unit_normal(u: ImmersionField, c0: float | None = None) -> VectorField:
    """(∂₁u×∂₂u)/|∂₁u×∂₂u|; the area element must stay above c0/2 (default: u's own C₀)."""
    d1u, d2u = u.rows()
    cross = np.cross(d1u, d2u, axis=0)
    area = np.linalg.norm(cross, axis=0)
    floor = 0.5 * (u.c0 if c0 is None else c0)
    worst = float(np.min(area))
    if worst < floor:
        j, i = np.unravel_index(int(np.argmin(area)), area.shape)
        raise NumericalError(
            f"|∂₁u×∂₂u| = {worst:.3e} at node ({i}, {j}) fell below C0/2 = {floor:.3e}")
    return VectorField(u.grid, cross / area)


@dataclass(frozen=True, eq=False)
class FormField:
    form: MatrixField                # A^ε, symmetric
    eps: float
    smoothed: ImmersionField         # u_ε with du_ε
    hessian: np.ndarray              # ∂ᵢⱼu_ε, shape (2, 2, 3, ny, nx), symmetric in i, j
    normal: VectorField              # N^ε
    provenance: str = "hessian.normal"
    alt_discrepancy: float = 0.0

    @property
    def grid(self) -> Grid2:
        return self.form.grid


def smoothed_immersion(u: ImmersionField, eps: float,
                       kernel: Kernel = DEFAULT_KERNEL) -> tuple[ImmersionField, np.ndarray]:
    """(u_ε, ∂²u_ε) on the eroded grid."""
    ue = mollify(u.u, eps, kernel)
    due = mollify(u.du, eps, kernel)
    by_axis = [mollified_derivative(u.du, eps, axis, kernel).data for axis in (0, 1)]
    hessian = np.empty((2, 2, 3) + ue.grid.shape)
    hessian[0, 0] = by_axis[0][0]
    hessian[1, 1] = by_axis[1][1]
    hessian[0, 1] = 0.5 * (by_axis[1][0] + by_axis[0][1])
    hessian[1, 0] = hessian[0, 1]
    return ImmersionField(ue, due, tag=u.tag), hessian


def second_form(u: ImmersionField, eps: float, kernel: Kernel = DEFAULT_KERNEL) -> FormField:
    ue, hessian = smoothed_immersion(u, eps, kernel)
    N = unit_normal(ue, c0=u.c0)
    n = N.data
    a11 = np.sum(hessian[0, 0] * n, axis=0)
    a12 = np.sum(hessian[0, 1] * n, axis=0)
    a22 = np.sum(hessian[1, 1] * n, axis=0)
    A = MatrixField.symmetric2(ue.grid, a11, a12, a22)

    g = ue.grid
    d1u, d2u = ue.rows()
    dN = (d1(n, g.hx), d2(n, g.hy))
    alt = np.empty((2, 2) + g.shape)
    for i, du_i in enumerate((d1u, d2u)):
        for j in range(2):
            alt[i, j] = -np.sum(du_i * dN[j], axis=0)
    gap = np.abs(alt - A.data)[:, :, STENCIL_MARGIN:-STENCIL_MARGIN, STENCIL_MARGIN:-STENCIL_MARGIN]
    discrepancy = float(np.max(gap))
    logger.debug("[shape] eps=%.4g: |A| = %.4g, alternative formula gap %.3e", eps, A.max_abs(),
                 discrepancy)
    return FormField(A, eps, ue, hessian, N, alt_discrepancy=discrepancy)


def form_of(u, eps: float | None = None, kernel: Kernel = DEFAULT_KERNEL) -> FormField:
    """Accept an ImmersionField (mollified at eps) or an already computed FormField."""
    if isinstance(u, FormField):
        return u
    return second_form(u, eps, kernel)


def second_form_bound(u, eps: float | None = None, kernel: Kernel = DEFAULT_KERNEL) -> dict:
    """The numbers behind ‖A^ε‖₀ ≤ ‖u_ε‖₂ (C² norm: values, first and second derivatives)."""
    f = form_of(u, eps, kernel)
    ue = f.smoothed
    a_sup = float(np.max(np.abs(trim(f.form, STENCIL_MARGIN).data)))
    c2 = (float(np.max(np.abs(ue.u.data))) + float(np.max(np.abs(ue.du.data)))
          + float(np.max(np.abs(f.hessian))))
    hess_sup = float(np.max(np.linalg.norm(f.hessian, axis=2)))
    return {"eps": f.eps, "A_sup": a_sup, "u_eps_C2": c2, "hessian_sup": hess_sup,
            "holds": a_sup <= c2}
