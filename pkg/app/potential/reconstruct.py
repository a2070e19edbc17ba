"""
Potential of a symmetric form field.

  ΔFᵢ = (div A)ᵢ        Neumann data Aᵢ·ν
  ΔEᵢ = (curl A)ᵢ       Eᵢ = 0 on the boundary
  G   = (F₁ + E₂, F₂ − E₁)
  Δv  = div G           Neumann data G·ν

so that A = ∇F + ∇^⊥E and hess v ≈ A wherever the rows of A are curl free.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from app.errors import BadInputError
from app.fields.calculus import curl2, div, grad, hess, row_curl, row_div
from app.fields.grid import MatrixField, ScalarField, VectorField, trim
from app.fields.holder import HolderProfile, HolderVerdict, holder_profile, little_holder_verdict
from app.parallel import ordered_map
from app.potential.elliptic import (
    DEFAULT_TOLERANCE, EllipticProblem, ProblemKind, normal_flux, solve_with_report,
)
from app.shape.forms import STENCIL_MARGIN, FormField

logger = logging.getLogger(__name__)

DEFAULT_GRADIENT_THRESHOLD = 1.0


@dataclass(frozen=True, eq=False)
class PotentialResult:
    F: VectorField
    E: VectorField
    v: ScalarField
    hessian_gap: float
    curl_gap: float
    solves: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"hessian_gap": self.hessian_gap, "curl_gap": self.curl_gap,
                "solver": [s.to_dict() for s in self.solves],
                "max_residual": max((s.residual for s in self.solves), default=0.0),
                "grid": self.v.grid.to_dict()}


def _matrix(A) -> MatrixField:
    M = A.form if isinstance(A, FormField) else A
    if not isinstance(M, MatrixField) or M.rows != 2 or M.cols != 2:
        raise BadInputError("reconstruct_potential needs a 2x2 form field")
    if not M.symmetric:
        raise BadInputError("reconstruct_potential needs a symmetric form field")
    return M


def reconstruct_potential(A, tolerance: float = DEFAULT_TOLERANCE,
                          threads: int | None = None) -> PotentialResult:
    M = _matrix(A)
    g = M.grid
    divA = row_div(M).data
    curlA = row_curl(M).data

    problems = []
    for i in range(2):
        row = VectorField(g, M.data[i])
        problems.append(EllipticProblem(ProblemKind.NEUMANN, ScalarField(g, divA[i]),
                                        normal_flux(row), tolerance))
    for i in range(2):
        problems.append(EllipticProblem(ProblemKind.DIRICHLET, ScalarField(g, curlA[i]),
                                        tolerance=tolerance))
    results = ordered_map(solve_with_report, problems, threads)
    F1, F2, E1, E2 = (r[0].values for r in results)
    reports = [r[1] for r in results]

    G = VectorField(g, np.stack([F1 + E2, F2 - E1]))
    curl_gap = trim(curl2(G), STENCIL_MARGIN).max_abs()

    v, report = solve_with_report(
        EllipticProblem(ProblemKind.NEUMANN, div(G), normal_flux(G), tolerance))
    reports.append(report)
    gap = hess(v).data - M.data
    hessian_gap = float(np.max(np.abs(gap[:, :, STENCIL_MARGIN:-STENCIL_MARGIN,
                                          STENCIL_MARGIN:-STENCIL_MARGIN])))
    logger.info("[potential] %dx%d: hessian gap %.3e, curl gap %.3e", g.nx, g.ny, hessian_gap,
                curl_gap)
    return PotentialResult(VectorField(g, np.stack([F1, F2])), VectorField(g, np.stack([E1, E2])),
                           v, hessian_gap, curl_gap, reports)


def gradient_holder_diagnostic(v: ScalarField, alpha: float, scales,
                               threshold: float = DEFAULT_GRADIENT_THRESHOLD,
                               seed: int = 0) -> tuple[list[HolderProfile], HolderVerdict]:
    """Profiles of ∂₁v and ∂₂v; non-member if either plateaus, member if both decay."""
    gv = grad(v)
    profiles = [holder_profile(c, alpha, scales, seed) for c in gv.components()]
    verdicts = [little_holder_verdict(p, threshold) for p in profiles]
    if HolderVerdict.NON_MEMBER in verdicts:
        verdict = HolderVerdict.NON_MEMBER
    elif all(vd is HolderVerdict.MEMBER for vd in verdicts):
        verdict = HolderVerdict.MEMBER
    else:
        verdict = HolderVerdict.INCONCLUSIVE
    return profiles, verdict
