"""
5-point Poisson solves on a rectangular grid.

Neumann: ghost nodes u₋₁ = u₁ + 2h·q carry the outward normal derivative q,
so a boundary row reads (2u₁ − 2u₀)/h² + … = f − 2q/h. Scaling every row by
its trapezoid weight makes the operator symmetric with constants as its
kernel; the rhs is projected onto the compatible subspace (mean imbalance
subtracted and logged) and the weighted mean of the solution is pinned to 0
through a bordered system.

Dirichlet: unknowns are the interior nodes, boundary values move to the rhs.

Grids up to DIRECT_LIMIT nodes are factorized directly (scipy.sparse.linalg.spsolve);
larger ones use conjugate gradients with a Jacobi preconditioner.
"""
from dataclasses import dataclass, field
from enum import Enum
import logging

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from app.errors import BadInputError, NumericalError
from app.fields.grid import Grid2, ScalarField, VectorField
from app.fields.quadrature import trapezoid_weights

logger = logging.getLogger(__name__)

DIRECT_LIMIT = 513 * 513
DEFAULT_TOLERANCE = 1e-10
MAX_ITERATIONS = 20000
EDGES = ("left", "right", "bottom", "top")


class ProblemKind(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    kind: ProblemKind
    rhs: ScalarField
    boundary: dict = field(default_factory=dict)     # edge → samples (left/right: ny, bottom/top: nx)
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        g = self.rhs.grid
        data = {}
        for edge in EDGES:
            n = g.ny if edge in ("left", "right") else g.nx
            vals = np.asarray(self.boundary.get(edge, np.zeros(n)), dtype=float)
            if vals.shape != (n,):
                raise BadInputError(f"{edge} boundary data has shape {vals.shape}, expected ({n},)")
            if not np.all(np.isfinite(vals)):
                raise BadInputError(f"{edge} boundary data holds non-finite values")
            data[edge] = vals
        object.__setattr__(self, "boundary", data)
        if not 0 < self.tolerance < 1:
            raise BadInputError(f"tolerance must lie in (0, 1), got {self.tolerance}")


@dataclass(frozen=True)
class SolveReport:
    kind: str
    regime: str
    residual: float
    iterations: int = 0
    imbalance: float = 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "regime": self.regime, "residual": self.residual,
                "iterations": self.iterations, "imbalance": self.imbalance}


# ── Boundary data helpers ─────────────────────────────────────────────────────

def normal_flux(F: VectorField) -> dict:
    """F·ν on each edge, ν the outward unit normal."""
    d = F.data
    return {"left": -d[0][:, 0], "right": d[0][:, -1],
            "bottom": -d[1][0, :], "top": d[1][-1, :]}


def boundary_trace(f: ScalarField) -> dict:
    v = f.values
    return {"left": v[:, 0], "right": v[:, -1], "bottom": v[0, :], "top": v[-1, :]}


# ── Operators ─────────────────────────────────────────────────────────────────

def _second_difference(n: int, h: float, neumann: bool) -> sparse.csr_matrix:
    """1-D −d²/dx² on n nodes; Neumann rows carry the doubled ghost coupling."""
    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    L = sparse.diags([off, main, off], [-1, 0, 1], format="lil")
    if neumann:
        L[0, 1] = -2.0
        L[n - 1, n - 2] = -2.0
    return (L / h ** 2).tocsr()


def neumann_operator(grid: Grid2) -> sparse.csr_matrix:
    """Symmetric W·(−Δ_h) on all nodes, W the trapezoid weights."""
    Lx = _second_difference(grid.nx, grid.hx, True)
    Ly = _second_difference(grid.ny, grid.hy, True)
    L = sparse.kron(sparse.identity(grid.ny), Lx) + sparse.kron(Ly, sparse.identity(grid.nx))
    W = sparse.diags(trapezoid_weights(grid).ravel())
    K = (W @ L).tocsr()
    return 0.5 * (K + K.T)


def dirichlet_operator(grid: Grid2) -> sparse.csr_matrix:
    """−Δ_h on the interior nodes."""
    Lx = _second_difference(grid.nx - 2, grid.hx, False)
    Ly = _second_difference(grid.ny - 2, grid.hy, False)
    return (sparse.kron(sparse.identity(grid.ny - 2), Lx)
            + sparse.kron(Ly, sparse.identity(grid.nx - 2))).tocsr()


def _flux_source(grid: Grid2, q: dict) -> np.ndarray:
    B = np.zeros(grid.shape)
    B[:, 0] += 2.0 * q["left"] / grid.hx
    B[:, -1] += 2.0 * q["right"] / grid.hx
    B[0, :] += 2.0 * q["bottom"] / grid.hy
    B[-1, :] += 2.0 * q["top"] / grid.hy
    return B


# ── Linear algebra ────────────────────────────────────────────────────────────

def _cg(K, b: np.ndarray, tolerance: float) -> tuple[np.ndarray, int]:
    diag = K.diagonal()
    M = splinalg.LinearOperator(K.shape, matvec=lambda x: x / diag)
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = splinalg.cg(K, b, rtol=tolerance, atol=0.0, maxiter=MAX_ITERATIONS, M=M,
                          callback=tick)
    if info != 0:
        achieved = float(np.linalg.norm(K @ x - b) / max(np.linalg.norm(b), 1e-300))
        raise NumericalError(
            f"conjugate gradients stopped after {count[0]} iterations at relative residual "
            f"{achieved:.3e} (target {tolerance:.1e})")
    return x, count[0]


def _relative_residual(K, x: np.ndarray, b: np.ndarray) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(K @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def _solve_neumann(problem: EllipticProblem) -> tuple[np.ndarray, SolveReport]:
    g = problem.rhs.grid
    w = trapezoid_weights(g).ravel()
    K = neumann_operator(g)
    # Δ_h u = f − B  ⇔  K u = W(B − f)
    b = w * (_flux_source(g, problem.boundary) - problem.rhs.values).ravel()
    imbalance = float(b.sum() / w.sum())
    b = b - w * imbalance
    if abs(imbalance) > 0:
        logger.info("[potential] Neumann compatibility imbalance %.3e projected out", imbalance)

    if g.size <= DIRECT_LIMIT:
        col = sparse.csr_matrix(w[:, None])
        bordered = sparse.bmat([[K, col], [col.T, None]], format="csc")
        sol = splinalg.spsolve(bordered, np.append(b, 0.0))
        x, regime, iterations = sol[:-1], "direct", 0
    else:
        x, iterations = _cg(K, b, problem.tolerance)
        x = x - np.dot(w, x) / w.sum()
        regime = "cg"
    residual = _relative_residual(K, x, b)
    if not np.all(np.isfinite(x)) or residual > max(problem.tolerance, 1e-8):
        raise NumericalError(f"Neumann solve reached relative residual {residual:.3e}")
    return x, SolveReport("neumann", regime, residual, iterations, imbalance)


def _solve_dirichlet(problem: EllipticProblem) -> tuple[np.ndarray, SolveReport]:
    g = problem.rhs.grid
    q = problem.boundary
    full = np.zeros(g.shape)
    full[:, 0], full[:, -1] = q["left"], q["right"]
    full[0, :], full[-1, :] = q["bottom"], q["top"]
    # boundary couplings moved to the rhs of −Δ_h u = −f
    rhs = -problem.rhs.values[1:-1, 1:-1].copy()
    rhs[:, 0] += full[1:-1, 0] / g.hx ** 2
    rhs[:, -1] += full[1:-1, -1] / g.hx ** 2
    rhs[0, :] += full[0, 1:-1] / g.hy ** 2
    rhs[-1, :] += full[-1, 1:-1] / g.hy ** 2
    b = rhs.ravel()
    K = dirichlet_operator(g)
    if g.size <= DIRECT_LIMIT:
        x, regime, iterations = splinalg.spsolve(K.tocsc(), b), "direct", 0
    else:
        x, iterations = _cg(K, b, problem.tolerance)
        regime = "cg"
    residual = _relative_residual(K, x, b)
    if not np.all(np.isfinite(x)) or residual > max(problem.tolerance, 1e-8):
        raise NumericalError(f"Dirichlet solve reached relative residual {residual:.3e}")
    full[1:-1, 1:-1] = x.reshape(g.ny - 2, g.nx - 2)
    return full.ravel(), SolveReport("dirichlet", regime, residual, iterations)


def solve_with_report(problem: EllipticProblem) -> tuple[ScalarField, SolveReport]:
    g = problem.rhs.grid
    if problem.kind is ProblemKind.NEUMANN:
        x, report = _solve_neumann(problem)
    else:
        x, report = _solve_dirichlet(problem)
    logger.debug("[potential] %s solve (%s) on %dx%d: residual %.2e", report.kind, report.regime,
                 g.nx, g.ny, report.residual)
    return ScalarField(g, x.reshape(g.shape)), report


def solve(problem: EllipticProblem) -> ScalarField:
    return solve_with_report(problem)[0]
