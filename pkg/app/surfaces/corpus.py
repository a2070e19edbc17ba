"""
Analytic test-surface corpus.

Every member is sampled pointwise from closed forms: the immersion u, its
Jacobian du (entry [i, m] = ∂ᵢu^m, never finite differences) and an oracle
record with the unit normal, second fundamental form, ruling directions and,
for the developable members, a potential v with ∇²v = A.

  plane                affine u = P x + b
  cylinder             radius r, rulings along x₂
  cone                 apex, half-angle; rulings radial from the apex
  tangent_developable  tangent surface of a helix, developed onto the plane
  graph                u = (x, z(x)) for a named profile z
  sphere_patch         upper hemisphere of radius R as a graph (non-flat control)
  crumpled_fold        two rigid half-planes hinged along a crease (non-C¹)
"""
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from app.errors import BadInputError, NumericalError
from app.fields.grid import Grid2, MatrixField, ScalarField, VectorField
from app.surfaces.schemas import SurfaceSpec, SurfaceTag

logger = logging.getLogger(__name__)

IMMERSION_FLOOR = 1e-8


# ── Types ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SurfaceOracle:
    normal: VectorField
    second_form: MatrixField
    ruling_angle: np.ndarray | None = None     # radians mod π; NaN where locally constant
    potential: ScalarField | None = None
    gauss_curvature: float | None = None
    apex: tuple[float, float] | None = None
    isometric: bool = True
    non_c1: bool = False
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ImmersionField:
    u: VectorField
    du: MatrixField
    c0: float = 0.0
    oracle: SurfaceOracle | None = None
    tag: str = ""

    def __post_init__(self):
        if self.u.k != 3:
            raise BadInputError(f"an immersion has 3 components, got {self.u.k}")
        if (self.du.rows, self.du.cols) != (2, 3):
            raise BadInputError(f"du must be 2x3, got {self.du.rows}x{self.du.cols}")
        if self.du.grid != self.u.grid:
            raise BadInputError("u and du live on different grids")
        area = np.linalg.norm(np.cross(self.du.data[0], self.du.data[1], axis=0), axis=0)
        c0 = float(np.min(area))
        if c0 < IMMERSION_FLOOR:
            j, i = np.unravel_index(int(np.argmin(area)), area.shape)
            x, y = self.grid.point(int(i), int(j))
            raise NumericalError(
                f"immersion condition fails: |∂₁u×∂₂u| = {c0:.3e} at node ({i}, {j}) = ({x:.4g}, {y:.4g})")
        object.__setattr__(self, "c0", c0)

    @property
    def grid(self) -> Grid2:
        return self.u.grid

    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        """(∂₁u, ∂₂u) as (3, ny, nx) arrays."""
        return self.du.data[0], self.du.data[1]


# ── Helpers ───────────────────────────────────────────────────────────────────

def _unit(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec, axis=0)


def _sym(grid: Grid2, a11, a12, a22) -> MatrixField:
    shape = grid.shape
    return MatrixField.symmetric2(grid, np.broadcast_to(a11, shape), np.broadcast_to(a12, shape),
                                  np.broadcast_to(a22, shape))


def _immersion(grid: Grid2, u: np.ndarray, d1u: np.ndarray, d2u: np.ndarray,
               oracle: SurfaceOracle, tag: str) -> ImmersionField:
    shape = grid.shape
    u = np.stack([np.broadcast_to(c, shape) for c in u])
    du = np.stack([np.stack([np.broadcast_to(c, shape) for c in d1u]),
                   np.stack([np.broadcast_to(c, shape) for c in d2u])])
    return ImmersionField(VectorField(grid, u), MatrixField(grid, du), oracle=oracle, tag=tag)


def _check_clearance(grid: Grid2, center: tuple[float, float], radius: float, what: str) -> None:
    """The grid box must stay at least `radius` away from `center`."""
    cx, cy = center
    dx = max(grid.x0 - cx, 0.0, cx - grid.x1)
    dy = max(grid.y0 - cy, 0.0, cy - grid.y1)
    if math.hypot(dx, dy) < radius:
        raise BadInputError(
            f"{what}: domain {grid.box} comes within {math.hypot(dx, dy):.4g} of {center}, "
            f"need at least {radius:.4g}")


def _check_no_branch_cut(grid: Grid2, center: tuple[float, float], what: str) -> None:
    """Polar angles about `center` must be continuous on the box (no crossing of the ray angle π)."""
    cx, cy = center
    if grid.x0 <= cx and grid.y0 <= cy <= grid.y1:
        raise BadInputError(f"{what}: domain {grid.box} crosses the negative axis through {center}")


# ── Members ───────────────────────────────────────────────────────────────────

def _plane(p, grid: Grid2) -> ImmersionField:
    P = np.array(p.P, dtype=float)
    b = np.array(p.b, dtype=float)
    X, Y = grid.mesh()
    u = [P[m, 0] * X + P[m, 1] * Y + b[m] for m in range(3)]
    n = np.cross(P[:, 0], P[:, 1])
    n = n / np.linalg.norm(n)
    zero = np.zeros(grid.shape)
    isometric = bool(np.allclose(P.T @ P, np.eye(2), atol=1e-12))
    oracle = SurfaceOracle(
        normal=VectorField(grid, np.stack([np.full(grid.shape, c) for c in n])),
        second_form=_sym(grid, zero, zero, zero),
        ruling_angle=np.full(grid.shape, np.nan),
        potential=ScalarField(grid, zero) if isometric else None,
        gauss_curvature=0.0, isometric=isometric)
    return _immersion(grid, u, list(P[:, 0]), list(P[:, 1]), oracle, "plane")


def _cylinder(p, grid: Grid2) -> ImmersionField:
    r = p.r
    X, Y = grid.mesh()
    c, s = np.cos(X / r), np.sin(X / r)
    zero, one = np.zeros(grid.shape), np.ones(grid.shape)
    oracle = SurfaceOracle(
        normal=VectorField(grid, np.stack([c, s, zero])),
        second_form=_sym(grid, -1.0 / r, 0.0, 0.0),
        ruling_angle=np.full(grid.shape, math.pi / 2),
        potential=ScalarField(grid, -X ** 2 / (2 * r)),
        gauss_curvature=0.0)
    return _immersion(grid, [r * c, r * s, Y], [-s, c, zero], [zero, zero, one], oracle, "cylinder")


def _cone(p, grid: Grid2) -> ImmersionField:
    ax, ay = p.apex
    _check_clearance(grid, (ax, ay), p.margin_cells * grid.h, "cone")
    _check_no_branch_cut(grid, (ax, ay), "cone")
    sb, cb = math.sin(p.half_angle), math.cos(p.half_angle)
    X, Y = grid.mesh()
    px, py = X - ax, Y - ay
    rho = np.hypot(px, py)
    phi = np.arctan2(py, px)
    psi = phi / sb
    cp, sp = np.cos(psi), np.sin(psi)
    e = (np.cos(phi), np.sin(phi))
    t = (-np.sin(phi), np.cos(phi))
    radial = np.stack([sb * cp, sb * sp, np.full(grid.shape, cb)])   # ∂ρu
    angular = np.stack([-sp, cp, np.zeros(grid.shape)])                # ∂φu / ρ
    d1u = radial * e[0] + angular * t[0]
    d2u = radial * e[1] + angular * t[1]
    k = cb / (sb * rho)
    oracle = SurfaceOracle(
        normal=VectorField(grid, np.stack([-cb * cp, -cb * sp, np.full(grid.shape, sb)])),
        second_form=_sym(grid, k * t[0] * t[0], k * t[0] * t[1], k * t[1] * t[1]),
        ruling_angle=np.mod(phi, math.pi),
        potential=ScalarField(grid, (cb / sb) * rho),
        gauss_curvature=0.0, apex=(ax, ay))
    return _immersion(grid, [rho * sb * cp, rho * sb * sp, rho * cb], list(d1u), list(d2u),
                      oracle, "cone")


def _tangent_developable(p, grid: Grid2) -> ImmersionField:
    a, b = p.a, p.b
    w = math.hypot(a, b)
    kappa, tau = a / w ** 2, b / w ** 2
    rho0 = 1.0 / kappa
    X, Y = grid.mesh()
    r2 = X ** 2 + Y ** 2
    if np.min(r2) <= (rho0 + p.margin_cells * grid.h) ** 2:
        raise BadInputError(
            f"tangent_developable: domain {grid.box} reaches the edge of regression "
            f"|x| = {rho0:.4g} (margin {p.margin_cells} cells)")
    _check_no_branch_cut(grid, (0.0, 0.0), "tangent_developable")
    t = np.sqrt(r2 - rho0 ** 2)
    theta = np.arctan2(Y, X) - np.arctan(t / rho0)
    sigma = rho0 * theta
    bt = (-np.sin(theta), np.cos(theta))          # β'(σ)
    bn = (-np.cos(theta), -np.sin(theta))         # inward normal of β
    psi = sigma / w
    T = np.stack([-(a / w) * np.sin(psi), (a / w) * np.cos(psi), np.full(grid.shape, b / w)])
    N = np.stack([-np.cos(psi), -np.sin(psi), np.zeros(grid.shape)])
    gamma = np.stack([a * np.cos(psi), a * np.sin(psi), b * psi])
    u = gamma + t * T
    d1u = T * bt[0] + N * bn[0]
    d2u = T * bt[1] + N * bn[1]
    binormal = np.stack([(b / w) * np.sin(psi), -(b / w) * np.cos(psi), np.full(grid.shape, a / w)])
    k = tau / (t * kappa)
    oracle = SurfaceOracle(
        normal=VectorField(grid, binormal),
        second_form=_sym(grid, k * bn[0] * bn[0], k * bn[0] * bn[1], k * bn[1] * bn[1]),
        ruling_angle=np.mod(theta + math.pi / 2, math.pi),
        potential=ScalarField(grid, (b / a) * (bt[0] * X + bt[1] * Y + sigma)),
        gauss_curvature=0.0, meta={"curvature": kappa, "torsion": tau})
    return _immersion(grid, list(u), list(d1u), list(d2u), oracle, "tangent_developable")


def _graph_profile(name: str, c: float, X, Y):
    """(z, z₁, z₂, z₁₁, z₁₂, z₂₂, ruling angle or None)."""
    zero = np.zeros_like(X)
    if name == "ridge":
        return (c * X ** 2 / 2, c * X, zero, c + zero, zero, zero, math.pi / 2)
    if name == "paraboloid":
        return (c * (X ** 2 + Y ** 2) / 2, c * X, c * Y, c + zero, zero, c + zero, None)
    if name == "saddle":
        return (c * X * Y, c * Y, c * X, zero, c + zero, zero, None)
    if name == "cubic":
        return (c * (X ** 3 - 3 * X * Y ** 2), c * (3 * X ** 2 - 3 * Y ** 2), -6 * c * X * Y,
                6 * c * X, -6 * c * Y, -6 * c * X, None)
    if name == "wave":
        return (c * np.sin(X), c * np.cos(X), zero, -c * np.sin(X), zero, zero, math.pi / 2)
    raise BadInputError(f"unknown graph profile {name!r}")


def _graph_member(grid: Grid2, z, z1, z2, z11, z12, z22, ruling, tag: str,
                  curvature: float | None = None) -> ImmersionField:
    X, Y = grid.mesh()
    zero, one = np.zeros(grid.shape), np.ones(grid.shape)
    lam = np.sqrt(1.0 + z1 ** 2 + z2 ** 2)
    flat = bool(np.allclose(z1, 0) and np.allclose(z2, 0))
    oracle = SurfaceOracle(
        normal=VectorField(grid, np.stack([-z1 / lam, -z2 / lam, 1.0 / lam])),
        second_form=_sym(grid, z11 / lam, z12 / lam, z22 / lam),
        ruling_angle=None if ruling is None else np.full(grid.shape, ruling),
        potential=None,
        gauss_curvature=curvature, isometric=flat)
    return _immersion(grid, [X, Y, z], [one, zero, z1], [zero, one, z2], oracle, tag)


def _graph(p, grid: Grid2) -> ImmersionField:
    X, Y = grid.mesh()
    return _graph_member(grid, *_graph_profile(p.profile, p.scale, X, Y), tag="graph")


def _sphere_patch(p, grid: Grid2) -> ImmersionField:
    R = p.R
    X, Y = grid.mesh()
    r2 = X ** 2 + Y ** 2
    if np.max(r2) >= R ** 2 * (1 - 1e-6):
        raise BadInputError(f"sphere_patch: domain {grid.box} leaves the disk of radius {R}")
    z = np.sqrt(R ** 2 - r2)
    z1, z2 = -X / z, -Y / z
    z11 = -1.0 / z - X ** 2 / z ** 3
    z22 = -1.0 / z - Y ** 2 / z ** 3
    z12 = -X * Y / z ** 3
    return _graph_member(grid, z, z1, z2, z11, z12, z22, None, "sphere_patch", 1.0 / R ** 2)


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def _crumpled_fold(p, grid: Grid2) -> ImmersionField:
    px, py = p.point
    d = np.array([math.cos(p.direction), math.sin(p.direction), 0.0])
    nrm = np.array([-d[1], d[0]])
    Q = _rotation(d, p.angle)
    X, Y = grid.mesh()
    side = (X - px) * nrm[0] + (Y - py) * nrm[1] > 0
    rel = np.stack([X - px, Y - py, np.zeros(grid.shape)])
    rotated = np.einsum("ab,bji->aji", Q, rel)
    base = np.array([px, py, 0.0])[:, None, None]
    u = np.where(side, rotated, rel) + base
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    d1u = np.where(side, (Q @ e1)[:, None, None], e1[:, None, None])
    d2u = np.where(side, (Q @ e2)[:, None, None], e2[:, None, None])
    n_far = Q @ np.eye(3)[2]
    normal = np.where(side, n_far[:, None, None], np.eye(3)[2][:, None, None])
    zero = np.zeros(grid.shape)
    oracle = SurfaceOracle(
        normal=VectorField(grid, normal),
        second_form=_sym(grid, zero, zero, zero),
        ruling_angle=np.full(grid.shape, np.nan),
        potential=None, gauss_curvature=0.0, non_c1=True,
        meta={"crease_point": (px, py), "crease_angle": math.fmod(p.direction, math.pi)})
    return _immersion(grid, list(u), list(d1u), list(d2u), oracle, "crumpled_fold")


_BUILDERS = {
    SurfaceTag.PLANE: _plane,
    SurfaceTag.CYLINDER: _cylinder,
    SurfaceTag.CONE: _cone,
    SurfaceTag.TANGENT_DEVELOPABLE: _tangent_developable,
    SurfaceTag.GRAPH: _graph,
    SurfaceTag.SPHERE_PATCH: _sphere_patch,
    SurfaceTag.CRUMPLED_FOLD: _crumpled_fold,
}


def generate(spec: SurfaceSpec, grid: Grid2) -> ImmersionField:
    u = _BUILDERS[spec.tag](spec.parsed(), grid)
    logger.info("[surfaces] %s on %dx%d grid, C0=%.4g", spec.tag.value, grid.nx, grid.ny, u.c0)
    return u


# ── Derived operations ────────────────────────────────────────────────────────

def rigid_motion(u: ImmersionField, rotation, translation=(0.0, 0.0, 0.0)) -> ImmersionField:
    """x ↦ Q u(x) + t for Q ∈ SO(3); the oracle normal turns with Q, A and v do not change."""
    Q = np.asarray(rotation, dtype=float)
    if Q.shape != (3, 3) or not np.allclose(Q.T @ Q, np.eye(3), atol=1e-10) \
            or np.linalg.det(Q) < 0:
        raise BadInputError("rotation must be a proper orthogonal 3x3 matrix")
    t = np.asarray(translation, dtype=float).reshape(3, 1, 1)
    g = u.grid
    new_u = VectorField(g, np.einsum("ab,bji->aji", Q, u.u.data) + t)
    new_du = MatrixField(g, np.einsum("ab,kbji->kaji", Q, u.du.data))
    oracle = u.oracle
    if oracle is not None:
        oracle = replace(oracle, normal=VectorField(g, np.einsum("ab,bji->aji", Q, oracle.normal.data)))
    return ImmersionField(new_u, new_du, oracle=oracle, tag=u.tag)


def oracle_second_form(u: ImmersionField) -> MatrixField:
    if u.oracle is None:
        raise BadInputError("immersion carries no analytic oracle")
    return u.oracle.second_form


def default_domain(spec: SurfaceSpec) -> tuple[float, float, float, float]:
    """A window on which the member is valid and, where it can be, isometric."""
    p = spec.parsed()
    if spec.tag is SurfaceTag.CYLINDER:
        return (0.0, 0.0, math.pi / 2 * p.r, 1.0)
    if spec.tag is SurfaceTag.CONE:
        ax, ay = p.apex
        return (ax - 0.5, ay + 0.5, ax + 0.5, ay + 1.5)
    if spec.tag is SurfaceTag.TANGENT_DEVELOPABLE:
        rho0 = (p.a ** 2 + p.b ** 2) / p.a
        return (rho0 + 0.25, 0.0, rho0 + 1.25, 1.0)
    if spec.tag is SurfaceTag.SPHERE_PATCH:
        s = 0.5 * p.R / math.sqrt(2)
        return (-s, -s, s, s)
    if spec.tag is SurfaceTag.GRAPH:
        return (-0.5, -0.5, 0.5, 0.5)
    return (0.0, 0.0, 1.0, 1.0)
