"""
Brouwer degree of planar maps by boundary winding.

The boundary polyline is mapped, the angle of F(γ) − y is accumulated from
wrapped increments arg((b − y)/(a − y)), and the total is divided by 2π. A
query is valid only when the margin min|F(γ) − y| exceeds VALIDITY_FACTOR
times the largest step between consecutive image samples; otherwise the
polyline is refined by midpoint insertion until it does or the sample cap is
reached.
"""
from collections import Counter
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from app.errors import BadInputError
from app.fields.calculus import grad
from app.fields.grid import Grid2, ScalarField, VectorField
from app.parallel import ordered_map

logger = logging.getLogger(__name__)

VALIDITY_FACTOR = 3.0
MAX_BOUNDARY_POINTS = 1 << 16
DELTA_FRACTIONS = (0.2, 0.1, 0.05)
DEGENERATE_DIAMETER = 1e-12


# ── Maps and boundaries ───────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PlanarMap:
    field: VectorField
    label: str = ""
    trace: np.ndarray | None = None      # closed polyline of image samples, once traced

    def __post_init__(self):
        if self.field.k != 2:
            raise BadInputError(f"planar maps have 2 components, got {self.field.k}")

    @property
    def grid(self) -> Grid2:
        return self.field.grid

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of the sampled map at (m, 2) domain points."""
        g = self.grid
        pts = np.asarray(points, dtype=float)
        x0, y0, x1, y1 = g.box
        tol = 1e-9 * max(g.hx, g.hy)
        if (pts[:, 0].min() < x0 - tol or pts[:, 0].max() > x1 + tol
                or pts[:, 1].min() < y0 - tol or pts[:, 1].max() > y1 + tol):
            raise BadInputError(f"boundary polyline leaves the grid box {g.box}")
        pts = np.clip(pts, [x0, y0], [x1, y1])
        out = np.empty((pts.shape[0], 2))
        for c in range(2):
            interp = RegularGridInterpolator((g.y, g.x), self.field.data[c], method="linear")
            out[:, c] = interp(pts[:, ::-1])
        return out

    def with_trace(self, boundary: np.ndarray) -> "PlanarMap":
        return PlanarMap(self.field, self.label, self.evaluate(boundary))

    def image_box(self, margin_nodes: int = 0) -> tuple[float, float, float, float]:
        m = margin_nodes
        d = self.field.data[:, m:self.grid.ny - m, m:self.grid.nx - m]
        return (float(d[0].min()), float(d[1].min()), float(d[0].max()), float(d[1].max()))


def map_from_function(fn, grid: Grid2, label: str = "") -> PlanarMap:
    X, Y = grid.mesh()
    a, b = fn(X, Y)
    return PlanarMap(VectorField(grid, np.stack([np.broadcast_to(a, grid.shape),
                                                 np.broadcast_to(b, grid.shape)])), label)


def gradient_map(v: ScalarField) -> PlanarMap:
    return PlanarMap(grad(v), "grad")


def perturbed_map(v: ScalarField, delta: float) -> PlanarMap:
    """F_δ = ∇v + δ(−x₂, x₁)."""
    if not delta > 0:
        raise BadInputError(f"delta must be positive, got {delta}")
    X, Y = v.grid.mesh()
    gv = grad(v).data
    return PlanarMap(VectorField(v.grid, np.stack([gv[0] - delta * Y, gv[1] + delta * X])),
                     f"F_delta={delta:g}")


def rectangle_boundary(box: tuple[float, float, float, float], per_side: int = 64) -> np.ndarray:
    """Counter-clockwise closed polyline around `box`."""
    x0, y0, x1, y1 = box
    if x1 <= x0 or y1 <= y0:
        raise BadInputError(f"empty box {box}")
    if per_side < 1:
        raise BadInputError(f"per_side must be positive, got {per_side}")
    t = np.linspace(0.0, 1.0, per_side, endpoint=False)
    sides = [
        np.stack([x0 + (x1 - x0) * t, np.full_like(t, y0)], axis=1),
        np.stack([np.full_like(t, x1), y0 + (y1 - y0) * t], axis=1),
        np.stack([x1 - (x1 - x0) * t, np.full_like(t, y1)], axis=1),
        np.stack([np.full_like(t, x0), y1 - (y1 - y0) * t], axis=1),
    ]
    pts = np.concatenate(sides)
    return np.vstack([pts, pts[:1]])


def circle_boundary(center, radius: float, count: int = 256) -> np.ndarray:
    if not radius > 0 or count < 3:
        raise BadInputError(f"circle needs radius > 0 and at least 3 samples, got {radius}, {count}")
    t = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
    pts = np.stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)], axis=1)
    return np.vstack([pts, pts[:1]])


def _refine(boundary: np.ndarray) -> np.ndarray:
    mid = 0.5 * (boundary[:-1] + boundary[1:])
    out = np.empty((2 * boundary.shape[0] - 1, 2))
    out[0::2] = boundary
    out[1::2] = mid
    return out


# ── Degree ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DegreeReport:
    y: tuple[float, float]
    degree: int | None
    margin: float
    max_step: float
    valid: bool
    samples: int

    def to_dict(self) -> dict:
        return {"y": list(self.y), "degree": self.degree, "margin": self.margin,
                "max_step": self.max_step, "valid": self.valid, "samples": self.samples}


def winding_number(images: np.ndarray, y) -> float:
    """Accumulated angle of images − y over a closed polyline, in turns."""
    z = (images[:, 0] - y[0]) + 1j * (images[:, 1] - y[1])
    return float(np.sum(np.angle(z[1:] / z[:-1])) / (2 * math.pi))


def brouwer_degree(fmap: PlanarMap, boundary: np.ndarray, y) -> DegreeReport:
    boundary = np.asarray(boundary, dtype=float)
    if boundary.ndim != 2 or boundary.shape[1] != 2 or boundary.shape[0] < 4:
        raise BadInputError("boundary must be an (m, 2) polyline with at least 4 points")
    if not np.allclose(boundary[0], boundary[-1]):
        raise BadInputError("boundary polyline is not closed (first sample != last sample)")
    y = (float(y[0]), float(y[1]))
    while True:
        images = fmap.evaluate(boundary)
        dist = np.hypot(images[:, 0] - y[0], images[:, 1] - y[1])
        margin = float(dist.min())
        step = float(np.max(np.hypot(*np.diff(images, axis=0).T)))
        if margin > VALIDITY_FACTOR * step:
            turns = winding_number(images, y)
            return DegreeReport(y, int(round(turns)), margin, step, True, boundary.shape[0])
        if margin <= DEGENERATE_DIAMETER or 2 * boundary.shape[0] > MAX_BOUNDARY_POINTS:
            return DegreeReport(y, None, margin, step, False, boundary.shape[0])
        boundary = _refine(boundary)


# ── Scan ──────────────────────────────────────────────────────────────────────

@dataclass
class DegreeScan:
    counts: dict = field(default_factory=dict)         # branch → Counter(pass/fail/invalid)
    witnesses: list = field(default_factory=list)      # failing queries
    degenerate_image: bool = False
    deltas: tuple = ()
    under_coverage_note: str = ("F_delta(U) is sampled at interior nodes only; "
                                "the scan under-covers the set")

    @property
    def all_invalid(self) -> bool:
        return all(c["pass"] + c["fail"] == 0 for c in self.counts.values())

    @property
    def fails(self) -> int:
        return sum(c["fail"] for c in self.counts.values())

    def to_dict(self) -> dict:
        return {"counts": {k: dict(v) for k, v in self.counts.items()},
                "witnesses": self.witnesses, "degenerate_image": self.degenerate_image,
                "deltas": list(self.deltas), "fails": self.fails,
                "all_invalid": self.all_invalid, "note": self.under_coverage_note}


def delta_ladder(box: tuple[float, float, float, float]) -> tuple[float, ...]:
    scale = max(box[2] - box[0], box[3] - box[1])
    return tuple(f * scale for f in DELTA_FRACTIONS)


def _interior_nodes(grid: Grid2, rng: np.random.Generator, count: int,
                    fraction: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    mi = max(1, int(fraction * grid.nx))
    mj = max(1, int(fraction * grid.ny))
    i = rng.integers(mi, grid.nx - mi, size=count)
    j = rng.integers(mj, grid.ny - mj, size=count)
    return i, j


def degree_scan(v: ScalarField, region: tuple[float, float, float, float] | None = None,
                deltas=None, samples: int = 50, seed: int = 0, per_side: int = 64,
                threads: int | None = None) -> DegreeScan:
    """
    Two query families:
      grad      y drawn around ∇v(U); expected degree 0 (developable direction)
      F_delta   y = F_δ(x) at interior nodes x; expected degree ≥ 1
    """
    g = v.grid
    region = region or g.box
    boundary = rectangle_boundary(region, per_side)
    deltas = tuple(deltas) if deltas else delta_ladder(region)
    rng = np.random.default_rng(seed)
    scan = DegreeScan(deltas=deltas)

    gmap = gradient_map(v)
    bx0, by0, bx1, by1 = gmap.image_box()
    diameter = math.hypot(bx1 - bx0, by1 - by0)
    scan.degenerate_image = diameter <= DEGENERATE_DIAMETER
    pad = 0.1 * max(bx1 - bx0, by1 - by0)
    ys = np.stack([rng.uniform(bx0 - pad, bx1 + pad, samples),
                   rng.uniform(by0 - pad, by1 + pad, samples)], axis=1)
    families = [("grad", gmap, ys, lambda d: d == 0)]

    for delta in deltas:
        fmap = perturbed_map(v, delta)
        i, j = _interior_nodes(g, rng, samples)
        ys = fmap.field.data[:, j, i].T
        families.append((f"F_delta={delta:g}", fmap, ys, lambda d: d >= 1))

    for name, fmap, ys, expected in families:
        reports = ordered_map(lambda y: brouwer_degree(fmap, boundary, y), list(ys), threads)
        counts = Counter({"pass": 0, "fail": 0, "invalid": 0})
        for rep in reports:
            if not rep.valid:
                counts["invalid"] += 1
            elif expected(rep.degree):
                counts["pass"] += 1
            else:
                counts["fail"] += 1
                scan.witnesses.append({"branch": name, **rep.to_dict()})
        scan.counts[name] = counts
        logger.info("[degree] %s: %d pass, %d fail, %d invalid", name, counts["pass"],
                    counts["fail"], counts["invalid"])
    return scan
