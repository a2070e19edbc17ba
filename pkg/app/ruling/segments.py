"""
Ruling segments: chords extended from ruled nodes while the field stays within
tolerance, plus the audit that no two traced segments cross.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from app.fields.grid import Grid2, VectorField
from app.ruling.detect import sample_at

logger = logging.getLogger(__name__)

CROSSING_EPS = 1e-9
PARALLEL_EPS = 1e-12
MAX_LISTED_CROSSINGS = 20


@dataclass(frozen=True)
class Segment:
    seed: tuple[int, int]
    start: tuple[float, float]
    end: tuple[float, float]
    theta: float
    truncated_start: bool
    truncated_end: bool

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    def to_dict(self) -> dict:
        return {"seed": list(self.seed), "start": list(self.start), "end": list(self.end),
                "theta_deg": math.degrees(self.theta), "length": self.length,
                "truncated": [self.truncated_start, self.truncated_end]}


def _exit_distance(point: np.ndarray, e: np.ndarray, box) -> float:
    """Largest t ≥ 0 with point + t·e inside box."""
    x0, y0, x1, y1 = box
    t = math.inf
    for p, d, lo, hi in ((point[0], e[0], x0, x1), (point[1], e[1], y0, y1)):
        if d > 1e-15:
            t = min(t, (hi - p) / d)
        elif d < -1e-15:
            t = min(t, (lo - p) / d)
    return max(t, 0.0)


def _extend(f: VectorField, point: np.ndarray, e: np.ndarray, base: np.ndarray,
            tol: float, box) -> tuple[np.ndarray, bool]:
    g = f.grid
    t_max = _exit_distance(point, e, box)
    step = 0.5 * min(g.hx, g.hy)
    t = np.append(np.arange(step, t_max, step), t_max) if t_max > 0 else np.zeros(1)
    xs = point[0] + t * e[0]
    ys = point[1] + t * e[1]
    vals = sample_at(f, (ys - g.y0) / g.hy, (xs - g.x0) / g.hx)
    dev = np.sqrt(((vals - base[:, None]) ** 2).sum(axis=0))
    bad = np.flatnonzero(dev > tol)
    if bad.size == 0:
        return point + t_max * e, True
    reach = t[bad[0] - 1] if bad[0] > 0 else 0.0
    return point + reach * e, False


def _cover(covered: np.ndarray, grid: Grid2, a: np.ndarray, b: np.ndarray) -> None:
    n = max(2, int(math.ceil(math.dist(a, b) / (0.5 * min(grid.hx, grid.hy)))) + 1)
    s = np.linspace(0.0, 1.0, n)
    i = np.rint((a[0] + s * (b[0] - a[0]) - grid.x0) / grid.hx).astype(int)
    j = np.rint((a[1] + s * (b[1] - a[1]) - grid.y0) / grid.hy).astype(int)
    keep = (i >= 0) & (i < grid.nx) & (j >= 0) & (j < grid.ny)
    covered[j[keep], i[keep]] = True


def trace_segments(f: VectorField, theta: np.ndarray, ruled: np.ndarray, tol: float,
                   box) -> list[Segment]:
    """
    One segment per uncovered ruled node, in raster order. A node already lying
    on a traced segment is skipped. Endpoints that reach `box` are flagged as
    truncated.
    """
    g = f.grid
    covered = np.zeros(g.shape, dtype=bool)
    segments = []
    for j, i in zip(*np.nonzero(ruled)):
        if covered[j, i]:
            continue
        th = float(theta[j, i])
        e = np.array([math.cos(th), math.sin(th)])
        p = np.array(g.point(int(i), int(j)))
        base = f.data[:, j, i]
        end, trunc_end = _extend(f, p, e, base, tol, box)
        start, trunc_start = _extend(f, p, -e, base, tol, box)
        segments.append(Segment((int(i), int(j)), (float(start[0]), float(start[1])),
                                (float(end[0]), float(end[1])), th, trunc_start, trunc_end))
        _cover(covered, g, start, end)
        covered[j, i] = True
    logger.info("[ruling] traced %d segments from %d ruled nodes", len(segments), int(ruled.sum()))
    return segments


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _line_distance(points: np.ndarray, origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
    n = direction / np.linalg.norm(direction)
    rel = points - origin
    return np.abs(rel[:, 0] * n[1] - rel[:, 1] * n[0])


def crossing_audit(segments: list[Segment], coincidence: float = 0.0) -> tuple[int, list[tuple[int, int]]]:
    """
    Count pairs of segments meeting at a point interior to both. Pairs whose
    endpoints all lie within `coincidence` of the other line are one ruling
    at this resolution and do not count.
    """
    if len(segments) < 2:
        return 0, []
    p = np.array([s.start for s in segments])
    q = np.array([s.end for s in segments])
    r = q - p
    qp_x = p[None, :, 0] - p[:, None, 0]
    qp_y = p[None, :, 1] - p[:, None, 1]
    rx, ry = r[:, None, 0], r[:, None, 1]
    sx, sy = r[None, :, 0], r[None, :, 1]
    denom = _cross(rx, ry, sx, sy)
    lengths = np.hypot(r[:, 0], r[:, 1])
    scale = lengths[:, None] * lengths[None, :]
    proper = np.abs(denom) > PARALLEL_EPS * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _cross(qp_x, qp_y, sx, sy) / denom
        u = _cross(qp_x, qp_y, rx, ry) / denom
    hit = proper & (t > CROSSING_EPS) & (t < 1 - CROSSING_EPS) & (u > CROSSING_EPS) & (u < 1 - CROSSING_EPS)
    hit = np.triu(hit, k=1)
    pairs = []
    for a, b in zip(*np.nonzero(hit)):
        if coincidence > 0:
            gap = max(_line_distance(np.stack([p[b], q[b]]), p[a], r[a]).max(),
                      _line_distance(np.stack([p[a], q[a]]), p[b], r[b]).max())
            if gap <= coincidence:
                continue
        pairs.append((int(a), int(b)))
    if pairs:
        logger.warning("[ruling] %d crossing segment pairs", len(pairs))
    return len(pairs), pairs[:MAX_LISTED_CROSSINGS]


def lipschitz_stats(grid: Grid2, theta: np.ndarray, ruled: np.ndarray, box, stride: int = 1) -> dict:
    """
    Finite-difference Lipschitz estimate of the line field θ mod π over
    neighbouring ruled nodes, and its product with the distance to the box edge.
    """
    x0, y0, x1, y1 = box
    X, Y = grid.mesh()
    dist = np.minimum.reduce([X - x0, x1 - X, Y - y0, y1 - Y])
    lip = np.zeros(grid.shape)
    for axis, h in ((1, grid.hx), (0, grid.hy)):
        a = [slice(None), slice(None)]
        b = [slice(None), slice(None)]
        a[axis] = slice(0, -stride)
        b[axis] = slice(stride, None)
        both = ruled[tuple(a)] & ruled[tuple(b)]
        d = np.abs(np.mod(theta[tuple(b)] - theta[tuple(a)] + math.pi / 2, math.pi) - math.pi / 2)
        slope = np.where(both, d / (stride * h), 0.0)
        view = lip[tuple(a)]
        np.maximum(view, slope, out=view)
    if not ruled.any():
        return {"lipschitz_max": 0.0, "lipschitz_distance_max": 0.0}
    return {"lipschitz_max": float(lip[ruled].max()),
            "lipschitz_distance_max": float((lip * np.maximum(dist, 0.0))[ruled].max())}
