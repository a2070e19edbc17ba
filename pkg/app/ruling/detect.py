"""
Locally constant regions and ruling directions of a sampled vector field.

For a node x and a direction θ the chord defect is

  D(θ) = max over chord samples s of |f(x + s·e_θ) − f(x)|,   |s| ≤ ρ

with bilinear interpolation and the Euclidean norm over components (so a
rigid motion of the values leaves every defect unchanged). D is evaluated
on N_CANDIDATES directions of [0, π) for all nodes at once, its local minima
come from find_peaks on the circularly extended −D, and the best candidate
is refined by a vectorized golden-section search within one candidate step.
"""
from dataclasses import dataclass
from enum import IntEnum
import logging
import math

import numpy as np
from scipy import ndimage
from scipy.signal import find_peaks

from app.errors import BadInputError
from app.fields.grid import Grid2, VectorField
from app.parallel import ordered_map

logger = logging.getLogger(__name__)

N_CANDIDATES = 360
MIN_RHO_CELLS = 3
GOLDEN_ITERATIONS = 32
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class NodeClass(IntEnum):
    OUTSIDE = -1
    LOCALLY_CONSTANT = 0
    RULED = 1
    AMBIGUOUS = 2


@dataclass(frozen=True)
class Direction:
    node_class: NodeClass
    theta: float | None
    margin: float
    defect: float


# ── Geometry helpers ──────────────────────────────────────────────────────────

def check_rho(grid: Grid2, rho: float) -> None:
    if rho < MIN_RHO_CELLS * max(grid.hx, grid.hy) * (1 - 1e-12):
        raise BadInputError(
            f"rho={rho:.4g} below {MIN_RHO_CELLS} grid cells ({MIN_RHO_CELLS * max(grid.hx, grid.hy):.4g})")


def disk_margins(grid: Grid2, rho: float) -> tuple[int, int]:
    return (int(math.ceil(rho / grid.hx - 1e-9)), int(math.ceil(rho / grid.hy - 1e-9)))


def region_nodes(grid: Grid2, rho: float, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(J, I) of nodes whose disk B(x, ρ) lies inside the grid, every `stride`-th node."""
    mx, my = disk_margins(grid, rho)
    if grid.nx - 2 * mx < 1 or grid.ny - 2 * my < 1:
        raise BadInputError(f"rho={rho:.4g} leaves no node whose disk fits the grid")
    jj, ii = np.meshgrid(np.arange(my, grid.ny - my, stride), np.arange(mx, grid.nx - mx, stride),
                         indexing="ij")
    return jj.ravel(), ii.ravel()


def region_box(grid: Grid2, rho: float) -> tuple[float, float, float, float]:
    mx, my = disk_margins(grid, rho)
    return (grid.x0 + mx * grid.hx, grid.y0 + my * grid.hy,
            grid.x0 + (grid.nx - 1 - mx) * grid.hx, grid.y0 + (grid.ny - 1 - my) * grid.hy)


def field_scale(f: VectorField) -> float:
    """max |f(x) − mean f|, the reference for relative tolerances."""
    d = f.data.reshape(f.k, -1)
    dev = d - d.mean(axis=1, keepdims=True)
    return float(np.sqrt((dev ** 2).sum(axis=0)).max())


def sample_at(f: VectorField, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Bilinear values at fractional (row, col) index positions; shape (k,) + rows.shape."""
    coords = np.stack([rows.ravel(), cols.ravel()])
    out = np.stack([ndimage.map_coordinates(f.data[c], coords, order=1, mode="nearest")
                    for c in range(f.k)])
    return out.reshape((f.k,) + rows.shape)


def _chord(grid: Grid2, rho: float) -> np.ndarray:
    K = max(MIN_RHO_CELLS, int(math.ceil(rho / min(grid.hx, grid.hy))))
    return rho * np.arange(-K, K + 1) / K


# ── Oscillation and constancy ─────────────────────────────────────────────────

def disk_oscillation(f: VectorField, rho: float, J: np.ndarray, I: np.ndarray) -> np.ndarray:
    """max over y ∈ B(x, ρ) of |f(y) − f(x)| at the nodes (J, I)."""
    g = f.grid
    mx, my = disk_margins(g, rho)
    base = f.data[:, J, I]
    osc = np.zeros(J.size)
    for dj in range(-my, my + 1):
        for di in range(-mx, mx + 1):
            if (di * g.hx) ** 2 + (dj * g.hy) ** 2 > rho ** 2 * (1 + 1e-12):
                continue
            diff = f.data[:, J + dj, I + di] - base
            np.maximum(osc, np.sqrt((diff ** 2).sum(axis=0)), out=osc)
    return osc


def constancy_mask(f: VectorField, rho: float, tol: float) -> np.ndarray:
    """Node raster: True iff the oscillation over B(x, ρ) is at most tol."""
    g = f.grid
    check_rho(g, rho)
    J, I = region_nodes(g, rho)
    mask = np.zeros(g.shape, dtype=bool)
    mask[J, I] = disk_oscillation(f, rho, J, I) <= tol
    return mask


# ── Chord defects ─────────────────────────────────────────────────────────────

def chord_defects(f: VectorField, J: np.ndarray, I: np.ndarray, theta, rho: float) -> np.ndarray:
    """D at nodes (J, I) for one direction per node (theta array) or a shared scalar θ."""
    g = f.grid
    s = _chord(g, rho)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), J.shape)
    rows = J[None, :] + s[:, None] * np.sin(theta)[None, :] / g.hy
    cols = I[None, :] + s[:, None] * np.cos(theta)[None, :] / g.hx
    vals = sample_at(f, rows, cols)
    diff = vals - f.data[:, J, I][:, None, :]
    return np.sqrt((diff ** 2).sum(axis=0)).max(axis=0)


def candidate_thetas() -> np.ndarray:
    return np.arange(N_CANDIDATES) * (math.pi / N_CANDIDATES)


def defect_table(f: VectorField, J: np.ndarray, I: np.ndarray, rho: float,
                 threads: int | None = None) -> np.ndarray:
    """D for every candidate direction; shape (N_CANDIDATES, nodes)."""
    rows = ordered_map(lambda t: chord_defects(f, J, I, t, rho), list(candidate_thetas()), threads)
    return np.stack(rows)


def _local_minima(column: np.ndarray) -> tuple[int, float, float]:
    """(best index, best value, margin) from the circular defect profile of one node."""
    n = column.size
    peaks, _ = find_peaks(-np.concatenate([column, column, column]))
    peaks = peaks[(peaks >= n) & (peaks < 2 * n)] - n
    if peaks.size == 0:
        return int(np.argmin(column)), float(column.min()), 0.0
    vals = column[peaks]
    order = np.lexsort((peaks, vals))
    best = int(peaks[order[0]])
    if peaks.size == 1:
        margin = float(column.max() - vals[order[0]])
    else:
        margin = float(vals[order[1]] - vals[order[0]])
    return best, float(vals[order[0]]), margin


def refine_directions(f: VectorField, J: np.ndarray, I: np.ndarray, theta: np.ndarray,
                      rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Golden-section search of D within ±π/N_CANDIDATES, all nodes in lockstep."""
    step = math.pi / N_CANDIDATES
    a, b = theta - step, theta + step
    for _ in range(GOLDEN_ITERATIONS):
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        left = chord_defects(f, J, I, c, rho) <= chord_defects(f, J, I, d, rho)
        a, b = np.where(left, a, c), np.where(left, d, b)
    mid = 0.5 * (a + b)
    return mid, chord_defects(f, J, I, mid, rho)


def classify(f: VectorField, J: np.ndarray, I: np.ndarray, rho: float, tol: float,
             threads: int | None = None) -> dict:
    """Per-node class, θ ∈ [0, π), margin and defect for the nodes (J, I)."""
    osc = disk_oscillation(f, rho, J, I)
    n = J.size
    cls = np.full(n, NodeClass.AMBIGUOUS, dtype=np.int8)
    theta = np.full(n, np.nan)
    margin = np.zeros(n)
    defect = np.full(n, np.nan)

    constant = osc <= tol
    cls[constant] = NodeClass.LOCALLY_CONSTANT
    todo = np.flatnonzero(~constant)
    if todo.size:
        table = defect_table(f, J[todo], I[todo], rho, threads)
        thetas = candidate_thetas()
        for col, node in enumerate(todo):
            k, value, gap = _local_minima(table[:, col])
            theta[node], defect[node], margin[node] = thetas[k], value, gap
        sel = todo[(margin[todo] >= tol) & (defect[todo] > 0)]
        if sel.size:
            refined, rdef = refine_directions(f, J[sel], I[sel], theta[sel], rho)
            better = rdef < defect[sel]
            theta[sel] = np.where(better, np.mod(refined, math.pi), theta[sel])
            defect[sel] = np.where(better, rdef, defect[sel])
        ruled = todo[(defect[todo] <= tol) & (margin[todo] >= tol)]
        cls[ruled] = NodeClass.RULED
        theta[np.flatnonzero(cls != NodeClass.RULED)] = np.nan
    return {"class": cls, "theta": theta, "margin": margin, "defect": defect, "osc": osc}


def ruling_direction(f: VectorField, node: tuple[int, int], rho: float, tol: float) -> Direction:
    """Classify a single node (i, j)."""
    g = f.grid
    check_rho(g, rho)
    i, j = node
    mx, my = disk_margins(g, rho)
    if not (mx <= i < g.nx - mx and my <= j < g.ny - my):
        raise BadInputError(f"disk of radius {rho:.4g} around node ({i}, {j}) leaves the grid")
    out = classify(f, np.array([j]), np.array([i]), rho, tol, threads=1)
    cls = NodeClass(int(out["class"][0]))
    theta = float(out["theta"][0]) if cls is NodeClass.RULED else None
    return Direction(cls, theta, float(out["margin"][0]), float(out["defect"][0]))
