"""
Hölder-modulus diagnostics.

  [f]_{0,α|r} = max over node pairs 0 < |x−y| ≤ r of |f(x)−f(y)| / |x−y|^α
  ω_f(r)      = max over the same pairs of |f(x)−f(y)|

Pairs are bucketed by their integer node offset: each offset is one
vectorized array comparison, and the profile at r is the running maximum
over offsets sorted by length. Grids above SUBSAMPLE_THRESHOLD nodes compare
only a stratified sample of anchor nodes (one random node per block, fixed
seed) against all their neighbours; the profile records that it did so.
"""
from dataclasses import dataclass
from enum import Enum
import logging
import math

import numpy as np

from app.errors import BadInputError
from app.fields.grid import ScalarField

logger = logging.getLogger(__name__)

SUBSAMPLE_THRESHOLD = 256 * 256
ANCHOR_TARGET = 4096
PLATEAU_SLOPE = 0.1
ZERO_FLOOR = 1e-14


class HolderVerdict(str, Enum):
    MEMBER = "member"
    NON_MEMBER = "non-member"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class HolderProfile:
    alpha: float
    scales: tuple[float, ...]          # descending
    values: tuple[float, ...]          # [f]_{0,α|r}
    omega: tuple[float, ...]           # ω_f(r)
    subsampled: bool = False
    anchors: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "scales": list(self.scales), "values": list(self.values),
                "omega": list(self.omega), "subsampled": self.subsampled,
                "anchors": self.anchors}


def _offsets(hx: float, hy: float, r_max: float):
    """Half-plane integer offsets (di, dj) with 0 < length ≤ r_max, sorted by length."""
    mi = int(math.floor(r_max / hx + 1e-9))
    mj = int(math.floor(r_max / hy + 1e-9))
    di, dj = np.meshgrid(np.arange(-mi, mi + 1), np.arange(0, mj + 1), indexing="xy")
    di, dj = di.ravel(), dj.ravel()
    keep = (dj > 0) | ((dj == 0) & (di > 0))
    di, dj = di[keep], dj[keep]
    dist = np.sqrt((di * hx) ** 2 + (dj * hy) ** 2)
    keep = dist <= r_max * (1 + 1e-12)
    di, dj, dist = di[keep], dj[keep], dist[keep]
    order = np.lexsort((di, dj, dist))
    return di[order], dj[order], dist[order]


def _shifted_pairs(vals: np.ndarray, di: int, dj: int) -> np.ndarray:
    ny, nx = vals.shape
    if di >= 0:
        a = vals[0:ny - dj, 0:nx - di]
        b = vals[dj:ny, di:nx]
    else:
        a = vals[0:ny - dj, -di:nx]
        b = vals[dj:ny, 0:nx + di]
    return np.abs(b - a)


def _anchor_nodes(shape: tuple[int, int], seed: int) -> tuple[np.ndarray, np.ndarray]:
    ny, nx = shape
    block = max(1, int(math.ceil(math.sqrt(nx * ny / ANCHOR_TARGET))))
    rng = np.random.default_rng(seed)
    js, is_ = [], []
    for j0 in range(0, ny, block):
        for i0 in range(0, nx, block):
            js.append(j0 + rng.integers(0, min(block, ny - j0)))
            is_.append(i0 + rng.integers(0, min(block, nx - i0)))
    return np.array(js), np.array(is_)


def _anchor_diffs(vals: np.ndarray, aj: np.ndarray, ai: np.ndarray, di: int, dj: int) -> np.ndarray:
    ny, nx = vals.shape
    out = []
    for sgn in (1, -1):
        bj, bi = aj + sgn * dj, ai + sgn * di
        ok = (bj >= 0) & (bj < ny) & (bi >= 0) & (bi < nx)
        out.append(np.abs(vals[bj[ok], bi[ok]] - vals[aj[ok], ai[ok]]))
    return np.concatenate(out)


def holder_profile(f: ScalarField, alpha: float, scales, seed: int = 0) -> HolderProfile:
    if not 0 < alpha < 1:
        raise BadInputError(f"alpha must lie in (0, 1), got {alpha}")
    g = f.grid
    scales = sorted((float(r) for r in scales), reverse=True)
    if not scales:
        raise BadInputError("no scales given")
    for r in scales:
        if r <= 0 or r > g.diameter * (1 + 1e-12):
            raise BadInputError(f"scale {r} outside (0, {g.diameter:.4g}]")
    if scales[-1] < min(g.hx, g.hy) * (1 - 1e-12):
        raise BadInputError(
            f"no node pairs within r={scales[-1]:.3e} (grid spacing {min(g.hx, g.hy):.3e})")

    di, dj, dist = _offsets(g.hx, g.hy, scales[0])
    vals = f.values
    subsampled = g.size > SUBSAMPLE_THRESHOLD
    if subsampled:
        aj, ai = _anchor_nodes(g.shape, seed)
        logger.info("[holder] %dx%d grid above threshold: %d stratified anchors (seed %d)",
                    g.nx, g.ny, aj.size, seed)

    wmax = np.zeros(dist.size)
    for k in range(dist.size):
        diffs = (_anchor_diffs(vals, aj, ai, int(di[k]), int(dj[k])) if subsampled
                 else _shifted_pairs(vals, int(di[k]), int(dj[k])))
        if diffs.size:
            wmax[k] = np.max(diffs)
    qmax = wmax / dist ** alpha

    cq = np.maximum.accumulate(qmax)
    cw = np.maximum.accumulate(wmax)
    values, omega = [], []
    for r in scales:
        idx = int(np.searchsorted(dist, r * (1 + 1e-12), side="right")) - 1
        if idx < 0:
            raise BadInputError(f"no node pairs within r={r:.3e}")
        values.append(float(cq[idx]))
        omega.append(float(cw[idx]))
    return HolderProfile(alpha, tuple(scales), tuple(values), tuple(omega),
                         subsampled, int(aj.size) if subsampled else 0, seed)


def holder_profile_all_pairs(f: ScalarField, alpha: float, scales) -> HolderProfile:
    """Brute-force reference over every node pair; small grids only."""
    g = f.grid
    jj, ii = np.divmod(np.arange(g.size), g.nx)
    v = f.flat
    dI = np.subtract.outer(ii, ii)
    dJ = np.subtract.outer(jj, jj)
    dist = np.sqrt((dI * g.hx) ** 2 + (dJ * g.hy) ** 2)
    diff = np.abs(np.subtract.outer(v, v))
    scales = sorted((float(r) for r in scales), reverse=True)
    values, omega = [], []
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(dist > 0, diff / dist ** alpha, 0.0)
    for r in scales:
        mask = (dist > 0) & (dist <= r * (1 + 1e-12))
        values.append(float(np.max(quot[mask])))
        omega.append(float(np.max(diff[mask])))
    return HolderProfile(alpha, tuple(scales), tuple(values), tuple(omega))


def profile_slope(profile: HolderProfile) -> float:
    """Log–log slope of the positive profile values against r."""
    r = np.array(profile.scales)
    v = np.array(profile.values)
    pos = v > ZERO_FLOOR
    if pos.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(r[pos]), np.log(v[pos]), 1)[0])


def little_holder_verdict(profile: HolderProfile, threshold: float) -> HolderVerdict:
    scales = np.array(profile.scales)
    values = np.array(profile.values)
    if scales.size < 4 or scales.max() < 4 * scales.min() * (1 - 1e-12):
        logger.warning("[holder] profile spans too few scales for a verdict (%d scales)", scales.size)
        return HolderVerdict.INCONCLUSIVE
    if values.max() <= ZERO_FLOOR:
        return HolderVerdict.MEMBER
    slope = profile_slope(profile)
    smallest = float(values[np.argmin(scales)])
    if slope > 0 and smallest < threshold:
        return HolderVerdict.MEMBER
    if smallest >= threshold and slope <= PLATEAU_SLOPE:
        return HolderVerdict.NON_MEMBER
    return HolderVerdict.INCONCLUSIVE
