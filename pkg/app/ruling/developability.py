"""
Developability of a sampled field: per-node classes, traced segments, the
crossing audit, a weak constancy test along the detected line field, and the
comparison of ∇u against ∇v.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, field_validator

from app.errors import BadInputError
from app.fields.calculus import d1, d2, grad
from app.fields.grid import Grid2, ScalarField, VectorField, align
from app.fields.quadrature import TestFunction, default_battery, integrate, w11_norm
from app.ruling.detect import (
    MIN_RHO_CELLS, NodeClass, check_rho, classify, field_scale, region_box, region_nodes,
)
from app.ruling.segments import Segment, crossing_audit, lipschitz_stats, trace_segments
from app.shape.forms import FormField, second_form
from app.surfaces.corpus import ImmersionField

logger = logging.getLogger(__name__)

SUPPORT_MARGIN_CELLS = 2
TOLERANCE_FLOOR = 1e-10     # fields flatter than this are constant at any tolerance


class RulingConfig(BaseModel):
    """Tolerances are relative to max |f − mean f| over the grid."""
    rho: Optional[float] = None       # default: rho_cells grid cells
    rho_cells: int = 5
    tol: float = 1e-4
    tol_w: float = 1e-5
    stride: int = 1
    abort_fraction: float = 0.5       # tracing is skipped above this ambiguous share
    angle_tol_deg: float = 1.0        # ∇u and ∇v rulings must agree within this

    @field_validator("rho_cells")
    @classmethod
    def enough_cells(cls, v):
        assert v >= MIN_RHO_CELLS, f"rho_cells must be >= {MIN_RHO_CELLS}, got {v}"
        return v

    @field_validator("tol", "tol_w", "angle_tol_deg")
    @classmethod
    def positive(cls, v):
        assert v > 0, f"tolerance must be positive, got {v}"
        return v

    @field_validator("stride")
    @classmethod
    def positive_stride(cls, v):
        assert v >= 1, f"stride must be >= 1, got {v}"
        return v

    def radius(self, grid: Grid2) -> float:
        return self.rho if self.rho is not None else self.rho_cells * max(grid.hx, grid.hy)


@dataclass(frozen=True, eq=False)
class RulingReport:
    grid: Grid2
    classes: np.ndarray               # NodeClass values, OUTSIDE where unsampled
    theta: np.ndarray                 # radians in [0, π) at ruled nodes, NaN elsewhere
    margin: np.ndarray
    defect: np.ndarray
    rho: float
    tol: float                        # absolute
    tol_w: float                      # absolute
    scale: float
    segments: list[Segment] = field(default_factory=list)
    crossings: int = 0
    crossing_pairs: list[tuple[int, int]] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    weak_residual: float = 0.0
    tracing_aborted: bool = False

    def count(self, cls: NodeClass) -> int:
        return int((self.classes == cls).sum())

    @property
    def sampled(self) -> int:
        return int((self.classes != NodeClass.OUTSIDE).sum())

    @property
    def ruled(self) -> np.ndarray:
        return self.classes == NodeClass.RULED

    @property
    def developable(self) -> bool:
        return (not self.tracing_aborted and self.count(NodeClass.AMBIGUOUS) == 0
                and self.crossings == 0 and self.weak_residual <= self.tol_w)

    def line_field(self) -> VectorField:
        return orient_line_field(self.grid, self.theta, self.ruled)

    def to_dict(self) -> dict:
        n = max(self.sampled, 1)
        return {
            "developable": self.developable,
            "sampled_nodes": self.sampled,
            "fractions": {c.name.lower(): self.count(c) / n
                          for c in (NodeClass.LOCALLY_CONSTANT, NodeClass.RULED, NodeClass.AMBIGUOUS)},
            "rho": self.rho, "tol": self.tol, "tol_w": self.tol_w, "scale": self.scale,
            "segments": len(self.segments),
            "truncated_segments": sum(s.truncated_start or s.truncated_end for s in self.segments),
            "crossings": self.crossings, "crossing_pairs": [list(p) for p in self.crossing_pairs],
            "weak_residual": self.weak_residual,
            "tracing_aborted": self.tracing_aborted,
            **self.stats,
        }


# ── Line field ────────────────────────────────────────────────────────────────

def orient_line_field(grid: Grid2, theta: np.ndarray, ruled: np.ndarray) -> VectorField:
    """
    Unit vectors η = ±(cos θ, sin θ) with signs agreeing with the mean axis of
    the ruled nodes; every other node carries the mean axis itself.
    """
    if ruled.any():
        z = np.exp(2j * theta[ruled]).sum()
        axis = 0.5 * math.atan2(z.imag, z.real) if abs(z) > 0 else 0.0
    else:
        axis = 0.0
    ax = np.array([math.cos(axis), math.sin(axis)])
    th = np.where(ruled, theta, axis)
    eta = np.stack([np.cos(th), np.sin(th)])
    flip = eta[0] * ax[0] + eta[1] * ax[1] < 0
    eta[:, flip] *= -1.0
    return VectorField(grid, eta)


def rotate_field_90(f):
    """Rotate the domain a quarter turn counterclockwise; values are carried unchanged."""
    g = f.grid
    new_grid = Grid2(g.ny, g.nx, -g.y1, g.x0, g.hy, g.hx)
    data = np.rot90(np.asarray(f.values if isinstance(f, ScalarField) else f.data), k=-1, axes=(-2, -1))
    if isinstance(f, ScalarField):
        return ScalarField(new_grid, np.ascontiguousarray(data))
    return VectorField(new_grid, np.ascontiguousarray(data))


# ── Weak constancy ────────────────────────────────────────────────────────────

def _div_psi_eta(psi: TestFunction, eta: VectorField, weight: np.ndarray | None = None) -> np.ndarray:
    g = eta.grid
    p = psi.realize(g).values
    if weight is not None:
        p = p * weight
    return d1(p * eta.data[0], g.hx) + d2(p * eta.data[1], g.hy)


def weak_constancy_test(f: VectorField, eta: VectorField, battery: list[TestFunction]) -> dict:
    """
    max over ψ and components m of |∫ f_m div(ψη)| / ‖ψ‖_{W^{1,1}}.

    Vanishes when every component of f is constant along the lines of η.
    """
    g = f.grid
    if eta.grid != g or eta.k != 2:
        raise BadInputError("line field must be a 2-component field on the grid of f")
    if not battery:
        raise BadInputError("empty test-function battery")
    per_psi = []
    for psi in battery:
        psi.check_support(g, margin_cells=SUPPORT_MARGIN_CELLS)
        dp = _div_psi_eta(psi, eta)
        worst = max(abs(integrate(f.data[m] * dp, g)) for m in range(f.k))
        per_psi.append({"psi": psi.label, "residual": worst / w11_norm(psi, g)})
    return {"max_residual": max(r["residual"] for r in per_psi), "per_psi": per_psi}


# ── Developability ────────────────────────────────────────────────────────────

def check_developability(f: VectorField, config: RulingConfig | None = None,
                         battery: list[TestFunction] | None = None,
                         threads: int | None = None) -> RulingReport:
    cfg = config or RulingConfig()
    g = f.grid
    rho = cfg.radius(g)
    check_rho(g, rho)
    scale = field_scale(f)
    tol = max(cfg.tol * scale, TOLERANCE_FLOOR)
    tol_w = max(cfg.tol_w * scale, TOLERANCE_FLOOR)
    J, I = region_nodes(g, rho, cfg.stride)
    out = classify(f, J, I, rho, tol, threads)

    def raster(values, fill):
        r = np.full(g.shape, fill, dtype=np.asarray(values).dtype)
        r[J, I] = values
        return r

    classes = raster(out["class"], NodeClass.OUTSIDE)
    theta = raster(out["theta"], np.nan)
    margin = raster(out["margin"], np.nan)
    defect = raster(out["defect"], np.nan)
    ruled = classes == NodeClass.RULED
    box = region_box(g, rho)

    n = J.size
    ambiguous = int((out["class"] == NodeClass.AMBIGUOUS).sum())
    aborted = ambiguous > cfg.abort_fraction * n
    logger.info("[ruling] %d nodes: constant=%d ruled=%d ambiguous=%d (rho=%.4g, tol=%.3g)", n,
                int((out["class"] == NodeClass.LOCALLY_CONSTANT).sum()), int(ruled.sum()), ambiguous, rho, tol)

    segments, crossings, pairs = [], 0, []
    if aborted:
        logger.warning("[ruling] %d/%d nodes ambiguous; tracing skipped", ambiguous, n)
    else:
        segments = trace_segments(f, theta, ruled, tol, box)
        crossings, pairs = crossing_audit(segments, coincidence=min(g.hx, g.hy))

    stats = lipschitz_stats(g, theta, ruled, box, cfg.stride)
    weak = math.inf
    if scale <= TOLERANCE_FLOOR:
        weak = 0.0
    elif not aborted:
        eta = orient_line_field(g, theta, ruled)
        weak = weak_constancy_test(f, eta, battery or default_battery(box))["max_residual"]
    report = RulingReport(g, classes, theta, margin, defect, rho, tol, tol_w, scale, segments,
                          crossings, pairs, stats, weak, aborted)
    logger.info("[ruling] developable=%s segments=%d crossings=%d weak=%.3g", report.developable,
                len(segments), crossings, weak)
    return report


# ── Comparison of ∇u and ∇v ───────────────────────────────────────────────────

def _angle_gap_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.degrees(np.abs(np.mod(a - b + math.pi / 2, math.pi) - math.pi / 2))


@dataclass(frozen=True, eq=False)
class RulingComparison:
    report_u: RulingReport
    report_v: RulingReport
    stats: dict
    angle_tol_deg: float = 1.0

    @property
    def angles_agree(self) -> bool:
        gap = self.stats["angle_gap_max_deg"]
        return gap is None or gap <= self.angle_tol_deg

    @property
    def agree(self) -> bool:
        """Same verdict, and where both fields are ruled the directions match."""
        return self.report_u.developable == self.report_v.developable and self.angles_agree

    def to_dict(self) -> dict:
        return {"agree": self.agree, "angles_agree": self.angles_agree,
                "angle_tol_deg": self.angle_tol_deg, "u": self.report_u.to_dict(),
                "v": self.report_v.to_dict(), **self.stats}


def compare_rulings(u: ImmersionField, v: ScalarField, config: RulingConfig | None = None,
                    threads: int | None = None) -> RulingComparison:
    """Ruling reports of ∇u and ∇v on the grid of v, with angle gaps where both are ruled."""
    g = v.grid
    fu = align(u.du.as_vector(), g)
    config = config or RulingConfig()
    ru = check_developability(fu, config, threads=threads)
    rv = check_developability(grad(v), config, threads=threads)
    both = ru.ruled & rv.ruled
    if both.any():
        gap = _angle_gap_deg(ru.theta[both], rv.theta[both])
        stats = {"both_ruled": int(both.sum()), "angle_gap_max_deg": float(gap.max()),
                 "angle_gap_mean_deg": float(gap.mean()),
                 "angle_gap_median_deg": float(np.median(gap))}
    else:
        stats = {"both_ruled": 0, "angle_gap_max_deg": None, "angle_gap_mean_deg": None,
                 "angle_gap_median_deg": None}
    cmp = RulingComparison(ru, rv, stats, config.angle_tol_deg)
    logger.info("[ruling] compare: agree=%s %s", cmp.agree, stats)
    return cmp


def transfer_pairing(u: ImmersionField, v: ScalarField, eps: float | None, eta: VectorField,
                     battery: list[TestFunction], form: FormField | None = None) -> list[dict]:
    """
    Per ψ: max over m, i of |∫ ∂ᵢu^m div(ψη) − ∫ ∂ᵢv div(N^{ε,m} ψη)| / ‖ψ‖_{W^{1,1}}.

    `form` reuses an already computed A^ε; otherwise it is built from u at eps.
    """
    g = v.grid
    if form is None:
        if eps is None:
            raise BadInputError("transfer pairing needs eps or a computed form")
        form = second_form(u, eps)
    normal = align(form.normal, g)
    du = align(u.du, g)
    dv = grad(v)
    eta = align(eta, g) if eta.grid != g else eta
    rows = []
    for psi in battery:
        psi.check_support(g, margin_cells=SUPPORT_MARGIN_CELLS)
        plain = _div_psi_eta(psi, eta)
        gap = 0.0
        for m in range(3):
            weighted = _div_psi_eta(psi, eta, normal.data[m])
            for i in range(2):
                left = integrate(du.data[i, m] * plain, g)
                right = integrate(dv.data[i] * weighted, g)
                gap = max(gap, abs(left - right))
        rows.append({"psi": psi.label, "discrepancy": gap / w11_norm(psi, g)})
    return rows
