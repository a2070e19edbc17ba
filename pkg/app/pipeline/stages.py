"""
Pipeline stages. Each stage takes fields plus the experiment config and
returns a StageOutput: a JSON-ready summary, gate rows, report measurements
and the artifact files it wrote. The workflow and the CLI subcommands share
these functions.
"""
from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path

import numpy as np

from app.errors import BadInputError, NoValidQueriesError
from app.fields.fld1 import read_fld1, read_matrix, write_fld1
from app.fields.grid import Grid2, ScalarField, VectorField, trim
from app.fields.quadrature import TestFunction, default_battery, w11_norm
from app.pipeline.config import POTENTIAL_MIN_ALPHA, ExperimentConfig
from app.potential.reconstruct import PotentialResult, gradient_holder_diagnostic, reconstruct_potential
from app.ruling.detect import region_box
from app.ruling.developability import RulingReport, check_developability, compare_rulings, transfer_pairing
from app.shape.forms import STENCIL_MARGIN, FormField, second_form, second_form_bound
from app.shape.residuals import (
    christoffel_rate, codazzi_residual, curl_rate, gauss_pairing_rate, ladder_battery,
    metric_deviation, normal_deviation, pairing_max, residual_rows,
)
from app.surfaces.corpus import ImmersionField, generate
from app.surfaces.metric import isometry_defect
from app.weakdet.degree import DegreeScan, degree_scan
from app.weakdet.pairing import component_pairing, ma_pairing

logger = logging.getLogger(__name__)

RATE_LABELS = {"metric_C1": "metric_dev_C1", "metric_C0": "metric_dev_C0"}
BATTERY_MARGIN_CELLS = 3
COMPONENT_PAIRING_PSIS = 5


@dataclass
class StageOutput:
    summary: dict = field(default_factory=dict)
    gates: list = field(default_factory=list)
    measurements: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def gate(self, name: str, value, threshold, passed: bool) -> None:
        self.gates.append({"gate": name, "value": plain(value), "threshold": plain(threshold),
                           "pass": bool(passed)})
        self.measure(f"gate:{name}", None, value, passed=passed)
        if not passed:
            logger.warning("[pipeline] gate %s failed: value %s, threshold %s", name, value, threshold)

    def measure(self, quantity: str, eps, value, fitted=None, required=None, passed=None) -> None:
        self.measurements.append({"quantity": quantity, "eps": eps, "value": plain(value),
                                  "fitted_exponent": plain(fitted), "required_exponent": plain(required),
                                  "pass": None if passed is None else bool(passed)})

    def write_json(self, out_dir, name: str, doc: dict) -> None:
        if out_dir is None:
            return
        path = Path(out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(plain(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.artifacts[name] = str(path)

    def write_field(self, out_dir, name: str, fld) -> None:
        if out_dir is None:
            return
        self.artifacts[name] = str(write_fld1(Path(out_dir) / name, fld))


def plain(value, finite: bool = False):
    """
    Numpy scalars and arrays inside a document become JSON-native values.
    finite=True also maps inf/nan to None (strict JSON, as HTTP responses need).
    """
    if isinstance(value, dict):
        return {str(k): plain(v, finite) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v, finite) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist(), finite)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if finite and not math.isfinite(value) else value
    return value


# ── Immersion files ───────────────────────────────────────────────────────────

def sidecar_path(path) -> Path:
    """u.fld → u.du.fld"""
    path = Path(path)
    return path.with_name(path.stem + ".du" + path.suffix)


def write_immersion(u: ImmersionField, path) -> dict:
    return {"u": str(write_fld1(path, u.u)), "du": str(write_fld1(sidecar_path(path), u.du))}


def load_immersion(path, tag: str = "") -> ImmersionField:
    u = read_fld1(path)
    if not isinstance(u, VectorField) or u.k != 3:
        raise BadInputError(f"{path}: an immersion file holds 3 components")
    du = read_matrix(sidecar_path(path), 2, 3)
    return ImmersionField(u, du, tag=tag)


def inner_box(grid: Grid2, cells: int = BATTERY_MARGIN_CELLS) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = grid.box
    return (x0 + cells * grid.hx, y0 + cells * grid.hy, x1 - cells * grid.hx, y1 - cells * grid.hy)


# ── Stages ────────────────────────────────────────────────────────────────────

def gen_stage(cfg: ExperimentConfig, out_dir=None) -> tuple[ImmersionField, StageOutput]:
    u = generate(cfg.surface, cfg.grid())
    out = StageOutput(summary={"tag": cfg.surface.tag.value, "params": cfg.surface.params,
                               "grid": u.grid.to_dict(), "c0": u.c0})
    if out_dir is not None:
        for key, path in write_immersion(u, Path(out_dir) / "u.fld").items():
            out.artifacts[f"{key}.fld"] = path
    return u, out


def isometry_stage(u: ImmersionField, cfg: ExperimentConfig) -> StageOutput:
    defect = isometry_defect(u)
    out = StageOutput(summary={"defect": defect})
    out.gate("isometry", defect, cfg.gates.isometry_max, defect <= cfg.gates.isometry_max)
    return out


def sff_stage(u: ImmersionField, eps: float, out_dir=None) -> tuple[FormField, StageOutput]:
    form = second_form(u, eps)
    bound = second_form_bound(form)
    out = StageOutput(summary={"eps": eps, "grid": form.grid.to_dict(),
                               "alt_discrepancy": form.alt_discrepancy, "bound": bound})
    out.measure("A_sup", eps, bound["A_sup"])
    out.measure("alt_discrepancy", eps, form.alt_discrepancy)
    out.write_field(out_dir, f"A_eps={eps:g}.fld", form.form)
    return form, out


def residuals_stage(u: ImmersionField, form: FormField, cfg: ExperimentConfig,
                    threads: int | None = None, out_dir=None) -> StageOutput:
    ladder = cfg.scale_ladder()
    alpha = cfg.alpha
    rows = residual_rows(u, ladder, threads=threads)
    fits = [
        metric_deviation(u, ladder, "C1", alpha=alpha, threads=threads),
        metric_deviation(u, ladder, "C0", alpha=alpha, threads=threads),
        normal_deviation(u, ladder, alpha=alpha, threads=threads),
        christoffel_rate(u, ladder, alpha=alpha, threads=threads),
        curl_rate(u, ladder, alpha=alpha, threads=threads),
        gauss_pairing_rate(u, ladder, alpha=alpha, threads=threads),
    ]
    codazzi = codazzi_residual(form)[1]
    gauss = pairing_max(form, ladder_battery(u, ladder))
    out = StageOutput(summary={"rows": rows, "rates": [f.to_dict() for f in fits],
                               "codazzi_sup": codazzi, "gauss_pairing_max": gauss,
                               "ladder": ladder.to_dict()})
    for row in rows:
        for key, value in row.items():
            if key != "eps":
                out.measure(key, row["eps"], value)
    for fit in fits:
        label = RATE_LABELS.get(fit.quantity, fit.quantity)
        out.measure(label, None, fit.values[-1], fit.exponent, fit.required_exponent, fit.passes)
    if cfg.gates.rates:
        failing = [f.quantity for f in fits if not f.passes]
        out.gate("rates", len(failing), 0, not failing)
    out.gate("codazzi", codazzi, cfg.gates.codazzi_max, codazzi <= cfg.gates.codazzi_max)
    out.gate("gauss_pairing", gauss, cfg.gates.gauss_pairing_max, gauss <= cfg.gates.gauss_pairing_max)
    out.write_json(out_dir, "residuals.json", out.summary)
    return out


def potential_stage(form: FormField, cfg: ExperimentConfig, threads: int | None = None,
                    out_dir=None) -> tuple[PotentialResult, StageOutput]:
    res = reconstruct_potential(form, threads=threads)
    g = res.v.grid
    eps = form.eps
    a_sup = trim(form.form, STENCIL_MARGIN).max_abs()
    bound = max(cfg.gates.hessian_gap_factor * max(10 * g.h ** 2, 5 * eps ** 2) * a_sup,
                cfg.gates.hessian_gap_floor)
    scales = [k * g.h for k in (16, 8, 4, 2)]
    profiles, verdict = gradient_holder_diagnostic(res.v, cfg.alpha, scales, cfg.holder_threshold,
                                                   cfg.seed)
    out = StageOutput(summary={**res.to_dict(), "eps": eps, "hessian_gap_bound": bound,
                               "gradient_holder": {"verdict": verdict.value,
                                                   "profiles": [p.to_dict() for p in profiles]}})
    out.measure("hessian_gap", eps, res.hessian_gap)
    out.measure("curl_gap", eps, res.curl_gap)
    out.gate("potential_alpha", cfg.alpha, POTENTIAL_MIN_ALPHA, cfg.alpha >= POTENTIAL_MIN_ALPHA - 1e-12)
    out.gate("hessian_gap", res.hessian_gap, bound, res.hessian_gap <= bound)
    out.write_field(out_dir, "v.fld", res.v)
    out.write_json(out_dir, "potential.json", out.summary)
    return res, out


def battery_for(grid: Grid2, order: int = 4) -> list[TestFunction]:
    return default_battery(inner_box(grid), order)


def ma_stage(u: ImmersionField | None, v: ScalarField, eps: float | None, cfg: ExperimentConfig,
             out_dir=None) -> StageOutput:
    g = v.grid
    battery = battery_for(g, cfg.battery_order)
    rows = [{"psi": psi.label, "pairing": ma_pairing(v, psi) / w11_norm(psi, g)} for psi in battery]
    worst = max(abs(r["pairing"]) for r in rows)
    out = StageOutput(summary={"pairings": rows, "max_abs": worst})
    for r in rows:
        out.measure(f"ma_pairing[{r['psi']}]", eps, r["pairing"])
    if u is not None and eps is not None:
        comps = np.array([component_pairing(u, eps, psi) for psi in battery[:COMPONENT_PAIRING_PSIS]])
        comp_max = np.abs(comps).max(axis=0)
        out.summary["component_pairing_max"] = [float(c) for c in comp_max]
        for m, value in enumerate(comp_max):
            out.measure(f"component_pairing_u{m + 1}", eps, value)
    out.gate("ma_pairing", worst, cfg.gates.ma_max, worst <= cfg.gates.ma_max)
    out.write_json(out_dir, "ma.json", out.summary)
    return out


def checked_degree_scan(v: ScalarField, **kwargs) -> DegreeScan:
    """degree_scan that refuses a scan in which no query was valid."""
    scan = degree_scan(v, **kwargs)
    if scan.all_invalid:
        raise NoValidQueriesError(
            f"all {sum(sum(c.values()) for c in scan.counts.values())} degree queries invalid "
            f"on a {v.grid.nx}x{v.grid.ny} grid; refine the grid or the boundary polyline")
    return scan


def degree_stage(v: ScalarField, cfg: ExperimentConfig, threads: int | None = None,
                 out_dir=None) -> StageOutput:
    d = cfg.degree
    scan = checked_degree_scan(v, deltas=d.deltas, samples=d.samples, seed=cfg.seed,
                               per_side=d.per_side, threads=threads)
    out = StageOutput(summary=scan.to_dict())
    for branch, counts in scan.counts.items():
        out.measure(f"degree_fails[{branch}]", None, counts["fail"])
    out.gate("degree", scan.fails, cfg.gates.degree_fails_max, scan.fails <= cfg.gates.degree_fails_max)
    out.write_json(out_dir, "degree.json", out.summary)
    return out


def ruling_document(report: RulingReport) -> dict:
    return {**report.to_dict(), "segment_polylines": [s.to_dict() for s in report.segments]}


def ruling_stage(u: ImmersionField, cfg: ExperimentConfig, threads: int | None = None,
                 out_dir=None) -> tuple[RulingReport, StageOutput]:
    report = check_developability(u.du.as_vector(), cfg.ruling, threads=threads)
    out = StageOutput(summary=report.to_dict())
    out.measure("weak_residual", None, report.weak_residual)
    out.measure("crossings", None, report.crossings)
    if cfg.gates.require_developable:
        out.gate("developable", report.developable, True, report.developable)
    out.write_field(out_dir, "ruling.classes.fld",
                    ScalarField(report.grid, report.classes.astype(float)))
    out.write_json(out_dir, "ruling.json", ruling_document(report))
    return report, out


def compare_stage(u: ImmersionField, v: ScalarField, form: FormField, cfg: ExperimentConfig,
                  threads: int | None = None, out_dir=None) -> StageOutput:
    cmp = compare_rulings(u, v, cfg.ruling, threads=threads)
    eta = cmp.report_u.line_field()
    battery = default_battery(region_box(v.grid, cmp.report_u.rho), cfg.battery_order)
    transfer = transfer_pairing(u, v, form.eps, eta, battery, form=form)
    worst = max(r["discrepancy"] for r in transfer)
    out = StageOutput(summary={**cmp.to_dict(), "transfer_pairing": transfer,
                               "transfer_max": worst})
    out.measure("angle_gap_max_deg", form.eps, cmp.stats["angle_gap_max_deg"])
    out.measure("transfer_pairing_max", form.eps, worst)
    if cfg.gates.require_agreement:
        out.gate("ruling_agreement", cmp.agree, True, cmp.agree)
        gap = cmp.stats["angle_gap_max_deg"]
        out.gate("ruling_angle", gap, cmp.angle_tol_deg, cmp.angles_agree)
    out.write_json(out_dir, "compare.json", out.summary)
    return out
