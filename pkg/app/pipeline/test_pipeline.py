"""
Experiment configs, the staged pipeline and the CSV report.

  pytest app/pipeline/test_pipeline.py
"""
import csv
import io
import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.errors import BadInputError, NoValidQueriesError, NumericalError, StageError
from app.pipeline import stages
from app.fields import sample
from app.pipeline import (
    COLUMNS, ExperimentConfig, STAGES, dump_config, load_bundle, load_config, report, run_pipeline,
)
from app.pipeline.stages import compare_stage, load_immersion
from app.shape import second_form
from app.surfaces import generate

PLANE = {"name": "plane", "surface": {"tag": "plane"}, "n": 33, "ladder": "0.25,4,0.7"}
CYLINDER = {"name": "cylinder", "surface": {"tag": "cylinder", "params": {"r": 1.0}},
            "n": 65, "ladder": "0.2,4,0.7"}
SPHERE = {"name": "sphere", "surface": {"tag": "sphere_patch", "params": {"R": 1.0}},
          "n": 33, "ladder": "0.15,4,0.7"}


@pytest.fixture(scope="module")
def plane_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("plane")
    return run_pipeline(ExperimentConfig(**PLANE), out_dir=str(out)), out


@pytest.fixture(scope="module")
def cylinder_bundle():
    return run_pipeline(ExperimentConfig(**CYLINDER))


# ── Config ────────────────────────────────────────────────────────────────────

def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(**CYLINDER)
    path = dump_config(cfg, tmp_path / "c.json")
    assert load_config(path) == cfg
    assert cfg.working_eps() == pytest.approx(0.14)


def test_config_rejects_unresolved_ladder():
    with pytest.raises(ValidationError, match="resolve the kernel"):
        ExperimentConfig(**{**PLANE, "ladder": "0.1,4,0.5"})


def test_config_rejects_bad_alpha():
    with pytest.raises(ValidationError):
        ExperimentConfig(**{**PLANE, "alpha": 0.4})


def test_load_config_errors(tmp_path):
    with pytest.raises(BadInputError, match="no such config"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"surface": {"tag": "torus"}}))
    with pytest.raises(BadInputError, match="invalid config"):
        load_config(bad)


# ── Pipeline ──────────────────────────────────────────────────────────────────

def test_plane_passes_trivially(plane_bundle):
    bundle, _ = plane_bundle
    assert bundle["failed_stage"] is None
    assert bundle["exit_code"] == 0 and bundle["gates_passed"]
    assert bundle["verdict"] == "developable"
    assert set(bundle["stages"]) == set(STAGES)
    rates = bundle["stages"]["residuals"]["rates"]
    assert all(r["identically_zero"] for r in rates)


def test_plane_artifacts_are_written(plane_bundle):
    bundle, out = plane_bundle
    for name in ("u.fld", "du.fld", "v.fld", "ruling.json", "ruling.classes.fld", "summary.json"):
        assert name in bundle["artifacts"]
    u = load_immersion(bundle["artifacts"]["u.fld"])
    assert u.grid.nx == 33
    assert load_bundle(out / "summary.json")["verdict"] == "developable"


def test_runs_are_deterministic(plane_bundle):
    first, _ = plane_bundle
    again = run_pipeline(ExperimentConfig(**PLANE))
    keep = lambda b: json.dumps({k: v for k, v in b.items() if k != "artifacts"}, sort_keys=True)
    assert keep(first) == keep(again)


def test_tightening_gates_never_turns_fails_into_passes(plane_bundle):
    loose, _ = plane_bundle
    tight = run_pipeline(ExperimentConfig(**{**PLANE, "gates": {
        "isometry_max": 0.0, "codazzi_max": 1e-30, "gauss_pairing_max": 1e-30, "ma_max": 1e-30}}))
    before = {g["gate"]: g["pass"] for g in loose["gates"]}
    for g in tight["gates"]:
        if g["pass"]:
            assert before[g["gate"]]
    assert tight["exit_code"] in (0, 3)


def test_cylinder_is_developable(cylinder_bundle):
    b = cylinder_bundle
    assert b["failed_stage"] is None
    assert b["verdict"] == "developable"
    assert b["gates_passed"] and b["exit_code"] == 0
    assert b["stages"]["compare"]["agree"]
    assert b["stages"]["degree"]["fails"] == 0


def test_cylinder_report_has_metric_rate_row(cylinder_bundle):
    _, text = report(cylinder_bundle)
    rows = list(csv.DictReader(io.StringIO(text)))
    metric = [r for r in rows if r["quantity"] == "metric_dev_C1" and r["eps"] == ""]
    assert len(metric) == 1
    assert float(metric[0]["required_exponent"]) == pytest.approx(1 / 3)
    assert metric[0]["pass"] == "true"


def test_sphere_fails_the_isometry_gate_early():
    b = run_pipeline(ExperimentConfig(**SPHERE))
    assert b["failed_stage"] == "isometry"
    assert b["exit_code"] == 3
    assert "defect" in b["error"]
    assert set(b["stages"]) == {"gen", "isometry"}
    assert b["stages"]["isometry"]["defect"] > 1e-3


def test_failed_stage_keeps_name_and_earlier_artifacts(monkeypatch, tmp_path):
    def boom(*args, **kwargs):
        raise NoValidQueriesError("every query invalid")

    monkeypatch.setattr(stages, "degree_stage", boom)
    b = run_pipeline(ExperimentConfig(**PLANE), out_dir=str(tmp_path))
    assert b["failed_stage"] == "degree"
    assert b["error"].startswith("stage 'degree' failed: every query invalid")
    assert b["exit_code"] == NoValidQueriesError.exit_code
    assert b["verdict"] == "incomplete"
    assert "degree" not in b["stages"] and "ma" in b["stages"]
    assert any(name.endswith(".fld") for name in b["artifacts"])


def test_stage_error_carries_cause_exit_code():
    err = StageError("potential", NumericalError("CG did not converge"), {"v.fld": "out/v.fld"})
    assert err.exit_code == 3
    assert err.stage == "potential" and err.artifacts == {"v.fld": "out/v.fld"}
    assert str(err) == "stage 'potential' failed: CG did not converge"
    assert StageError("gen", BadInputError("bad tag")).exit_code == 2


def test_compare_stage_gates_on_ruling_angle():
    cfg = ExperimentConfig(**CYLINDER)
    u = generate(cfg.surface, cfg.grid())
    form = second_form(u, cfg.working_eps())
    crossed = sample(lambda x, y: -y ** 2 / 2, form.grid)
    out = compare_stage(u, crossed, form, cfg)
    gates = {g["gate"]: g for g in out.gates}
    assert not gates["ruling_angle"]["pass"]
    assert gates["ruling_angle"]["value"] == pytest.approx(90.0, abs=1.0)
    assert not gates["ruling_agreement"]["pass"]


def test_cylinder_ruling_angle_gate_passes(cylinder_bundle):
    gates = {g["gate"]: g for g in cylinder_bundle["gates"]}
    assert gates["ruling_angle"]["pass"]
    assert gates["ruling_angle"]["value"] <= 1.0


# ── Report ────────────────────────────────────────────────────────────────────

def test_empty_bundle_gives_header_only():
    table, text = report({})
    assert text.strip() == ",".join(COLUMNS)
    assert table.splitlines()[0].split() == list(COLUMNS)


def test_csv_rows_match_measurements(plane_bundle):
    bundle, _ = plane_bundle
    _, text = report(bundle)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(COLUMNS)
    assert len(rows) - 1 == len(bundle["measurements"])


def test_missing_bundle(tmp_path):
    with pytest.raises(BadInputError, match="no such bundle"):
        load_bundle(tmp_path / "nope.json")


# ── Shipped configs ───────────────────────────────────────────────────────────

SHIPPED = Path(__file__).resolve().parents[2] / "eval" / "configs"


@pytest.mark.parametrize("path", sorted(p for p in SHIPPED.glob("*.json") if p.name != "manifest.json"),
                         ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.name == path.stem


def test_manifest_lists_every_shipped_config():
    manifest = json.loads((SHIPPED / "manifest.json").read_text())
    names = {c["name"] for c in manifest["configs"]}
    assert names == {p.stem for p in SHIPPED.glob("*.json")} - {"manifest"}
    assert manifest["total_configs"] == len(names)
