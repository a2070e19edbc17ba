"""
Command line: subcommands, files written and exit codes.

  pytest app/cli/test_cli.py
"""
import csv
import io
import json
from types import SimpleNamespace

import pytest

from app.cli.main import main
from app.fields.fld1 import read_fld1, read_matrix
from app.pipeline import stages

LADDER = "0.25,4,0.7"


def _json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


@pytest.fixture(scope="module")
def plane_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--surface", "plane", "--n", "33", "--out", str(d / "u.fld")]) == 0
    assert main(["sff", "--in", str(d / "u.fld"), "--eps-ladder", LADDER,
                 "--out", str(d / "forms")]) == 0
    return d


# ── gen / sff ─────────────────────────────────────────────────────────────────

def test_gen_writes_immersion_and_sidecar(plane_files):
    u = read_fld1(plane_files / "u.fld")
    du = read_matrix(plane_files / "u.du.fld", 2, 3)
    assert u.k == 3
    assert du.grid.shape == u.grid.shape == (33, 33)


def test_gen_reports_c0(tmp_path, capsys):
    assert main(["gen", "--surface", "cylinder", "--param", "r=1.0", "--n", "17",
                 "--out", str(tmp_path / "c.fld")]) == 0
    doc = _json(capsys)
    assert doc["tag"] == "cylinder"
    assert doc["c0"] == pytest.approx(1.0, abs=1e-12)


def test_gen_bad_input_exits_2(tmp_path):
    assert main(["gen", "--out", str(tmp_path / "u.fld")]) == 2
    assert main(["gen", "--surface", "torus", "--out", str(tmp_path / "u.fld")]) == 2
    assert main(["gen", "--surface", "plane", "--domain", "0,0,1",
                 "--out", str(tmp_path / "u.fld")]) == 2


def test_sff_writes_one_form_per_scale(plane_files):
    forms = sorted((plane_files / "forms").glob("A_eps=*.fld"))
    assert len(forms) == 4
    rates = json.loads((plane_files / "forms" / "rates.json").read_text())
    assert rates["ladder"]["count"] == 4
    assert len(rates["bounds"]) == 4


def test_sff_rejects_unresolved_ladder(plane_files):
    assert main(["sff", "--in", str(plane_files / "u.fld"), "--eps-ladder", "0.1,4,0.5"]) == 2


def test_missing_input_exits_2(tmp_path):
    assert main(["sff", "--in", str(tmp_path / "nope.fld")]) == 2


# ── residuals / potential / ma / degree ───────────────────────────────────────

def test_residuals_csv(plane_files, capsys):
    assert main(["residuals", "--in", str(plane_files / "u.fld"), "--eps-ladder", LADDER]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 4
    assert all(float(r["codazzi_sup"]) < 1e-8 for r in rows)


@pytest.fixture(scope="module")
def plane_potential(plane_files):
    form = sorted((plane_files / "forms").glob("A_eps=*.fld"))[0]
    assert main(["potential", "--in", str(form), "--out", str(plane_files / "v.fld"),
                 "--report", str(plane_files / "potential.json")]) == 0
    return plane_files / "v.fld"


def test_potential_of_zero_form_is_zero(plane_potential):
    v = read_fld1(plane_potential)
    assert abs(v.values).max() < 1e-8
    doc = json.loads((plane_potential.parent / "potential.json").read_text())
    assert doc["hessian_gap"] < 1e-8


def test_ma_csv(plane_potential, capsys):
    assert main(["ma", "--in", str(plane_potential)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows and set(rows[0]) == {"psi_id", "pairing"}
    assert all(abs(float(r["pairing"])) < 1e-8 for r in rows)


def test_ma_with_analytic_psi_derivatives(plane_potential, capsys):
    assert main(["ma", "--in", str(plane_potential), "--psi-derivatives", "analytic"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows and all(abs(float(r["pairing"])) < 1e-8 for r in rows)


def test_ma_unknown_battery(plane_potential):
    assert main(["ma", "--in", str(plane_potential), "--battery", "dense"]) == 2


def test_degree_all_invalid_exits_4(plane_potential, monkeypatch):
    counts = {"grad": {"pass": 0, "fail": 0, "invalid": 50}}
    monkeypatch.setattr(stages, "degree_scan", lambda v, **kw: SimpleNamespace(
        counts=counts, witnesses=[], all_invalid=True, fails=0))
    assert main(["degree", "--in", str(plane_potential)]) == 4


def test_degree_needs_scalar_field(plane_files):
    assert main(["degree", "--in", str(plane_files / "u.fld")]) == 2


# ── ruling / compare ──────────────────────────────────────────────────────────

def test_ruling_on_plane(plane_files):
    out = plane_files / "ruling" / "ruling.json"
    assert main(["ruling", "--in", str(plane_files / "u.du.fld"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["developable"]
    classes = read_fld1(out.with_name("ruling.classes.fld"))
    assert classes.values.max() <= 0


def test_ruling_rejects_tiny_radius(plane_files):
    assert main(["ruling", "--in", str(plane_files / "u.du.fld"), "--rho", "0.01",
                 "--out", str(plane_files / "r2.json")]) == 2


def test_compare_on_plane(plane_files, plane_potential, capsys):
    assert main(["compare", "--in", str(plane_files / "u.fld"), "--v", str(plane_potential)]) == 0
    assert _json(capsys)["agree"]


# ── run / report ──────────────────────────────────────────────────────────────

def test_run_then_report(tmp_path, capsys):
    config = tmp_path / "plane.json"
    config.write_text(json.dumps({"name": "plane", "surface": {"tag": "plane"}, "n": 33,
                                  "ladder": LADDER}))
    out = tmp_path / "run"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    assert _json(capsys)["verdict"] == "developable"
    assert main(["report", "--in", str(out / "summary.json"), "--csv", str(tmp_path / "r.csv")]) == 0
    assert "gate:" in capsys.readouterr().out
    assert (tmp_path / "r.csv").read_text().startswith("quantity")


def test_run_needs_config():
    assert main(["run"]) == 2
