"""
HTTP surface via FastAPI's TestClient.

  pytest app/api/test_api.py
"""
import json

import pytest
from fastapi.testclient import TestClient

from app.api.main import app

PLANE = {"name": "plane", "surface": {"tag": "plane"}, "n": 33, "ladder": "0.25,4,0.7"}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_surfaces_lists_every_tag(client):
    tags = client.get("/surfaces").json()
    assert {"plane", "cylinder", "cone", "sphere_patch"} <= set(tags)
    assert "properties" in tags["cylinder"]


def test_run_posted_config(client):
    r = client.post("/pipeline/run", json=PLANE)
    assert r.status_code == 200
    bundle = r.json()
    assert bundle["exit_code"] == 0 and bundle["verdict"] == "developable"


def test_invalid_config_is_422(client):
    r = client.post("/pipeline/run", json={**PLANE, "ladder": "0.1,4,0.5"})
    assert r.status_code == 422


def test_run_named_config(client, tmp_path, monkeypatch):
    (tmp_path / "flat.json").write_text(json.dumps(PLANE))
    monkeypatch.setenv("FLATLAB_CONFIG_DIR", str(tmp_path))
    assert client.post("/pipeline/run/flat").json()["name"] == "plane"
    assert client.post("/pipeline/run/missing").status_code == 404


def test_broken_named_config_is_400(client, tmp_path, monkeypatch):
    (tmp_path / "broken.json").write_text("{")
    monkeypatch.setenv("FLATLAB_CONFIG_DIR", str(tmp_path))
    assert client.post("/pipeline/run/broken").status_code == 400


def test_report_endpoint(client):
    measurement = {"quantity": "codazzi_sup", "eps": 0.1, "value": 1e-9,
                   "fitted_exponent": None, "required_exponent": None, "pass": True}
    doc = client.post("/report", json={"measurements": [measurement]}).json()
    assert doc["rows"] == 1
    assert doc["csv"].splitlines()[0].startswith("quantity")
    assert client.post("/report", json={}).json()["rows"] == 0


def test_malformed_report_is_400(client):
    r = client.post("/report", json={"measurements": [{"eps": "x"}]})
    assert r.status_code == 400
