"""
FastAPI app:
  GET  /health
  POST /pipeline/run
  POST /pipeline/run/{name}
  POST /report
  GET  /surfaces
"""
import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException

from app.config import configure_logging, get_settings
from app.errors import BadInputError, FlatlabError
from app.pipeline.config import ExperimentConfig, load_config
from app.pipeline.report import report, report_rows
from app.pipeline.stages import plain
from app.pipeline.workflow import run_pipeline
from app.surfaces.schemas import tag_schemas

logger = logging.getLogger(__name__)

app = FastAPI(title="flatlab", version="1.0.0")


@app.on_event("startup")
def startup():
    configure_logging()
    logger.info("[API] started, configs in %s", get_settings().config_dir)


def _http_error(e: FlatlabError) -> HTTPException:
    status = 400 if isinstance(e, BadInputError) else 422
    return HTTPException(status_code=status, detail=str(e))


def _run(cfg: ExperimentConfig, out_dir: str | None) -> dict:
    try:
        return plain(run_pipeline(cfg, out_dir=out_dir, threads=get_settings().threads), finite=True)
    except FlatlabError as e:
        raise _http_error(e)
    except Exception as e:
        logger.exception("[API] pipeline %s crashed", cfg.name)
        raise HTTPException(status_code=500, detail=str(e))


@app.get("/health")
def health():
    return {"status": "ok"}


# ── Pipeline ──────────────────────────────────────────────────────────────────

@app.post("/pipeline/run")
def pipeline_run(config: ExperimentConfig, out_dir: str | None = None):
    """
    Run every stage on the posted config.
    Stage failures come back inside the bundle (failed_stage, exit_code);
    only unusable input is an HTTP error.
    """
    return _run(config, out_dir)


@app.post("/pipeline/run/{name}")
def pipeline_run_named(name: str, out_dir: str | None = None):
    """Run `<config_dir>/<name>.json`."""
    if "/" in name or name.startswith("."):
        raise HTTPException(status_code=400, detail=f"bad config name {name!r}")
    path = Path(get_settings().config_dir) / f"{name}.json"
    if not path.is_file():
        raise HTTPException(status_code=404, detail=f"no config named {name!r}")
    try:
        cfg = load_config(path)
    except FlatlabError as e:
        raise _http_error(e)
    return _run(cfg, out_dir)


# ── Reports and corpus ────────────────────────────────────────────────────────

@app.post("/report")
def report_bundle(bundle: dict):
    try:
        _, text = report(bundle)
        rows = len(report_rows(bundle))
    except FlatlabError as e:
        raise _http_error(e)
    return {"csv": text, "rows": rows}


@app.get("/surfaces")
def surfaces():
    return tag_schemas()
