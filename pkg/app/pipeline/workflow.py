"""
LangGraph pipeline for one experiment.

Workflow:
  1. gen        → sample the corpus member u and du
  2. isometry   → isometry gate (aborts on failure)
  3. sff        → A^ε at the working scale
  4. residuals  → per-scale residual rows and the rate suite
  5. potential  → v with ∇²v = A^ε, Hessian/curl gaps, ∇v Hölder profile
  6. ma         → very weak Monge–Ampère pairings
  7. degree     → degree scan of ∇v and F_δ
  8. ruling     → developability of ∇u
  9. compare    → ∇u against ∇v, transfer pairing
 10. finalize   → bundle, verdict, exit code

A stage that raises records `failed_stage` and jumps to finalize.
"""
import json
import logging
import operator
from pathlib import Path
import time
from typing import Annotated, Any, Optional, TypedDict

from langgraph.graph import END, StateGraph

from app.errors import FlatlabError, NumericalError, StageError
from app.pipeline import stages
from app.pipeline.config import ExperimentConfig

logger = logging.getLogger(__name__)

STAGES = ("gen", "isometry", "sff", "residuals", "potential", "ma", "degree", "ruling", "compare")


def _merge(a: dict, b: dict) -> dict:
    return {**a, **b}


# ── State definition ──────────────────────────────────────────────────────────

class PipelineState(TypedDict):
    # Input
    config: ExperimentConfig
    out_dir: Optional[str]
    threads: Optional[int]

    # Fields handed between stages
    u: Any
    form: Any
    potential: Any

    # Accumulated output
    summary: Annotated[dict, _merge]
    artifacts: Annotated[dict, _merge]
    gates: Annotated[list, operator.add]
    measurements: Annotated[list, operator.add]
    failed_stage: Optional[str]
    error: Optional[str]
    exit_code: int
    bundle: dict


def _output(name: str, out: stages.StageOutput, **fields) -> dict:
    return {"summary": {name: out.summary}, "artifacts": out.artifacts, "gates": out.gates,
            "measurements": out.measurements, **fields}


def _failure(err: StageError) -> dict:
    kept = ", ".join(sorted(err.artifacts)) or "none"
    logger.error("[pipeline] %s (artifacts kept: %s)", err, kept)
    return {"failed_stage": err.stage, "error": str(err), "exit_code": err.exit_code}


# ── Workflow nodes ────────────────────────────────────────────────────────────

def gen_node(state: PipelineState) -> dict:
    u, out = stages.gen_stage(state["config"], state["out_dir"])
    return _output("gen", out, u=u)


def isometry_node(state: PipelineState) -> dict:
    out = stages.isometry_stage(state["u"], state["config"])
    update = _output("isometry", out)
    if not out.gates[0]["pass"]:
        cause = NumericalError(f"isometry gate failed: defect {out.summary['defect']:.6g} exceeds "
                               f"{state['config'].gates.isometry_max:.1e}")
        kept = {**state["artifacts"], **out.artifacts}
        update.update(_failure(StageError("isometry", cause, kept)))
    return update


def sff_node(state: PipelineState) -> dict:
    cfg = state["config"]
    form, out = stages.sff_stage(state["u"], cfg.working_eps(), state["out_dir"])
    return _output("sff", out, form=form)


def residuals_node(state: PipelineState) -> dict:
    out = stages.residuals_stage(state["u"], state["form"], state["config"], state["threads"],
                                 state["out_dir"])
    return _output("residuals", out)


def potential_node(state: PipelineState) -> dict:
    res, out = stages.potential_stage(state["form"], state["config"], state["threads"],
                                      state["out_dir"])
    return _output("potential", out, potential=res)


def ma_node(state: PipelineState) -> dict:
    out = stages.ma_stage(state["u"], state["potential"].v, state["form"].eps, state["config"],
                          state["out_dir"])
    return _output("ma", out)


def degree_node(state: PipelineState) -> dict:
    out = stages.degree_stage(state["potential"].v, state["config"], state["threads"],
                              state["out_dir"])
    return _output("degree", out)


def ruling_node(state: PipelineState) -> dict:
    _, out = stages.ruling_stage(state["u"], state["config"], state["threads"], state["out_dir"])
    return _output("ruling", out)


def compare_node(state: PipelineState) -> dict:
    out = stages.compare_stage(state["u"], state["potential"].v, state["form"], state["config"],
                               state["threads"], state["out_dir"])
    return _output("compare", out)


def finalize_node(state: PipelineState) -> dict:
    cfg = state["config"]
    gates_passed = all(g["pass"] for g in state["gates"])
    ruling = state["summary"].get("ruling")
    if state["failed_stage"]:
        exit_code = state["exit_code"]
        verdict = "incomplete"
    else:
        exit_code = 0 if gates_passed else NumericalError.exit_code
        verdict = "developable" if ruling and ruling["developable"] else "not_developable"
    bundle = stages.plain({
        "name": cfg.name,
        "config": cfg.model_dump(mode="json"),
        "stages": state["summary"],
        "gates": state["gates"],
        "gates_passed": gates_passed,
        "measurements": state["measurements"],
        "artifacts": state["artifacts"],
        "failed_stage": state["failed_stage"],
        "error": state["error"],
        "verdict": verdict,
        "exit_code": exit_code,
    })
    if state["out_dir"] is not None:
        path = Path(state["out_dir"]) / "summary.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        bundle["artifacts"] = {**bundle["artifacts"], "summary.json": str(path)}
        path.write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("[pipeline] %s: verdict=%s gates_passed=%s exit=%d", cfg.name, verdict,
                gates_passed, exit_code)
    return {"bundle": bundle, "exit_code": exit_code}


# ── Build graph ───────────────────────────────────────────────────────────────

NODES = {
    "gen": gen_node, "isometry": isometry_node, "sff": sff_node, "residuals": residuals_node,
    "potential": potential_node, "ma": ma_node, "degree": degree_node, "ruling": ruling_node,
    "compare": compare_node,
}


def _guarded(name: str, fn):
    """Time the stage; a FlatlabError becomes a StageError recorded as failed_stage."""
    def run(state: PipelineState) -> dict:
        logger.info("[pipeline] %s: start", name)
        t0 = time.perf_counter()
        try:
            update = fn(state)
        except FlatlabError as e:
            err = e if isinstance(e, StageError) else StageError(name, e, state["artifacts"])
            return _failure(err)
        logger.info("[pipeline] %s: done in %.2fs", name, time.perf_counter() - t0)
        return update
    return run


def _route(next_stage: str):
    def route(state: PipelineState) -> str:
        return "finalize" if state["failed_stage"] else next_stage
    return route


def build_pipeline_graph():
    workflow = StateGraph(PipelineState)
    for name in STAGES:
        workflow.add_node(name, _guarded(name, NODES[name]))
    workflow.add_node("finalize", finalize_node)

    workflow.set_entry_point(STAGES[0])
    for name, nxt in zip(STAGES, STAGES[1:]):
        workflow.add_conditional_edges(name, _route(nxt), {nxt: nxt, "finalize": "finalize"})
    workflow.add_edge(STAGES[-1], "finalize")
    workflow.add_edge("finalize", END)
    return workflow.compile()


# ── Runner ────────────────────────────────────────────────────────────────────

def run_pipeline(config: ExperimentConfig, out_dir: str | None = None,
                 threads: int | None = None) -> dict:
    """
    Run every stage and return the bundle:
      {"stages": {...}, "gates": [...], "measurements": [...], "artifacts": {...},
       "failed_stage", "error", "verdict", "exit_code", ...}
    """
    graph = build_pipeline_graph()
    initial_state = {
        "config": config,
        "out_dir": out_dir if out_dir is not None else config.out_dir,
        "threads": threads if threads is not None else config.threads,
        "u": None, "form": None, "potential": None,
        "summary": {}, "artifacts": {}, "gates": [], "measurements": [],
        "failed_stage": None, "error": None, "exit_code": 0, "bundle": {},
    }
    result = graph.invoke(initial_state)
    return result["bundle"]
