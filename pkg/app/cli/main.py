"""
flatlab command line.

  python -m app.cli gen --surface cylinder --param r=1.0 --n 129 --out u.fld
  python -m app.cli sff --in u.fld --eps-ladder 0.125,4,0.5 --out forms/
  python -m app.cli residuals --in u.fld --eps-ladder 0.125,4,0.5
  python -m app.cli potential --in forms/A_eps=0.0625.fld --out v.fld --report pot.json
  python -m app.cli ma --in v.fld --battery default
  python -m app.cli degree --in v.fld --delta 0.05 --samples 50 --out deg.json
  python -m app.cli ruling --in u.du.fld --rho 0.03 --tol 1e-4 --out ruling.json
  python -m app.cli compare --in u.fld --v v.fld --eps 0.0625 --out compare.json
  python -m app.cli run --config eval/configs/cylinder.json --out out/cylinder
  python -m app.cli report --in out/cylinder/summary.json --csv report.csv

Exit codes: 0 ok, 2 bad input, 3 numerical failure or failed gate,
4 every degree query invalid.
"""
import argparse
import csv
import io
import json
import logging
from pathlib import Path
import sys

from pydantic import ValidationError

from app.config import configure_logging, get_settings
from app.errors import BadInputError, FlatlabError
from app.fields.fld1 import read_fld1, read_matrix, write_fld1
from app.fields.grid import Grid2, ScalarField, VectorField
from app.fields.quadrature import w11_norm
from app.mollify.kernel import ScaleLadder
from app.pipeline import stages
from app.pipeline.config import ExperimentConfig, load_config
from app.pipeline.report import load_bundle, report
from app.pipeline.workflow import run_pipeline
from app.potential.reconstruct import reconstruct_potential
from app.ruling.developability import RulingConfig, check_developability, compare_rulings
from app.shape.forms import second_form, second_form_bound
from app.shape.residuals import christoffel_rate, curl_rate, normal_deviation, residual_rows
from app.surfaces.corpus import default_domain, generate
from app.surfaces.schemas import SurfaceSpec
from app.weakdet.pairing import PSI_DERIVATIVES, ma_pairing

logger = logging.getLogger(__name__)

DEFAULT_LADDER = "0.125,4,0.5"


def _floats(text: str, count: int, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise BadInputError(f"bad {what} {text!r}")
    if len(values) != count:
        raise BadInputError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return values


def _emit(doc: dict, path=None) -> None:
    text = json.dumps(stages.plain(doc), indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit_csv(header, rows, path=None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _scalar(path) -> ScalarField:
    f = read_fld1(path)
    if not isinstance(f, ScalarField):
        raise BadInputError(f"{path}: expected a scalar field, got {f.k} components")
    return f


def _config(args) -> ExperimentConfig | None:
    return load_config(args.config) if args.config else None


# ── Subcommands ───────────────────────────────────────────────────────────────

def cmd_gen(args) -> int:
    cfg = _config(args)
    if cfg is not None:
        spec, grid = cfg.surface, cfg.grid()
    else:
        if not args.surface:
            raise BadInputError("gen needs --surface or --config")
        spec = SurfaceSpec.from_cli(args.surface, args.param)
        box = _floats(args.domain, 4, "--domain") if args.domain else default_domain(spec)
        grid = Grid2.from_box(*box, args.n)
    u = generate(spec, grid)
    paths = stages.write_immersion(u, args.out or Path(get_settings().out_dir) / "u.fld")
    _emit({"tag": spec.tag.value, "grid": grid.to_dict(), "c0": u.c0, "files": paths})
    return 0


def cmd_sff(args) -> int:
    u = stages.load_immersion(args.inp)
    ladder = ScaleLadder.parse(args.eps_ladder)
    ladder.check(u.grid)
    out_dir = Path(args.out or get_settings().out_dir)
    bounds = []
    for eps in ladder.scales:
        form = second_form(u, eps)
        write_fld1(out_dir / f"A_eps={eps:g}.fld", form.form)
        bounds.append({**second_form_bound(form), "alt_discrepancy": form.alt_discrepancy})
    rates = [fit.to_dict() for fit in (
        normal_deviation(u, ladder, args.alpha, threads=args.threads),
        christoffel_rate(u, ladder, args.alpha, threads=args.threads),
        curl_rate(u, ladder, args.alpha, threads=args.threads))]
    _emit({"ladder": ladder.to_dict(), "bounds": bounds, "rates": rates}, out_dir / "rates.json")
    return 0


def cmd_residuals(args) -> int:
    u = stages.load_immersion(args.inp)
    rows = residual_rows(u, ScaleLadder.parse(args.eps_ladder), threads=args.threads)
    header = ["eps", "metric_dev_C1", "codazzi_sup", "gauss_pairing_max_over_battery",
              "gauss_identity_sup"]
    _emit_csv(header, [[repr(float(r[k])) for k in header] for r in rows], args.out)
    return 0


def cmd_potential(args) -> int:
    A = read_matrix(args.inp, 2, 2)
    res = reconstruct_potential(A, threads=args.threads)
    write_fld1(args.out or Path(get_settings().out_dir) / "v.fld", res.v)
    _emit(res.to_dict(), args.report)
    return 0


def cmd_ma(args) -> int:
    if args.battery != "default":
        raise BadInputError(f"unknown battery {args.battery!r}; only 'default' is defined")
    v = _scalar(args.inp)
    battery = stages.battery_for(v.grid, args.order)
    rows = [[psi.label, repr(ma_pairing(v, psi, args.psi_derivatives) / w11_norm(psi, v.grid))]
            for psi in battery]
    _emit_csv(["psi_id", "pairing"], rows, args.out)
    return 0


def cmd_degree(args) -> int:
    v = _scalar(args.inp)
    scan = stages.checked_degree_scan(v, deltas=args.delta, samples=args.samples, seed=args.seed,
                                      threads=args.threads)
    _emit(scan.to_dict(), args.out)
    return 0


def _ruling_config(args) -> RulingConfig:
    cfg = _config(args)
    base = cfg.ruling if cfg is not None else RulingConfig()
    updates = {k: v for k, v in (("rho", args.rho), ("tol", args.tol), ("tol_w", args.tol_w),
                                 ("stride", args.stride)) if v is not None}
    return RulingConfig(**{**base.model_dump(), **updates})


def cmd_ruling(args) -> int:
    f = read_fld1(args.inp)
    if not isinstance(f, VectorField):
        raise BadInputError(f"{args.inp}: ruling detection needs a vector field")
    rep = check_developability(f, _ruling_config(args), threads=args.threads)
    out = Path(args.out or Path(get_settings().out_dir) / "ruling.json")
    write_fld1(out.with_name(out.stem + ".classes.fld"),
               ScalarField(rep.grid, rep.classes.astype(float)))
    _emit(stages.ruling_document(rep), out)
    return 0


def cmd_compare(args) -> int:
    u = stages.load_immersion(args.inp)
    v = _scalar(args.v)
    cmp = compare_rulings(u, v, _ruling_config(args), threads=args.threads)
    _emit(cmp.to_dict(), args.out)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    if cfg is None:
        raise BadInputError("run needs --config")
    bundle = run_pipeline(cfg, out_dir=args.out or cfg.out_dir or get_settings().out_dir,
                          threads=args.threads)
    summary = {k: bundle[k] for k in ("name", "verdict", "gates_passed", "failed_stage", "error",
                                      "exit_code")}
    _emit(summary)
    return bundle["exit_code"]


def cmd_report(args) -> int:
    table, text = report(load_bundle(args.inp))
    sys.stdout.write(table)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(text, encoding="utf-8")
    return 0


# ── Parser ────────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(prog="flatlab", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="sample a corpus member")
    p.add_argument("--surface")
    p.add_argument("--param", action="append", default=[])
    p.add_argument("--domain")
    p.add_argument("--n", type=int, default=129)
    p.set_defaults(fn=cmd_gen)

    for name, fn, text in (("sff", cmd_sff, "second forms along a ladder"),
                           ("residuals", cmd_residuals, "per-scale residual CSV")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--eps-ladder", default=DEFAULT_LADDER)
        p.add_argument("--alpha", type=float, default=2 / 3)
        p.set_defaults(fn=fn)

    p = sub.add_parser("potential", parents=[common], help="reconstruct v from A")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_potential)

    p = sub.add_parser("ma", parents=[common], help="Monge–Ampère pairings of v")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--battery", default="default")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--psi-derivatives", choices=PSI_DERIVATIVES, default="stencil")
    p.set_defaults(fn=cmd_ma)

    p = sub.add_parser("degree", parents=[common], help="degree scan of ∇v and F_δ")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_degree)

    for name, fn, text in (("ruling", cmd_ruling, "developability of a vector field"),
                           ("compare", cmd_compare, "rulings of ∇u against ∇v")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--rho", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--tol-w", dest="tol_w", type=float)
        p.add_argument("--stride", type=int)
        if name == "compare":
            p.add_argument("--v", required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("run", parents=[common], help="full pipeline from a config")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", parents=[common], help="table and CSV of a bundle")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads is None:
        args.threads = get_settings().threads
    try:
        return args.fn(args)
    except FlatlabError as e:
        logger.error("[cli] %s: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error("[cli] %s: invalid input: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return BadInputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
