"""Command-line interface: ``fpotential {eval,classify,generate,verify,table}``.

Exit codes: 0 ok, 1 verification failures, 2 input error, 3 numeric error,
4 inconclusive classification, 5 singular h.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from . import criteria as cr
from . import verify as vf
from .errors import InputError, NumericError, SingularHError
from .generator import HSpec, generate_f, roundtrip_h
from .means import GeneratorFunction, WeightedDistribution, eval_potential
from .numerics import Interval, Tolerance

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4
EXIT_SINGULAR = 5

FORMATS = ("json", "csv", "pretty")


@dataclass
class RunConfig:
    command: str
    function: Optional[str]
    interval: Optional[Interval]
    grid_n: int
    tol: Tolerance
    seed: int
    trials: Optional[int]
    out: Optional[str]
    fmt: str
    deterministic: bool


def _interval_arg(text: str) -> Interval:
    try:
        return Interval.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-f", "--function", help="generator f(x) as an expression in x")
    common.add_argument(
        "-i", "--interval", type=_interval_arg,
        help='open interval "lo,hi", e.g. -i " -10,10" or -i=-10,10',
    )
    common.add_argument("--lo", type=float, help="lower interval bound (alternative to -i)")
    common.add_argument("--hi", type=float, help="upper interval bound (alternative to -i)")
    common.add_argument("--grid", type=_positive_int, default=64, help="grid points for sweeps (default: 64)")
    common.add_argument("--tol", type=_positive_float, default=1e-10, help="absolute and relative tolerance (default: 1e-10)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("--trials", type=_positive_int, help="randomized trials (default depends on the command)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=FORMATS, help="output format (default: json; csv for generate)")
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp so output is byte-reproducible")

    p = _Parser(prog="fpotential", description="f-potentials: evaluation, convexity classification and verification.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common], help="evaluate lambda_f on a finite distribution")
    e.add_argument("--atoms", help='inline distribution "x:p,x:p,..."')
    e.add_argument("--dist", help='JSON file with [{"x": ..., "p": ...}, ...]')

    sub.add_parser("classify", parents=[common], help="classify the potential of f (trials default: 10000)")

    g = sub.add_parser("generate", parents=[common], help="build f from h = f'/f'' and sample it as CSV")
    g.add_argument("--h", required=True, dest="h_source", help="h(x) as an expression in x")
    g.add_argument("--x0", type=float, help="anchor point (default: interval midpoint)")
    g.add_argument("--A", type=float, default=1.0, help="f'(x0) (default: 1)")
    g.add_argument("--B", type=float, default=0.0, help="f(x0) (default: 0)")
    g.add_argument("--samples", type=_positive_int, default=64, help="rows in the sampled table (default: 64)")
    g.add_argument(
        "--max-residual", type=_positive_float, default=1e-5,
        help="largest accepted relative round-trip error of h (default: 1e-5)",
    )

    v = sub.add_parser("verify", parents=[common], help="run the property suite against f (trials default: 1000)")
    v.add_argument("--jensen-trials", type=_positive_int, help="trials for the Jensen search (default: 10000)")

    sub.add_parser("table", parents=[common], help="reproduce the 13-row golden classification table")
    return p


def _config(args) -> RunConfig:
    interval = args.interval
    if args.lo is not None or args.hi is not None:
        if interval is not None:
            raise InputError("give either -i/--interval or --lo/--hi, not both")
        if args.lo is None or args.hi is None:
            raise InputError("--lo and --hi must be given together")
        interval = Interval(args.lo, args.hi)
    fmt = args.format or ("csv" if args.command == "generate" else "json")
    return RunConfig(
        command=args.command,
        function=args.function,
        interval=interval,
        grid_n=args.grid,
        tol=Tolerance(abs_tol=args.tol, rel_tol=args.tol, decision_band=max(1e-7, 10 * args.tol)),
        seed=args.seed,
        trials=args.trials,
        out=args.out,
        fmt=fmt,
        deterministic=args.deterministic,
    )


def _require(cfg: RunConfig, function=True, interval=True):
    if function and not cfg.function:
        raise InputError(f"{cfg.command} needs -f/--function")
    if interval and cfg.interval is None:
        raise InputError(f"{cfg.command} needs -i/--interval or --lo/--hi")


# --- rendering -------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _envelope(cfg: RunConfig, payload: dict) -> dict:
    doc = {"command": cfg.command, "version": __version__}
    if not cfg.deterministic:
        doc["timestamp"] = _dt.datetime.now(tz=_dt.timezone.utc).isoformat()
    doc.update(payload)
    return _clean(doc)


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> list[list]:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        elif isinstance(v, list):
            rows.append([key, json.dumps(v)])
        else:
            rows.append([key, v])
    return rows


def _render(cfg: RunConfig, doc: dict, csv_rows: Optional[list] = None, pretty: Optional[str] = None) -> str:
    if cfg.fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if cfg.fmt == "csv":
        return _csv(csv_rows if csv_rows is not None else [["key", "value"], *_flatten(doc)])
    return pretty if pretty is not None else "\n".join(f"{k}: {v}" for k, v in _flatten(doc)) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        try:
            Path(cfg.out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {cfg.out}: {exc}") from None
    else:
        sys.stdout.write(text)


# --- commands --------------------------------------------------------------------


def _distribution(args) -> WeightedDistribution:
    if bool(args.atoms) == bool(args.dist):
        raise InputError("eval needs exactly one of --atoms or --dist")
    if args.atoms:
        return WeightedDistribution.parse_atoms(args.atoms)
    try:
        text = Path(args.dist).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.dist}: {exc}") from None
    try:
        return WeightedDistribution.from_json(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.dist} is not valid JSON: {exc}") from None


def _hull(dist: WeightedDistribution) -> Interval:
    """Slightly padded hull of the atoms, used when no interval is given."""
    lo, hi = min(dist.xs), max(dist.xs)
    pad = 1e-3 * (hi - lo) if hi > lo else 1e-3 * max(1.0, abs(lo))
    return Interval(lo - pad, hi + pad)


def cmd_eval(cfg: RunConfig, args) -> int:
    _require(cfg, interval=False)
    dist = _distribution(args)
    domain = cfg.interval or _hull(dist)
    f = GeneratorFunction.from_expr(cfg.function, domain)
    lam = eval_potential(f, dist, cfg.tol)
    doc = _envelope(cfg, {
        "f": f.name,
        "domain": domain.to_list(),
        "distribution": dist.to_json(),
        "tolerances": cfg.tol.to_dict(),
        "lambda": lam,
    })
    _emit(cfg, _render(cfg, doc, [["lambda"], [repr(lam)]], f"{lam!r}\n"))
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    _require(cfg)
    f = GeneratorFunction.from_expr(cfg.function, cfg.interval)
    report = cr.classify_potential(f, cfg.grid_n, cfg.tol, cfg.seed)
    if report.potential_type == cr.NEITHER:
        found = vf.jensen_search(f, cfg.trials or 10_000, cfg.seed, cfg.tol)
        report.counterexamples = [r.to_dict() for r in (found.convexity, found.concavity) if r is not None]
    doc = _envelope(cfg, {"tolerances": cfg.tol.to_dict(), "seed": cfg.seed, "report": report.to_dict()})
    pretty = (
        f"f = {report.f_name} on {tuple(report.domain)}\n"
        f"  f: {report.f_direction}, {report.f_curvature.tag}\n"
        f"  h: {report.h_sign}, {report.h_curvature.tag}\n"
        f"  type {report.potential_type}: potential is {report.potential}\n"
        + "".join(f"  witness ({c['direction']}): lhs={c['lhs']!r} rhs={c['rhs']!r}\n" for c in report.counterexamples)
    )
    _emit(cfg, _render(cfg, doc, pretty=pretty))
    return EXIT_OK if report.definite else EXIT_INCONCLUSIVE


def cmd_generate(cfg: RunConfig, args) -> int:
    _require(cfg, function=False)
    h = HSpec(args.h_source, cfg.interval)
    g = generate_f(h, args.x0, args.A, args.B, cfg.tol)
    residual = roundtrip_h(h, grid_n=cfg.grid_n, tol=cfg.tol, generated=g)
    if cfg.fmt == "csv":
        text = g.to_csv(args.samples, residual)
    else:
        rows = g.sample_table(args.samples)
        doc = _envelope(cfg, {
            "h": h.body.source,
            "domain": g.domain.to_list(),
            "x0": g.x0, "A": g.A, "B": g.B,
            "roundtrip_h_max_rel_error": residual,
            "table": [dict(zip(("x", "f", "df", "d2f"), r)) for r in rows],
        })
        text = _render(cfg, doc)
    _emit(cfg, text)
    if not residual <= args.max_residual:
        print(f"round-trip error {residual:.3g} exceeds {args.max_residual:g}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    _require(cfg)
    f = GeneratorFunction.from_expr(cfg.function, cfg.interval)
    report = vf.consistency_suite(
        f, cfg.trials or 1000, cfg.seed, cfg.tol, cfg.grid_n, jensen_trials=args.jensen_trials or 10_000
    )
    doc = _envelope(cfg, {"f": f.name, "domain": cfg.interval.to_list(), **report.to_dict()})
    rows = [["name", "pass", "worst_residual", "skipped"]] + [
        [p.name, p.passed, repr(p.worst_residual), p.skipped] for p in report.properties
    ]
    pretty = f"{f.name} on {tuple(cfg.interval.to_list())}: type {report.classification}\n" + "".join(
        f"  {'SKIP' if p.skipped else ('PASS' if p.passed else 'FAIL')}  {p.name:24s} {p.worst_residual:.3g}\n"
        for p in report.properties
    )
    _emit(cfg, _render(cfg, doc, rows, pretty))
    return EXIT_OK if report.passed else EXIT_FAILURES


def cmd_table(cfg: RunConfig, args) -> int:
    results = vf.reproduce_table(cfg.grid_n, cfg.tol)
    passed = sum(r.passed for r in results)
    doc = _envelope(cfg, {
        "tolerances": cfg.tol.to_dict(),
        "grid": cfg.grid_n,
        "passed": passed,
        "total": len(results),
        "rows": [r.to_dict() for r in results],
    })
    rows = [["label", "f", "expected_type", "found_type", "potential", "h_max_rel_error", "pass"]] + [
        [r.row.label, r.row.f_source, r.row.expected_f_type,
         r.report.potential_type if r.report else "", r.report.potential if r.report else "",
         repr(r.h_max_rel_error), r.passed]
        for r in results
    ]
    pretty = "".join(
        f"  {'PASS' if r.passed else 'FAIL'}  row {r.row.label:>2}  {r.row.f_source:10s} "
        f"type {r.report.potential_type if r.report else '?'}  {'; '.join(r.diagnostics)}\n"
        for r in results
    ) + f"{passed}/{len(results)} rows reproduced\n"
    _emit(cfg, _render(cfg, doc, rows, pretty))
    return EXIT_OK if passed == len(results) else EXIT_FAILURES


COMMANDS = {
    "eval": cmd_eval,
    "classify": cmd_classify,
    "generate": cmd_generate,
    "verify": cmd_verify,
    "table": cmd_table,
}


# options whose values may legitimately start with "-"
_VALUE_OPTIONS = {
    "-f": "--function", "--function": "--function",
    "-i": "--interval", "--interval": "--interval",
    "--h": "--h", "--atoms": "--atoms",
    "--lo": "--lo", "--hi": "--hi", "--x0": "--x0", "--A": "--A", "--B": "--B",
}


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--h -x`` as ``--h=-x`` so argparse does not take ``-x`` for a flag."""
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        if tok in _VALUE_OPTIONS and k + 1 < len(argv) and argv[k + 1].startswith("-") and len(argv[k + 1]) > 1:
            out.append(f"{_VALUE_OPTIONS[tok]}={argv[k + 1]}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_attach_values(argv))
    try:
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg, args)
    except SingularHError as exc:
        print(f"error: singular h: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
