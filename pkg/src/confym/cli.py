"""Command line entry point: ``confym <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage,
parse or input errors.  Reports go to standard output; when the
``CONFYM_REPORT_DIR`` environment variable is set they are also written
there as JSON files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import Config, ConfigError, default_parallelism
from .expr import ExprError
from .numeric.metricspec import SpecError

REPORT_DIR_ENV = "CONFYM_REPORT_DIR"
NUMERIC_CHECKS = ("action-invariance", "action", "rule-soundness", "bianchi")
ACTION_TOLERANCE = 1e-6
CHECK_TOLERANCE = 1e-8


class UsageError(Exception):
    """Invalid input on the command line or in an input file."""


def _dimension(text: str):
    if text == "symbolic":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("dimension must be 6 or 'symbolic'") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--dimension", type=_dimension, default=argparse.SUPPRESS,
                   help="6 or 'symbolic' (default 6)")
    g.add_argument("--jet-degree", type=int, default=argparse.SUPPRESS,
                   help="jet truncation degree (default 7)")
    g.add_argument("--tolerance", type=float, default=argparse.SUPPRESS,
                   help="relative tolerance of float certificates")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed of random metrics")
    g.add_argument("--report", choices=("text", "json"), default=argparse.SUPPRESS,
                   help="report format (default text)")
    g.add_argument("--parallelism", type=int, default=argparse.SUPPRESS,
                   help="worker processes for independent checks")
    g.add_argument("--dump-rules", action="store_true", default=argparse.SUPPRESS,
                   help="print the rewrite rules as JSON and exit")
    return p


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="confym", parents=[common],
                     description="Tensor calculus engine and verification suite for the "
                                 "conformal Yang-Mills obstruction computation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    for name, text in (("canon", "print the canonical form of an expression"),
                       ("expand", "expand tractor content and definitions, then canonicalize")):
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        p.add_argument("file", nargs="?", default="-", help="expression file ('-' for stdin)")
        p.add_argument("--basis", choices=("none", "riemann", "weyl_schouten"), default="none",
                       help="rewrite curvature in this basis first")
        p.add_argument("--simplify", action="store_true",
                       help="apply the oriented curvature rules")

    p = sub.add_parser("verify", parents=[common], help="run named checks or 'all'")
    p.add_argument("names", nargs="+", help="check names, or 'all'")

    p = sub.add_parser("numeric", parents=[common], help="numeric oracle checks on a metric")
    p.add_argument("check", choices=NUMERIC_CHECKS)
    p.add_argument("--metric", help="MetricSpec JSON file (default: seeded torus metric)")
    p.add_argument("--grids", type=int, nargs=2, default=(16, 32), metavar=("N1", "N2"),
                   help="the two quadrature resolutions")

    p = sub.add_parser("emit-obstruction", parents=[common], help="print the obstruction tensor")
    p.add_argument("--format", choices=("text", "latex", "json"), default="text")

    sub.add_parser("dump-rules", parents=[common], help="print the rewrite rules as JSON")
    return parser


def _config(args) -> Config:
    v = vars(args)
    try:
        return Config(dimension=v.get("dimension", 6), jet_degree=v.get("jet_degree", 7),
                      tolerance=v.get("tolerance", CHECK_TOLERANCE), seed=v.get("seed", 0),
                      report_format=v.get("report", "text"),
                      parallelism=v.get("parallelism", default_parallelism()))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_reports(stem: str, payload: dict) -> None:
    target = os.environ.get(REPORT_DIR_ENV)
    if not target:
        return
    d = Path(target)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{stem}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_canon(args, cfg: Config, out) -> int:
    from .canon import canonicalize
    from .parser import parse
    from .printer import to_text
    from .rules import specialize_expr, substitute_basis, ws_simplify

    e = parse(_read(args.file).strip())
    if args.command == "expand":
        from .tractor import expand_omega, nabla_splitting, tractor_contract

        e = tractor_contract(nabla_splitting(expand_omega(e)))
    if args.basis != "none":
        e = substitute_basis(e, args.basis)
    e = ws_simplify(e) if args.simplify else canonicalize(e)
    print(to_text(specialize_expr(e, cfg.dimension)), file=out)
    return 0


def _print_reports(reports, cfg: Config, out) -> None:
    if cfg.report_format == "json":
        payload = {"reports": [r.to_json() for r in reports],
                   "status": "pass" if all(r.passed for r in reports) else "fail"}
        print(json.dumps(payload, indent=2, sort_keys=True), file=out)
        return
    for r in reports:
        line = f"{r.status.upper():4} {r.name:22} {r.certificate:16} {r.elapsed_s:8.2f}s"
        if not r.passed:
            line += f"  residual: {r.residual_repr}"
        print(line, file=out)


def cmd_verify(args, cfg: Config, out) -> int:
    from .verify.catalog import CheckError, check_names, run_checks

    names = check_names() if args.names == ["all"] else args.names
    try:
        reports = run_checks(names, cfg)
    except CheckError as exc:
        raise UsageError(exc.args[0]) from None
    _print_reports(reports, cfg, out)
    for r in reports:
        _write_reports(r.name, r.to_json())
    return 0 if all(r.passed for r in reports) else 1


def _metric(args, cfg: Config):
    from .numeric.metricspec import MetricSpec
    from .numeric.oracle import default_torus_spec

    if args.metric is None:
        return default_torus_spec(cfg.seed)
    try:
        return MetricSpec.load(args.metric)
    except OSError as exc:
        raise UsageError(f"cannot read {args.metric}: {exc.strerror}") from None
    except (SpecError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid metric file {args.metric}: {exc}") from None


def cmd_numeric(args, cfg: Config, out) -> int:
    import time

    from .numeric import oracle
    from .rules import CheckReport

    t0 = time.monotonic()
    tol = vars(args).get("tolerance")
    name = f"numeric-{args.check}"
    if args.check in ("action-invariance", "action"):
        m = _metric(args, cfg)
        if args.check == "action":
            value = oracle.action_integral(m, args.grids[-1])
            info = {"metric": m.name, "seed": m.seed, "grid": args.grids[-1], "S": value}
            report = CheckReport(name, "pass", "float-quadrature", repr(value),
                                 time.monotonic() - t0, info)
        else:
            tol = ACTION_TOLERANCE if tol is None else tol
            info = oracle.action_invariance(m, tuple(args.grids))
            info["tolerance"] = tol
            ok = info["residual"] < tol
            report = CheckReport(name, "pass" if ok else "fail", "float-quadrature",
                                 f"{info['residual']:.3e}", time.monotonic() - t0, info)
    elif args.check == "rule-soundness":
        report = rule_soundness(cfg, name)
    else:
        report = bianchi_report(_metric(args, cfg) if args.metric else None, cfg, name)
    _emit_numeric(report, cfg, out)
    _write_reports(name, {**report.to_json(), "details": _jsonable(report.details)})
    return 0 if report.passed else 1


def _jsonable(d: dict) -> dict:
    return json.loads(json.dumps(d, default=str))


def _emit_numeric(report, cfg: Config, out) -> None:
    if cfg.report_format == "json":
        payload = {**report.to_json(), "details": _jsonable(report.details)}
        print(json.dumps(payload, indent=2, sort_keys=True), file=out)
        return
    _print_reports([report], cfg, out)
    for k, v in sorted(report.details.items()):
        print(f"  {k}: {v}", file=out)


def rule_soundness(cfg: Config, name: str = "numeric-rule-soundness"):
    """Both sides of every registered rule agree on exact rational jets."""
    import time

    from .numeric.oracle import rational_jet_zero
    from .parser import parse
    from .rules import RULES, CheckReport

    t0 = time.monotonic()
    results, bad = {}, []
    for rule in RULES:
        ok, info = rational_jet_zero(parse(rule.lhs) - parse(rule.rhs), 6, seed=cfg.seed)
        results[rule.name] = ok
        if not ok:
            bad.append(f"{rule.name}: {info.get('residual')}")
    return CheckReport(name, "fail" if bad else "pass", "rational-jet", "; ".join(bad) or "0",
                       time.monotonic() - t0, {"rules": results, "seed": cfg.seed})


def bianchi_report(m, cfg: Config, name: str = "numeric-bianchi"):
    """First Bianchi residual of ``m`` (or a seeded rational metric) at the origin."""
    import time

    from .numeric.evaluate import evaluate
    from .numeric.geometry import GeometryPoint
    from .numeric.metricspec import random_rational_metric
    from .parser import parse
    from .rules import CheckReport

    t0 = time.monotonic()
    m = m or random_rational_metric(6, cfg.seed)
    if m.uses_float:
        raise UsageError("the bianchi check needs a metric with rational constants")
    gp = GeometryPoint(m, [[0] * m.dim], max_degree=cfg.jet_degree, exact=True)
    vals, _ = evaluate(parse("R[a,b,c,d] + R[b,c,a,d] + R[c,a,b,d]"), gp)
    scale, _ = evaluate(parse("R[a,b,c,d]"), gp)
    res = max((abs(float(v)) for v in vals.ravel()), default=0.0)
    ref = max((abs(float(v)) for v in scale.ravel()), default=0.0) or 1.0
    rel = res / ref
    return CheckReport(name, "pass" if rel == 0 else "fail", "rational-jet", f"{rel:.3e}",
                       time.monotonic() - t0, {"metric": m.name})


def cmd_emit(args, cfg: Config, out) -> int:
    from .verify.catalog import ObstructionUnavailable, emit_obstruction, run_check

    try:
        text = emit_obstruction(args.format)
    except ObstructionUnavailable:
        report = run_check("theorem-obstruction", cfg)
        if not report.passed:
            print(f"theorem-obstruction failed: {report.residual_repr}", file=sys.stderr)
            return 1
        text = emit_obstruction(args.format)
    print(text, file=out)
    return 0


def cmd_dump_rules(args, cfg: Config, out) -> int:
    from .rules import dump_rules

    print(dump_rules(), file=out)
    return 0


COMMANDS = {"canon": cmd_canon, "expand": cmd_canon, "verify": cmd_verify,
            "numeric": cmd_numeric, "emit-obstruction": cmd_emit, "dump-rules": cmd_dump_rules}


def main(argv=None, out=None) -> int:
    """Run the command line with ``argv`` and return the exit code."""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if vars(args).get("dump_rules"):
            return cmd_dump_rules(args, None, out)
        if args.command is None:
            raise UsageError("confym: a subcommand is required")
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (ExprError, SpecError) as exc:
        print(f"confym: {exc}", file=sys.stderr)
        return 2


def main_exit() -> None:
    """Console script wrapper."""
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
