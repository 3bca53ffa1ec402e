"""Command-line entry point.

Exit codes: 0 success, 1 infeasible verdict from ``solve``, 2 usage or
validation errors.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import fanout, inflation, lp as lpmod, scenario as scen, sleeper, strategy

DEFAULT_SEED = 20240611


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    output: Optional[str] = None
    tol: Fraction = sleeper.DEFAULT_TOL
    lo: tuple = (sleeper.QUARTER, sleeper.QUARTER)
    hi: tuple = (sleeper.HALF, sleeper.HALF)
    step: Fraction = sleeper.DEFAULT_STEP
    cap: int = inflation.DEFAULT_CAP
    workers: int = 1
    exact: bool = False
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.tol <= 0:
            raise UsageError("tolerance must be positive")
        if self.step <= 0:
            raise UsageError("step must be positive")
        if self.workers < 1:
            raise UsageError("worker count must be at least 1")


def rational(text: str) -> Fraction:
    try:
        return scen.parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def rational_pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected L1,L2, got {text!r}")
    return tuple(rational(p) for p in parts)


def _config(args, **defaults) -> RunConfig:
    # flags left unset fall back to the RunConfig defaults
    given = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    return RunConfig(**{**defaults, **given})


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    s = scen.load_scenario(args.scenario)
    problems = s.validate()
    if problems:
        for v in problems:
            print(f"{args.scenario}: {v}", file=sys.stderr)
        return 2
    nets = len(s.networks)
    print(f"ok: {len(s.strategies)} strategies, {nets} network{'s' if nets != 1 else ''}")
    return 0


def cmd_solve(args) -> int:
    s = scen.load_scenario(args.scenario)
    spec = inflation.load_spec(args.inflation, s)
    targets = scen.load_targets(args.targets, s)
    model = inflation.InflationModel(s, spec, cap=args.cap)
    lp = model.lp(targets)
    if args.export_lp:
        with open(args.export_lp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(lpmod.format_lp(lp))
    res = lpmod.solve_feasibility(lp)
    ok = lpmod.verify_certificate(lp, res.certificate)
    verdict = "feasible" if res.feasible else "infeasible"
    print(f"verdict={verdict} vars={lp.num_vars} rows={lp.num_rows} "
          f"certificate={res.certificate.kind} verified={'true' if ok else 'false'}")
    if args.certificate:
        with open(args.certificate, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(res.certificate.kind + "\n")
            fh.write(" ".join(_fmt(v) for v in res.certificate.vector) + "\n")
    if not ok:
        raise ArithmeticError("certificate failed re-verification")
    return 0 if res.feasible else 1


def cmd_orbits(args) -> int:
    dom = (args.rows, args.cols)
    group = strategy.RelabelGroup.independent(2)
    tables = strategy.orbit_representative_tables(dom, args.outcomes, group, cap=args.cap)
    print(len(tables))
    if args.dump:
        rows = "".join(" ".join(str(int(v)) for v in t) + "\n" for t in tables)
        _emit(rows, args.dump)
    return 0


def cmd_sleeper(args) -> int:
    cfg = _config(args, tol=Fraction(1, 256)) if args.action == "extended" else _config(args)
    if args.action == "scan":
        res = sleeper.scan_grid(cfg.lo, cfg.hi, cfg.step, workers=cfg.workers)
        _emit(res.to_csv(cfg.exact), cfg.output)
    elif args.action == "boundary":
        lams = args.lambda1 or [sleeper.HALF]
        head = "lambda1,lambda2_star" + (",lambda1_exact,lambda2_star_exact" if cfg.exact else "")
        lines = [head]
        for l1 in lams:
            b = sleeper.trace_boundary(l1, cfg.tol)
            row = f"{sleeper.decimal(b.lambda1)},{sleeper.decimal(b.lambda2_star)}"
            if cfg.exact:
                row += f",{_fmt(b.lambda1)},{_fmt(b.lambda2_star)}"
            lines.append(row)
        _emit("\n".join(lines) + "\n", cfg.output)
    elif args.action == "optimize":
        r = sleeper.optimize()
        z = ",".join(_fmt(v) for v in r.dual_z)
        _emit(f"primal={_fmt(r.primal)} dual={_fmt(r.dual)} z={z} "
              f"verified={'true' if r.verified else 'false'}\n", cfg.output)
    elif args.action == "extended":
        trace = sleeper.polar_trace(cfg.tol, args.rays)
        lines = ["direction1,direction2,lambda1,lambda2,verdict"]
        for d, feas, infeas in trace.rays:
            for pt, tag in ((feas, "F"), (infeas, "I")):
                if pt is not None:
                    lines.append(f"{sleeper.decimal(d[0])},{sleeper.decimal(d[1])},"
                                 f"{sleeper.decimal(pt[0])},{sleeper.decimal(pt[1])},{tag}")
        if cfg.output:
            _emit("\n".join(lines) + "\n", cfg.output)
        print(f"min_lambda={_fmt(trace.min_lambda)} decimal={sleeper.decimal(trace.min_lambda, 6)}")
    return 0


def cmd_fanout(args) -> int:
    if args.example == "sleeper":
        s = scen.builtin("sleeper")
        spec = sleeper.sleeper_spec()
        model = sleeper.sleeper_model()
        points = [args.point] if args.point else list(fanout.SLEEPER_SAMPLE)
        cases = [(f"lambda={_fmt(a)},{_fmt(b)}", sleeper.lambdas_to_targets(sleeper.SleeperPoint(a, b)))
                 for a, b in points]
    else:
        if args.point:
            raise UsageError("--point applies to the sleeper example only")
        s = scen.builtin("bilocal")
        spec = fanout.pair_groups_spec(s, 2)
        model = inflation.InflationModel(s, spec)
        cases = [(f"target={i}", [p]) for i, p in enumerate(fanout.bilocal_sample_targets(args.count, args.seed))]
    mismatches = 0
    for label, targets in cases:
        eq = fanout.check_equivalence(s, spec, targets, post_model=model)
        mismatches += not eq.equal
        print(f"{args.example} {label} postselected={'F' if eq.post_verdict else 'I'} "
              f"fanout={'F' if eq.fanout_verdict else 'I'} equal={'true' if eq.equal else 'false'}")
    return 0 if not mismatches else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psinflation", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("-s", "--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="decide one inflation LP")
    p.add_argument("-s", "--scenario", required=True)
    p.add_argument("-i", "--inflation", required=True)
    p.add_argument("-t", "--targets", required=True)
    p.add_argument("--export-lp", metavar="FILE")
    p.add_argument("--certificate", metavar="FILE", help="write the certificate vector")
    p.add_argument("--cap", type=int, default=inflation.DEFAULT_CAP, help="max representative count")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("orbits", help="count strategy tables up to input relabeling")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--outcomes", type=int, default=2)
    p.add_argument("--dump", metavar="FILE", help="write representatives, one flat row each")
    p.add_argument("--cap", type=int, default=strategy.DEFAULT_CAP)
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("sleeper", help="correlated sleeper computations")
    p.add_argument("action", choices=["scan", "boundary", "optimize", "extended"])
    p.add_argument("--lo", type=rational_pair, help="lower grid corner L1,L2 (or one value)")
    p.add_argument("--hi", type=rational_pair, help="upper grid corner L1,L2 (or one value)")
    p.add_argument("--step", type=rational)
    p.add_argument("--lambda1", type=rational, action="append", help="boundary at this lambda1 (repeatable)")
    p.add_argument("--tol", type=rational)
    p.add_argument("--rays", type=int, default=25, help="polar directions for extended")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="add exact num/den columns")
    p.add_argument("-o", "--output", help="CSV destination (scan, boundary, extended)")
    p.set_defaults(func=cmd_sleeper)

    p = sub.add_parser("fanout", help="compare postselected and fanout verdicts")
    p.add_argument("action", choices=["compare"])
    p.add_argument("--example", choices=["sleeper", "bilocal"], required=True)
    p.add_argument("--point", type=rational_pair, help="sleeper point L1,L2")
    p.add_argument("--count", type=int, default=20, help="bilocal sample size")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_fanout)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        # file format and scenario errors are ValueErrors carrying path:line
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
