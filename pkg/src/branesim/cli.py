"""``branesim`` command line."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import gsam
from . import syntax as sx
from .adequacy import run_adequacy
from .encoding import machine_snapshot
from .oracle import format_table, measure
from .rates import RateMap, RatesError, load_rates
from .simulation import TRACE_HEADER, SimConfig, run_simulation

EXIT_PARSE = 1
EXIT_RATES = 2
EXIT_INVARIANT = 3


def _read_system(path) -> sx.System:
    return sx.parse_system(Path(path).read_text(encoding="utf-8"))


def _read_rates(path) -> RateMap:
    return load_rates(path) if path else RateMap()


def cmd_run(args) -> int:
    try:
        P = _read_system(args.input)
    except sx.BraneSyntaxError as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        rates = _read_rates(args.rates)
    except RatesError as e:
        print(f"{args.rates}: {e}", file=sys.stderr)
        return EXIT_RATES
    try:
        cfg = SimConfig(
            input=args.input, rates=args.rates, seed=args.seed, max_time=args.max_time,
            max_steps=args.max_steps, runs=args.runs, normalize=args.normalize,
            census_every=args.census_every, trace=args.trace, census=args.census,
            jobs=args.jobs, check_invariants=args.check_invariants,
        )
    except ValueError as e:
        print(f"branesim run: {e}", file=sys.stderr)
        return 2  # usage error, same code argparse uses
    try:
        results = run_simulation(cfg, P, rates)
    except gsam.MachineError as e:
        print(f"internal invariant violated: {type(e).__name__}: {e}", file=sys.stderr)
        T = getattr(e, "machine", None)
        if T is not None:
            print(machine_snapshot(T), file=sys.stderr)
        return EXIT_INVARIANT
    if args.trace is None and not args.quiet:
        out = csv.writer(sys.stdout, lineterminator="\n")
        out.writerow(TRACE_HEADER)
        for res in results:
            out.writerows(rec.row() for rec in res.trace)
    for res in results:
        if not args.quiet:
            print(f"run {res.run}: {len(res.trace)} steps, stopped by {res.stopped}",
                  file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    try:
        P = _read_system(args.input)
    except sx.BraneSyntaxError as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        rates = _read_rates(args.rates)
    except RatesError as e:
        print(f"{args.rates}: {e}", file=sys.stderr)
        return EXIT_RATES
    sys.stdout.write(format_table(measure(P, rates)))
    return 0


def cmd_check(args) -> int:
    try:
        P = _read_system(args.input)
    except sx.BraneSyntaxError as e:
        print(f"{args.input}: {e}", file=sys.stderr)
        return EXIT_PARSE
    canon = sx.canonicalize(P)
    print("ok")
    print(f"canonical: {sx.format_canonical_system(canon)}")
    distinct, total = _count_cells(canon)
    print(f"cells: {total} ({distinct} distinct up to congruence), depth {sx.system_depth(P)}")
    return 0


def _count_cells(canon):
    """Total number of cells, and the number of congruence classes among them."""
    classes = set()

    def walk(s, mult):
        total = 0
        for cell, k in s:
            classes.add(cell)
            total += mult * k + walk(cell[1], mult * k)
        return total

    total = walk(canon, 1)
    return len(classes), total


def cmd_adequacy(args) -> int:
    report = run_adequacy(args.cases, args.seed, args.max_depth, exact=not args.float)
    for v in report.failures:
        print(v.report())
    print(f"{report.cases} cases, {len(report.failures)} counterexamples")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="branesim", description="Brane Calculus stochastic simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a system")
    r.add_argument("--input", required=True, help="system file")
    r.add_argument("--rates", help="rates file (every rate defaults to 1)")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--max-time", type=float, help="stop before the first firing after this time")
    r.add_argument("--max-steps", type=int, help="stop after this many firings")
    r.add_argument("--runs", type=int, default=1, help="independent runs (default 1)")
    r.add_argument("--trace", help="write the trace CSV here instead of stdout")
    r.add_argument("--census", help="write census CSV here")
    r.add_argument("--census-every", type=int, metavar="K", help="census every K steps")
    r.add_argument("--normalize", action="store_true", help="merge congruent sibling subtrees")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for --runs")
    r.add_argument("--check-invariants", action="store_true",
                   help="verify machine invariants after every step")
    r.add_argument("--quiet", action="store_true", help="no trace on stdout and no run summary")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="print the measure table of a system")
    o.add_argument("--input", required=True, help="system file")
    o.add_argument("--rates", help="rates file (every rate defaults to 1)")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("check", help="parse a system and print its canonical form")
    c.add_argument("--input", required=True, help="system file")
    c.set_defaults(func=cmd_check)

    a = sub.add_parser("adequacy", help="compare machine and oracle on random systems")
    a.add_argument("--cases", type=int, default=100, help="number of random systems")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--max-depth", type=int, default=3, help="maximum nesting depth")
    a.add_argument("--float", action="store_true", help="use floating-point rates")
    a.set_defaults(func=cmd_adequacy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run" and args.max_time is None and args.max_steps is None:
        build_parser().error("run needs --max-time or --max-steps")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
