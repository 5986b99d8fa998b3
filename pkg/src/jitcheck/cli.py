"""Command-line front end.

    jitcheck run FILE [--no-cache] [--instrument] [--instrument-stack]
                      [--trace] [--max-steps N] [--stats]
    jitcheck fuzz --seeds A..B [--size N] [--max-steps N] [--workers N]
                  [--repro-dir DIR] [--instrument] [--instrument-stack]

Exit codes for ``run``: 0 value, 1 blame, 2 runtime error, 3 step limit,
4 parse error, 5 I/O error, 6 instrumentation violation.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .machine import MachineOptions, OutcomeKind, execute
from .syntax import ParseError, parse

EXIT_CODES = {
    OutcomeKind.VALUE: 0,
    OutcomeKind.BLAME: 1,
    OutcomeKind.RUNTIME_ERROR: 2,
    OutcomeKind.STEP_LIMIT: 3,
}
EXIT_PARSE = 4
EXIT_IO = 5
EXIT_VIOLATION = 6

_BUGS = {"skip-def-invalidation"}


def _seed_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            n = int(lo)
            return range(n, n + 1)
        return range(int(lo), int(hi) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jitcheck",
                                 description="Run programs under just-in-time static type checking.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a program file")
    r.add_argument("file", help="source file, or - for standard input")
    r.add_argument("--no-cache", action="store_true", help="re-check every call")
    r.add_argument("--instrument", action="store_true",
                   help="check environment and cache consistency after every step")
    r.add_argument("--instrument-stack", action="store_true",
                   help="also check stack consistency (slow)")
    r.add_argument("--trace", action="store_true", help="print one line per step")
    r.add_argument("--max-steps", type=_positive, default=1_000_000)
    r.add_argument("--stats", action="store_true", help="print counters and wall time")
    r.add_argument("--inject-bug", choices=sorted(_BUGS), help=argparse.SUPPRESS)

    f = sub.add_parser("fuzz", help="run the soundness harness over generated programs")
    f.add_argument("--seeds", type=_seed_range, default=range(1, 1001),
                   help="inclusive seed range A..B (default 1..1000)")
    f.add_argument("--size", type=_positive, default=30)
    f.add_argument("--max-steps", type=_positive, default=10_000)
    f.add_argument("--workers", type=_positive, default=1)
    f.add_argument("--repro-dir", type=Path, default=Path("repro"))
    f.add_argument("--instrument", action="store_true")
    f.add_argument("--instrument-stack", action="store_true")
    f.add_argument("--inject-bug", choices=sorted(_BUGS), help=argparse.SUPPRESS)
    return ap


def run_file(args: argparse.Namespace) -> int:
    from .harness.preservation import Monitor

    try:
        if args.file == "-":
            src = sys.stdin.read()
        else:
            src = Path(args.file).read_text()
    except OSError as exc:
        print(f"jitcheck: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        program = parse(src)
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return EXIT_PARSE

    opts = MachineOptions(caching=not args.no_cache,
                          skip_def_invalidation=args.inject_bug == "skip-def-invalidation")
    monitor = None
    observers: tuple = ()
    if args.instrument or args.instrument_stack:
        monitor = Monitor(program, check_stack=args.instrument_stack)
        observers = (monitor,)
    trace = print if args.trace else None

    t0 = time.perf_counter()
    ex = execute(program, args.max_steps, opts, observers, trace)
    wall = time.perf_counter() - t0

    out = ex.outcome
    print(f"outcome: {out.render()}")
    if out.detail:
        print(f"detail: {out.detail}")
    if args.stats:
        for line in ex.stats.as_lines():
            print(line)
        print(f"wall_time: {wall:.6f}s")
    if monitor is not None:
        rep = monitor.report
        print(f"instrument_violations: {len(rep.violations)}")
        for v in rep.violations[:20]:
            print(f"violation: {v}")
        if rep.violations:
            return EXIT_VIOLATION
    return EXIT_CODES[out.kind]


def run_fuzz(args: argparse.Namespace) -> int:
    from .harness.fuzz import FuzzConfig, fuzz

    cfg = FuzzConfig(size=args.size, max_steps=args.max_steps,
                     instrument=args.instrument, instrument_stack=args.instrument_stack,
                     skip_def_invalidation=args.inject_bug == "skip-def-invalidation")
    t0 = time.perf_counter()
    summary = fuzz(args.seeds, cfg, workers=args.workers, repro_dir=args.repro_dir)
    for line in summary.lines():
        print(line)
    print(f"wall_time: {time.perf_counter() - t0:.3f}s")
    if summary.violations:
        for r in summary.failures[:10]:
            print(f"failed seed {r.seed}: {r.violations[0]}")
        print(f"reproduction files in {args.repro_dir}")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_file(args)
    return run_fuzz(args)


if __name__ == "__main__":
    sys.exit(main())
