"""Seed-sharded fuzzing of the machine against its soundness properties."""

from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..machine import MachineOptions, OutcomeKind, StuckKind, execute, format_trace
from ..syntax import pretty
from ..typechecker import StaticTypeError, typecheck
from .generator import gen_program
from .oracle import oracle_compare
from .preservation import Monitor


@dataclass(frozen=True)
class FuzzConfig:
    size: int = 30
    max_steps: int = 10_000
    instrument: bool = False
    instrument_stack: bool = False
    skip_def_invalidation: bool = False


@dataclass
class SeedResult:
    seed: int
    well_typed: bool
    outcome: str
    verdict: str
    violations: list = field(default_factory=list)
    receiver_gaps: int = 0


def well_typed(program) -> bool:
    try:
        typecheck({}, {}, program)
    except StaticTypeError:
        return False
    return True


def check_seed(seed: int, cfg: FuzzConfig) -> SeedResult:
    p = gen_program(seed, cfg.size)
    wt = well_typed(p)
    v = oracle_compare(p, cfg.max_steps, cfg.skip_def_invalidation)
    bad = []
    if not v.match:
        bad.append(f"oracle: {v}")
    if v.cache_problems:
        bad.append("cache consistency: " + "; ".join(v.cache_problems))
    out = v.cached
    for o in (v.cached, v.uncached):
        if o.kind is OutcomeKind.RUNTIME_ERROR:
            if wt:
                bad.append(f"soundness: well-typed program got {o.render()}")
            elif o.depth > 0 and o.error is not StuckKind.TYPE_UPDATE_UNDER_DEPENDENCY:
                bad.append(f"activation soundness: {o.render()} inside a checked method")
    on, off = v.executions
    s_on, s_off = on.stats, off.stats
    if s_on.cache_misses != s_on.static_checks or s_off.cache_hits != 0:
        bad.append("stats arithmetic")
    if v.match and s_off.static_checks < s_on.static_checks:
        bad.append("stats: caching performed more checks than not caching")
    gaps = 0
    if cfg.instrument or cfg.instrument_stack:
        mon = Monitor(p, check_stack=cfg.instrument_stack)
        execute(p, cfg.max_steps,
                MachineOptions(skip_def_invalidation=cfg.skip_def_invalidation),
                observers=(mon,))
        bad.extend(f"preservation: {x}" for x in mon.report.violations[:5])
        gaps = mon.report.receiver_gaps
    return SeedResult(seed, wt, out.kind.value, "match" if v.ok else "violation", bad, gaps)


def _check_many(args) -> list:
    seeds, cfg = args
    return [check_seed(s, cfg) for s in seeds]


@dataclass
class FuzzSummary:
    total: int = 0
    well_typed: int = 0
    outcomes: Counter = field(default_factory=Counter)
    well_typed_outcomes: Counter = field(default_factory=Counter)
    verdicts: Counter = field(default_factory=Counter)
    receiver_gaps: int = 0
    failures: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.failures)

    @property
    def well_typed_fraction(self) -> float:
        return self.well_typed / self.total if self.total else 0.0

    def add(self, r: SeedResult) -> None:
        self.total += 1
        self.outcomes[r.outcome] += 1
        self.verdicts[r.verdict] += 1
        self.receiver_gaps += r.receiver_gaps
        if r.well_typed:
            self.well_typed += 1
            self.well_typed_outcomes[r.outcome] += 1
        if r.violations:
            self.failures.append(r)

    def lines(self) -> list[str]:
        out = [f"programs: {self.total}",
               f"well_typed: {self.well_typed}",
               f"well_typed_fraction: {self.well_typed_fraction:.3f}"]
        for k in sorted(self.outcomes):
            out.append(f"outcome.{k}: {self.outcomes[k]}")
        for k in sorted(self.well_typed_outcomes):
            out.append(f"well_typed.outcome.{k}: {self.well_typed_outcomes[k]}")
        out.append(f"verdict.match: {self.verdicts['match']}")
        out.append(f"verdict.violation: {self.verdicts['violation']}")
        out.append(f"receiver_gaps: {self.receiver_gaps}")
        out.append(f"violations: {self.violations}")
        return out


def fuzz(seeds: Iterable[int], cfg: FuzzConfig = FuzzConfig(), workers: int = 1,
         repro_dir: Optional[Path] = None) -> FuzzSummary:
    seeds = list(seeds)
    summary = FuzzSummary()
    if workers > 1 and len(seeds) > 1:
        chunk = max(1, len(seeds) // (workers * 8))
        shards = [(seeds[i:i + chunk], cfg) for i in range(0, len(seeds), chunk)]
        with ProcessPoolExecutor(workers) as pool:
            for results in pool.map(_check_many, shards):
                for r in results:
                    summary.add(r)
    else:
        for s in seeds:
            summary.add(check_seed(s, cfg))
    if repro_dir is not None:
        for r in summary.failures:
            write_repro(Path(repro_dir), r, cfg)
    return summary


def write_repro(directory: Path, r: SeedResult, cfg: FuzzConfig,
                max_trace: int = 2000) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    p = gen_program(r.seed, cfg.size)
    lines = [f"seed: {r.seed}", f"size: {cfg.size}", f"max_steps: {cfg.max_steps}",
             f"well_typed: {r.well_typed}", "violations:"]
    lines += [f"  {v}" for v in r.violations]
    lines += ["program:", pretty(p), "trace (caching on):"]
    trace: list = []

    def sink(line: str) -> None:
        if len(trace) < max_trace:
            trace.append(line)

    ex = execute(p, cfg.max_steps,
                 MachineOptions(skip_def_invalidation=cfg.skip_def_invalidation),
                 trace=sink)
    lines += trace
    lines.append(f"outcome: {ex.outcome.render()}")
    path = directory / f"repro-{r.seed}.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
