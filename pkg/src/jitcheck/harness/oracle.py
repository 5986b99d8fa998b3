"""Caching must be unobservable: run every program with and without it."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import cache as cachemod
from ..machine import MachineOptions, Outcome, execute
from ..syntax import Expr


@dataclass
class Verdict:
    match: bool
    cached: Outcome
    uncached: Outcome
    cache_problems: list = field(default_factory=list)
    executions: tuple = ()

    @property
    def ok(self) -> bool:
        return self.match and not self.cache_problems

    def __str__(self) -> str:
        if self.ok:
            return f"Match({self.cached.render()})"
        if not self.match:
            return f"Mismatch({self.cached.render()} vs {self.uncached.render()})"
        return f"StaleCache({'; '.join(self.cache_problems)})"


def oracle_compare(program: Expr, max_steps: int = 10_000,
                   skip_def_invalidation: bool = False) -> Verdict:
    on = execute(program, max_steps,
                 MachineOptions(caching=True, skip_def_invalidation=skip_def_invalidation))
    off = execute(program, max_steps, MachineOptions(caching=False))
    problems = []
    if on.outcome == off.outcome:
        c = on.config
        problems = cachemod.inconsistencies(c.cache, c.tt, c.dt)
    return Verdict(on.outcome == off.outcome, on.outcome, off.outcome, problems, (on, off))
