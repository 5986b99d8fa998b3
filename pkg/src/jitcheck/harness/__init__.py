"""Soundness rig: consistency predicates, program generator, oracles."""

from .consistency import (
    HOLE_VAR, EmptyStack, TypeStackFrame, env_consistent, stack_consistent,
    stack_subtype,
)
from .generator import gen_program
from .oracle import Verdict, oracle_compare
from .preservation import Monitor, PreservationViolation

__all__ = [
    "HOLE_VAR", "EmptyStack", "TypeStackFrame", "env_consistent",
    "stack_consistent", "stack_subtype", "gen_program", "Verdict",
    "oracle_compare", "Monitor", "PreservationViolation",
]
