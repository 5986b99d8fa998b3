"""Runnable versions of the relations that tie static and dynamic state.

* ``env_consistent(g, e)``: every variable typed in ``g`` holds a value of
  a subtype in ``e`` (``e`` may bind more).
* ``stack_subtype(t, ts)``: ``t`` fits the hole of the top type-stack frame.
* ``stack_consistent(tt, ts, s)``: each type-stack frame describes the
  matching dynamic frame, treating the hole as a variable.
* cache consistency lives in :mod:`jitcheck.cache`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..cache import consistent as cache_consistent  # noqa: F401  (re-export)
from ..machine import DynEnv, Frame, plug, stype
from ..syntax import ValType, Var
from ..typechecker import StaticTypeError, TypeEnv, TypeTable, subtype, typecheck

# Stands in for the context's hole; cannot collide with a source identifier.
HOLE_VAR = "□"


class EmptyStack(ValueError):
    pass


@dataclass(frozen=True)
class TypeStackFrame:
    in_env: TypeEnv
    hole_type: ValType
    out_env: TypeEnv
    result_type: ValType


def env_consistent(g: TypeEnv, e: DynEnv) -> bool:
    for x, t in g.items():
        v = e.get(x)
        if v is None or not subtype(stype(v), t):
            return False
    return True


def stack_subtype(t: ValType, ts: Sequence[TypeStackFrame]) -> bool:
    if not ts:
        raise EmptyStack("stack subtyping needs a nonempty type stack")
    return subtype(t, ts[0].hole_type)


def type_context(tt: TypeTable, in_env: TypeEnv, hole_type: ValType, ctx):
    """Check a context with its hole bound as a variable of ``hole_type``."""
    g = dict(in_env)
    g[HOLE_VAR] = hole_type
    return typecheck(tt, g, plug(ctx, Var(HOLE_VAR)))


def frame_consistent(tt: TypeTable, f: TypeStackFrame, d: Frame) -> bool:
    if not env_consistent(f.in_env, d.env):
        return False
    try:
        r = type_context(tt, f.in_env, f.hole_type, d.ctx)
    except StaticTypeError:
        return False
    return r.typ == f.result_type and dict(r.out_env) == dict(f.out_env)


def stack_consistent(tt: TypeTable, ts: Sequence[TypeStackFrame],
                     s: Sequence[Frame]) -> bool:
    """Both sequences are top-first."""
    if len(ts) != len(s):
        return False
    for i, (f, d) in enumerate(zip(ts, s)):
        if not frame_consistent(tt, f, d):
            return False
        if i + 1 < len(ts) and not subtype(f.result_type, ts[i + 1].hole_type):
            return False
    return True
