"""Flow-sensitive static type checking for method bodies.

The checker is syntax-directed: every expression form has exactly one rule,
so a successful check is fully described by its inputs, its output
environment, its result type, and the set of type-table keys consulted by
method applications (``deps``). The cache relies on that last set to decide
what a type-table update can invalidate.

Type environments and type tables are plain ``Mapping`` objects and are
never mutated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .syntax import (
    NIL_TYPE, Assign, Call, ClassType, Def, Expr, If, Instance, MethType, New,
    Nil, NilType, SelfRef, Seq, Span, TypeDecl, ValType, Var,
)

MethodKey = tuple[str, str]
TypeEnv = Mapping[str, ValType]
TypeTable = Mapping[MethodKey, MethType]

SELF = "self"


class LubUndefined(Exception):
    def __init__(self, t1: ValType, t2: ValType):
        self.t1, self.t2 = t1, t2
        super().__init__(f"{t1} and {t2} have no least upper bound")


class StaticTypeError(Exception):
    """A failed premise of a typing rule.

    ``rule`` names the rule (``TVar``, ``TApp`` ...), ``node`` is the
    expression being checked and ``reason`` is a short machine-readable tag.
    """

    def __init__(self, rule: str, node: Expr, message: str, reason: str = ""):
        self.rule = rule
        self.node = node
        self.message = message
        self.reason = reason
        super().__init__(self.render())

    @property
    def span(self) -> Optional[Span]:
        return getattr(self.node, "span", None)

    def render(self) -> str:
        sp = self.span
        where = f"{sp.line}:{sp.col}" if sp else "?:?"
        return f"{where}: [{self.rule}] {self.message}"


@dataclass(frozen=True)
class CheckResult:
    out_env: TypeEnv
    typ: ValType
    deps: frozenset


def subtype(t1: ValType, t2: ValType) -> bool:
    return type(t1) is NilType or t1 == t2


def lub(t1: ValType, t2: ValType) -> ValType:
    if type(t1) is NilType:
        return t2
    if type(t2) is NilType or t1 == t2:
        return t1
    raise LubUndefined(t1, t2)


def lub_defined(t1: ValType, t2: ValType) -> bool:
    return type(t1) is NilType or type(t2) is NilType or t1 == t2


def join_env(g1: TypeEnv, g2: TypeEnv) -> dict:
    """Pointwise join over the shared domain.

    Variables bound in only one environment are dropped, and so are
    variables whose two types have no join.
    """
    out = {}
    for x, t1 in g1.items():
        t2 = g2.get(x)
        if t2 is not None and lub_defined(t1, t2):
            out[x] = lub(t1, t2)
    return out


def env_leq(g1: TypeEnv, g2: TypeEnv) -> bool:
    """``g1 <= g2``: g1 binds at least g2's variables, each at a subtype."""
    for x, t2 in g2.items():
        t1 = g1.get(x)
        if t1 is None or not subtype(t1, t2):
            return False
    return True


def typecheck(tt: TypeTable, g: TypeEnv, e: Expr) -> CheckResult:
    """Check ``e`` under table ``tt`` and environment ``g``.

    Raises :class:`StaticTypeError` when no rule applies.
    """
    deps: set = set()
    out, t = _check(tt, g, e, deps)
    return CheckResult(out, t, frozenset(deps))


def _check(tt: TypeTable, g: TypeEnv, e: Expr, deps: set):
    k = type(e)
    if k is Nil:
        return g, NIL_TYPE
    if k is Instance:
        return g, ClassType(e.cls)
    if k is Var:
        t = g.get(e.name)
        if t is None:
            raise StaticTypeError("TVar", e, f"variable {e.name} is not bound", "unbound")
        return g, t
    if k is SelfRef:
        t = g.get(SELF)
        if t is None:
            raise StaticTypeError("TSelf", e, "self is not bound", "unbound")
        return g, t
    if k is Seq:
        g1, _ = _check(tt, g, e.first, deps)
        return _check(tt, g1, e.second, deps)
    if k is Assign:
        g1, t = _check(tt, g, e.value, deps)
        g2 = dict(g1)
        g2[e.name] = t
        return g2, t
    if k is New:
        return g, ClassType(e.cls)
    if k is Def or k is TypeDecl:
        return g, NIL_TYPE
    if k is Call:
        g0, recv = _check(tt, g, e.recv, deps)
        g1, arg = _check(tt, g0, e.arg, deps)
        if type(recv) is NilType:
            raise StaticTypeError(
                "TApp", e, f"receiver of .{e.meth} has type nil", "nil-receiver")
        key = (recv.name, e.meth)
        deps.add(key)
        mt = tt.get(key)
        if mt is None:
            raise StaticTypeError(
                "TApp", e, f"{recv.name}.{e.meth} not in type table", "no-type")
        if not subtype(arg, mt.dom):
            raise StaticTypeError(
                "TApp", e,
                f"argument of type {arg} is not a subtype of {mt.dom} "
                f"in call to {recv.name}.{e.meth}", "arg")
        return g1, mt.rng
    if k is If:
        g0, _ = _check(tt, g, e.cond, deps)
        g1, t1 = _check(tt, g0, e.then, deps)
        g2, t2 = _check(tt, g0, e.orelse, deps)
        if not lub_defined(t1, t2):
            raise StaticTypeError(
                "TIf", e, f"branches have types {t1} and {t2} with no join", "lub")
        return join_env(g1, g2), lub(t1, t2)
    raise TypeError(f"not an expression: {e!r}")


def body_env(param: str, mt: MethType, owner: str) -> dict:
    """The environment a method body is checked in."""
    return {param: mt.dom, SELF: ClassType(owner)}
