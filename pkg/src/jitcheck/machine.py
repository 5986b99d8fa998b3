"""Small-step execution with just-in-time body checking.

A configuration is ``<cache, type table, class table, env, expr, stack>``.
Method bodies are type checked when first called, under whatever
signatures the type table holds at that moment; the result is cached
until a ``def`` or ``type`` invalidates it.

Redexes are found structurally each step (left-most innermost), and
calls push ``(env, context)`` frames instead of being reduced in place.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from . import cache as cachemod
from .cache import Cache, CacheEntry, DynClassTable
from .syntax import (
    NIL, NIL_TYPE, Assign, Call, ClassType, Def, Expr, If, Instance, New, Nil,
    SelfRef, Seq, Span, TypeDecl, ValType, Value, Var, is_value, show,
)
from .typechecker import (
    SELF, MethodKey, StaticTypeError, TypeTable, body_env, subtype, typecheck,
)

DynEnv = dict  # var-id or "self" -> Value


def stype(v: Value) -> ValType:
    """Run-time type of a value."""
    if type(v) is Nil:
        return NIL_TYPE
    return ClassType(v.cls)


# -- evaluation contexts --------------------------------------------------

@dataclass(frozen=True, slots=True)
class Hole:
    def __str__(self) -> str:
        return "□"


@dataclass(frozen=True, slots=True)
class AssignCtx:
    name: str
    inner: "Context"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class CallRecvCtx:
    inner: "Context"
    meth: str
    arg: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class CallArgCtx:
    recv: Value
    meth: str
    inner: "Context"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class SeqCtx:
    inner: "Context"
    second: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class IfCtx:
    inner: "Context"
    then: Expr
    orelse: Expr
    span: Optional[Span] = field(default=None, compare=False, repr=False)


Context = Union[Hole, AssignCtx, CallRecvCtx, CallArgCtx, SeqCtx, IfCtx]
HOLE = Hole()


class NoRedex(Exception):
    pass


def decompose(e: Expr) -> tuple[Context, Expr]:
    """Split ``e`` into ``(C, r)`` with ``e == plug(C, r)``.

    ``r`` is the left-most innermost redex. When ``e`` is itself the redex
    the context is ``HOLE``. Raises :class:`NoRedex` on values.
    """
    t = type(e)
    if t is Assign:
        if not is_value(e.value):
            c, r = decompose(e.value)
            return AssignCtx(e.name, c, e.span), r
    elif t is Seq:
        if not is_value(e.first):
            c, r = decompose(e.first)
            return SeqCtx(c, e.second, e.span), r
    elif t is If:
        if not is_value(e.cond):
            c, r = decompose(e.cond)
            return IfCtx(c, e.then, e.orelse, e.span), r
    elif t is Call:
        if not is_value(e.recv):
            c, r = decompose(e.recv)
            return CallRecvCtx(c, e.meth, e.arg, e.span), r
        if not is_value(e.arg):
            c, r = decompose(e.arg)
            return CallArgCtx(e.recv, e.meth, c, e.span), r
    elif t is Nil or t is Instance:
        raise NoRedex(f"{show(e)} is a value")
    return HOLE, e


def plug(c: Context, e: Expr) -> Expr:
    t = type(c)
    if t is Hole:
        return e
    if t is AssignCtx:
        return Assign(c.name, plug(c.inner, e), c.span)
    if t is SeqCtx:
        return Seq(plug(c.inner, e), c.second, c.span)
    if t is IfCtx:
        return If(plug(c.inner, e), c.then, c.orelse, c.span)
    if t is CallRecvCtx:
        return Call(plug(c.inner, e), c.meth, c.arg, c.span)
    if t is CallArgCtx:
        return Call(c.recv, c.meth, plug(c.inner, e), c.span)
    raise TypeError(f"not a context: {c!r}")


# -- configurations -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Frame:
    """A suspended caller: its environment and the context awaiting the result.

    ``deps`` is the dependency set of the check that admitted the callee
    (``key``); ``type`` updates consult it.
    """
    env: DynEnv
    ctx: Context
    deps: frozenset = frozenset()
    key: Optional[MethodKey] = None


@dataclass(frozen=True, slots=True)
class Stack:
    """Persistent cons-list of frames, top first.

    ``deps`` accumulates the frames' dependency sets so the ``type``
    side condition is a single membership test.
    """
    top: Frame
    rest: Optional["Stack"]
    deps: frozenset
    depth: int


def push(s: Optional[Stack], f: Frame) -> Stack:
    if s is None:
        return Stack(f, None, f.deps, 1)
    deps = s.deps | f.deps if f.deps else s.deps
    return Stack(f, s, deps, s.depth + 1)


def frames(s: Optional[Stack]) -> Iterator[Frame]:
    while s is not None:
        yield s.top
        s = s.rest


def depth(s: Optional[Stack]) -> int:
    return 0 if s is None else s.depth


@dataclass(frozen=True, slots=True)
class Config:
    cache: Cache
    tt: TypeTable
    dt: DynClassTable
    env: DynEnv
    expr: Expr
    stack: Optional[Stack] = None


def initial(program: Expr) -> Config:
    return Config({}, {}, {}, {}, program, None)


# -- outcomes -------------------------------------------------------------

class BlameKind(enum.Enum):
    NIL_RECEIVER = "NilReceiver"
    BODY_CHECK_FAILURE = "BodyCheckFailure"
    UNDEFINED_TYPED_METHOD = "UndefinedTypedMethod"


class StuckKind(enum.Enum):
    UNBOUND_VARIABLE = "UnboundVariable"
    UNBOUND_SELF = "UnboundSelf"
    UNTYPED_METHOD_CALL = "UntypedMethodCall"
    ARGUMENT_TYPE_MISMATCH = "ArgumentTypeMismatch"
    IRREDUCIBLE_TERM = "IrreducibleTerm"
    TYPE_UPDATE_UNDER_DEPENDENCY = "TypeUpdateUnderDependency"


@dataclass(frozen=True)
class Next:
    config: Config
    rule: str
    redex: Expr
    ctx: Context = HOLE


@dataclass(frozen=True)
class Done:
    value: Value


@dataclass(frozen=True)
class Blamed:
    kind: BlameKind
    span: Optional[Span]
    detail: str = ""
    checked: bool = False  # a static check ran (and failed) before blaming
    depth: int = 0


@dataclass(frozen=True)
class Stuck:
    kind: StuckKind
    message: str
    span: Optional[Span] = None
    depth: int = 0


StepResult = Union[Next, Done, Blamed, Stuck]


class OutcomeKind(enum.Enum):
    VALUE = "value"
    BLAME = "blame"
    STEP_LIMIT = "step-limit"
    RUNTIME_ERROR = "runtime-error"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    value: Optional[Value] = None
    blame: Optional[BlameKind] = None
    error: Optional[StuckKind] = None
    steps: Optional[int] = None
    span: Optional[Span] = None
    detail: str = ""
    # stack depth at which a blame/stuck state arose; 0 means top level
    depth: int = field(default=0, compare=False)

    def render(self) -> str:
        k = self.kind
        if k is OutcomeKind.VALUE:
            return f"value {show(self.value)}"
        if k is OutcomeKind.BLAME:
            where = f" at {self.span}" if self.span else ""
            return f"blame {self.blame.value}{where}"
        if k is OutcomeKind.STEP_LIMIT:
            return f"step-limit {self.steps}"
        where = f" at {self.span}" if self.span else ""
        return f"runtime-error {self.error.value}{where}"


@dataclass(frozen=True)
class MachineOptions:
    caching: bool = True
    # Test-only fault injection: leave the cache alone on `def`.
    skip_def_invalidation: bool = False


DEFAULT_OPTIONS = MachineOptions()


# -- transitions ----------------------------------------------------------

def step(c: Config, opts: MachineOptions = DEFAULT_OPTIONS) -> StepResult:
    e = c.expr
    if is_value(e):
        if c.stack is None:
            return Done(e)
        s = c.stack
        f = s.top
        return Next(Config(c.cache, c.tt, c.dt, f.env, plug(f.ctx, e), s.rest),
                    "ERet", e, f.ctx)
    try:
        ctx, r = decompose(e)
    except NoRedex as exc:  # pragma: no cover - values are handled above
        return Stuck(StuckKind.IRREDUCIBLE_TERM, str(exc), None, depth(c.stack))
    if type(r) is Call:
        return _call(c, ctx, r, opts)
    return _reduce(c, ctx, r, opts)


def _reduce(c: Config, ctx: Context, r: Expr, opts: MachineOptions) -> StepResult:
    t = type(r)
    cache, tt, dt, env = c.cache, c.tt, c.dt, c.env
    if t is SelfRef:
        v = env.get(SELF)
        if v is None:
            return Stuck(StuckKind.UNBOUND_SELF, "self is not bound", r.span, depth(c.stack))
        rule, out = "ESelf", v
    elif t is Var:
        v = env.get(r.name)
        if v is None:
            return Stuck(StuckKind.UNBOUND_VARIABLE, f"variable {r.name} is not bound",
                         r.span, depth(c.stack))
        rule, out = "EVar", v
    elif t is Assign:
        env = dict(env)
        env[r.name] = r.value
        rule, out = "EAssn", r.value
    elif t is New:
        rule, out = "ENew", Instance(r.cls, r.span)
    elif t is Seq:
        rule, out = "ESeq", r.second
    elif t is If:
        if type(r.cond) is Nil:
            rule, out = "EIfFalse", r.orelse
        else:
            rule, out = "EIfTrue", r.then
    elif t is Def:
        key = (r.cls, r.meth)
        dt = dict(dt)
        dt[key] = r.premethod
        if not opts.skip_def_invalidation:
            cache = cachemod.invalidate(cache, key)
        rule, out = "EDef", NIL
    elif t is TypeDecl:
        key = (r.cls, r.meth)
        if c.stack is not None and key in c.stack.deps:
            return Stuck(StuckKind.TYPE_UPDATE_UNDER_DEPENDENCY,
                         f"type of {r.cls}.{r.meth} changed while an active "
                         f"method depends on it", r.span, depth(c.stack))
        tt = dict(tt)
        tt[key] = r.mtype
        cache = cachemod.upgrade(cachemod.invalidate(cache, key), tt)
        rule, out = "EType", NIL
    else:
        return Stuck(StuckKind.IRREDUCIBLE_TERM, f"cannot reduce a {type(r).__name__}",
                     getattr(r, "span", None), depth(c.stack))
    return Next(Config(cache, tt, dt, env, plug(ctx, out), c.stack), rule, r, ctx)


def _call(c: Config, ctx: Context, r: Call, opts: MachineOptions) -> StepResult:
    recv, arg = r.recv, r.arg
    d = depth(c.stack)
    if type(recv) is Nil:
        return Blamed(BlameKind.NIL_RECEIVER, r.span,
                      f"method {r.meth} invoked on nil", depth=d)
    key = (recv.cls, r.meth)
    name = f"{recv.cls}.{r.meth}"
    mt = c.tt.get(key)
    pm = c.dt.get(key)
    if mt is None:
        return Stuck(StuckKind.UNTYPED_METHOD_CALL, f"{name} has no type signature",
                     r.span, d)
    if pm is None:
        return Blamed(BlameKind.UNDEFINED_TYPED_METHOD, r.span,
                      f"{name} has a type but no definition", depth=d)
    if not subtype(stype(arg), mt.dom):
        return Stuck(StuckKind.ARGUMENT_TYPE_MISMATCH,
                     f"argument of type {stype(arg)} passed to {name} : {mt}", r.span, d)
    cache = c.cache
    entry = cache.get(key) if opts.caching else None
    if entry is not None:
        rule, deps = "EAppHit", entry.deps
    else:
        try:
            res = typecheck(c.tt, body_env(pm.param, mt, recv.cls), pm.body)
        except StaticTypeError as err:
            return Blamed(BlameKind.BODY_CHECK_FAILURE, r.span,
                          f"{name}: {err.render()}", checked=True, depth=d)
        if not subtype(res.typ, mt.rng):
            return Blamed(BlameKind.BODY_CHECK_FAILURE, r.span,
                          f"{name}: body has type {res.typ}, declared {mt.rng}",
                          checked=True, depth=d)
        rule, deps = "EAppMiss", res.deps
        if opts.caching:
            cache = cachemod.store(cache, key, CacheEntry(mt, pm, res.typ, res.deps, c.tt))
    frame = Frame(c.env, ctx, deps, key)
    env = {SELF: recv, pm.param: arg}
    return Next(Config(cache, c.tt, c.dt, env, pm.body, push(c.stack, frame)), rule, r, ctx)


# -- whole runs -----------------------------------------------------------

@dataclass
class Stats:
    steps: int = 0
    static_checks: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    invalidations: int = 0
    phases: int = 0

    def as_lines(self) -> list[str]:
        return [f"{k}: {getattr(self, k)}" for k in
                ("steps", "static_checks", "cache_hits", "cache_misses",
                 "invalidations", "phases")]


@dataclass
class Execution:
    outcome: Outcome
    stats: Stats
    config: Config
    program: Expr


Observer = Callable[[Config, Next], None]


def _finish(r, steps: int) -> Outcome:
    if type(r) is Done:
        return Outcome(OutcomeKind.VALUE, value=r.value)
    if type(r) is Blamed:
        return Outcome(OutcomeKind.BLAME, blame=r.kind, span=r.span, detail=r.detail,
                       depth=r.depth)
    return Outcome(OutcomeKind.RUNTIME_ERROR, error=r.kind, span=r.span,
                   detail=r.message, depth=r.depth)


def execute(program: Expr, max_steps: int = 1_000_000,
            opts: MachineOptions = DEFAULT_OPTIONS,
            observers: tuple = (),
            trace: Optional[Callable[[str], None]] = None) -> Execution:
    """Run ``program`` from the empty configuration.

    ``observers`` are called as ``obs(before, transition)`` after each step;
    ``trace`` receives one formatted line per step.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    c = initial(program)
    stats = Stats()
    last = None  # 'T' after a type annotation ran, 'C' after a static check
    while True:
        r = step(c, opts)
        if type(r) is not Next:
            if type(r) is Blamed and r.checked:
                stats.static_checks += 1
                stats.cache_misses += 1
                if last == "T":
                    stats.phases += 1
            return Execution(_finish(r, stats.steps), stats, c, program)
        if stats.steps >= max_steps:
            return Execution(Outcome(OutcomeKind.STEP_LIMIT, steps=stats.steps),
                             stats, c, program)
        stats.steps += 1
        rule = r.rule
        if rule == "EAppMiss":
            stats.static_checks += 1
            stats.cache_misses += 1
            if last == "T":
                stats.phases += 1
            last = "C"
        elif rule == "EAppHit":
            stats.cache_hits += 1
        elif rule == "EType":
            stats.invalidations += len(c.cache) - len(r.config.cache)
            last = "T"
        elif rule == "EDef":
            stats.invalidations += len(c.cache) - len(r.config.cache)
        if trace is not None:
            trace(format_trace(stats.steps, r))
        for obs in observers:
            obs(c, r)
        c = r.config


def run(program: Expr, max_steps: int = 1_000_000, caching: bool = True,
        instrument: bool = False, instrument_stack: bool = False,
        trace: Optional[Callable[[str], None]] = None) -> tuple[Outcome, Stats]:
    """Run a program; instrumentation raises on the first consistency violation."""
    opts = MachineOptions(caching=caching)
    observers = ()
    if instrument or instrument_stack:
        from .harness.preservation import Monitor
        observers = (Monitor(program, check_stack=instrument_stack, strict=True),)
    ex = execute(program, max_steps, opts, observers, trace)
    return ex.outcome, ex.stats


def format_trace(index: int, r: Next) -> str:
    return f"{index} {r.rule} {show(r.redex)}"
