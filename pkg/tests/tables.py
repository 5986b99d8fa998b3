"""Exhaustive small-instance tables checked against brute-force oracles.

The oracles work from denotations instead of the rules: a type denotes the
set of run-time tags it admits (``nil`` admits only nil, a class admits nil
and its own instances), subtyping is inclusion, and the environment
relations are decided by enumerating every dynamic environment over the
same two variables. Context typings are tabulated per context shape.

Each ``*_table`` function returns ``(cases, mismatches)``.
"""

from __future__ import annotations

import itertools

from jitcheck.cache import CacheEntry, consistent, entry_consistent
from jitcheck.harness.consistency import (
    HOLE_VAR, TypeStackFrame, env_consistent, frame_consistent, stack_consistent,
    stack_subtype,
)
from jitcheck.machine import (
    HOLE, AssignCtx, CallArgCtx, CallRecvCtx, Frame, IfCtx, SeqCtx,
)
from jitcheck.syntax import (
    NIL_TYPE, Call, ClassType, Instance, MethType, New, Nil, Premethod, SelfRef, Var,
)
from jitcheck.typechecker import LubUndefined, env_leq, join_env, lub, subtype

A, B = ClassType("A"), ClassType("B")
TYPES = (NIL_TYPE, A, B)
VARS = ("x", "y")
ABSENT = object()


def den(t) -> frozenset:
    return frozenset({"nil"} | ({t.name} if type(t) is ClassType else set()))


def tag(v) -> str:
    return "nil" if type(v) is Nil else v.cls


def sub_o(t1, t2) -> bool:
    return den(t1) <= den(t2)


def lub_o(t1, t2):
    need = den(t1) | den(t2)
    ups = [u for u in TYPES if need <= den(u)]
    least = [u for u in ups if all(den(u) <= den(v) for v in ups)]
    return least[0] if least else None


def _envs(options) -> list[dict]:
    out = []
    for combo in itertools.product(options, repeat=len(VARS)):
        out.append({x: t for x, t in zip(VARS, combo) if t is not ABSENT})
    return out


TYPE_ENVS = _envs((ABSENT,) + TYPES)
DYN_ENVS = _envs((ABSENT, Nil(), Instance("A"), Instance("B")))


def cons_o(g: dict, e: dict) -> bool:
    return all(x in e and tag(e[x]) in den(t) for x, t in g.items())


def leq_o(g1: dict, g2: dict) -> bool:
    return all(cons_o(g2, e) for e in DYN_ENVS if cons_o(g1, e))


def join_o(g1: dict, g2: dict) -> dict:
    ups = [u for u in TYPE_ENVS if leq_o(g1, u) and leq_o(g2, u)]
    least = [u for u in ups if all(leq_o(u, v) for v in ups)]
    assert len(least) == 1
    return least[0]


# -- type relations ---------------------------------------------------------

def subtype_table():
    bad = []
    pairs = list(itertools.product(TYPES, TYPES))
    for t1, t2 in pairs:
        if subtype(t1, t2) != sub_o(t1, t2):
            bad.append((t1, t2))
    return len(pairs), bad


def lub_table():
    bad = []
    pairs = list(itertools.product(TYPES, TYPES))
    for t1, t2 in pairs:
        try:
            got = lub(t1, t2)
        except LubUndefined:
            got = None
        if got != lub_o(t1, t2):
            bad.append((t1, t2, got))
    return len(pairs), bad


def join_env_table():
    bad = []
    pairs = list(itertools.product(TYPE_ENVS, TYPE_ENVS))
    for g1, g2 in pairs:
        if join_env(g1, g2) != join_o(g1, g2):
            bad.append((g1, g2))
    return len(pairs), bad


def env_leq_table():
    bad = []
    pairs = list(itertools.product(TYPE_ENVS, TYPE_ENVS))
    for g1, g2 in pairs:
        if env_leq(g1, g2) != leq_o(g1, g2):
            bad.append((g1, g2))
    return len(pairs), bad


# -- consistency predicates -------------------------------------------------

def env_consistent_table():
    bad = []
    pairs = list(itertools.product(TYPE_ENVS, DYN_ENVS))
    for g, e in pairs:
        if env_consistent(g, e) != cons_o(g, e):
            bad.append((g, e))
    return len(pairs), bad


CTX_TT = {("A", "m"): MethType(NIL_TYPE, B)}


def _ctx_if_then_x():
    return IfCtx(HOLE, Var("x"), Nil())


# Each shape maps (in_env with the hole bound, hole type) to
# (result type, out env) or None when the context does not type.
def _o_hole(g, t):
    return t, g


def _o_assign(g, t):
    return t, {**g, "x": t}


def _o_seq(g, t):
    return (g["y"], g) if "y" in g else None


def _o_recv(g, t):
    # only A.m is typed; a nil receiver never checks
    return (B, g) if t == A else None


def _o_arg(g, t):
    return (B, g) if sub_o(t, NIL_TYPE) else None


def _o_if(g, t):
    if "x" not in g:
        return None
    r = lub_o(g["x"], NIL_TYPE)
    return (r, g) if r is not None else None


CONTEXTS = (
    ("hole", HOLE, _o_hole),
    ("assign", AssignCtx("x", HOLE), _o_assign),
    ("seq", SeqCtx(HOLE, Var("y")), _o_seq),
    ("recv", CallRecvCtx(HOLE, "m", Nil()), _o_recv),
    ("arg", CallArgCtx(Instance("A"), "m", HOLE), _o_arg),
    ("if", _ctx_if_then_x(), _o_if),
)


def _ctx_oracle(fn, g, t):
    return fn({**g, HOLE_VAR: t}, t)


def frame_o(f: TypeStackFrame, d: Frame, fn) -> bool:
    if not cons_o(f.in_env, d.env):
        return False
    want = _ctx_oracle(fn, f.in_env, f.hole_type)
    return want is not None and want == (f.result_type, dict(f.out_env))


def _frame_cases():
    """Every frame over the small universe, claiming each result type and
    either the correct or an empty output environment."""
    for (name, ctx, fn), g, t, e in itertools.product(CONTEXTS, TYPE_ENVS, TYPES, DYN_ENVS):
        want = _ctx_oracle(fn, g, t)
        outs = [want[1]] if want else [{**g, HOLE_VAR: t}]
        outs.append({})
        for r, out in itertools.product(TYPES, outs):
            yield TypeStackFrame(g, t, out, r), Frame(e, ctx), fn


def stack_frame_table():
    n, bad = 0, []
    for f, d, fn in _frame_cases():
        n += 1
        if frame_consistent(CTX_TT, f, d) != frame_o(f, d, fn):
            bad.append((f, d))
    return n, bad


def stack_consistent_table():
    """Stacks of depth 0..2 over consistent frames, plus length mismatches."""
    g = {"x": A, "y": NIL_TYPE}
    e = {"x": Instance("A"), "y": Nil()}
    good = []
    for name, ctx, fn in CONTEXTS:
        for t in TYPES:
            want = _ctx_oracle(fn, g, t)
            if want is not None:
                good.append((TypeStackFrame(g, t, want[1], want[0]), Frame(e, ctx), fn))
            # a frame whose claimed result is off by one type
            for r in TYPES:
                if want is None or r != want[0]:
                    out = want[1] if want else {**g, HOLE_VAR: t}
                    good.append((TypeStackFrame(g, t, out, r), Frame(e, ctx), fn))
    n, bad = 0, []

    def oracle(fs):
        if not all(frame_o(f, d, fn) for f, d, fn in fs):
            return False
        return all(sub_o(fs[i][0].result_type, fs[i + 1][0].hole_type)
                   for i in range(len(fs) - 1))

    for k in (0, 1, 2):
        for fs in itertools.product(good, repeat=k):
            n += 1
            ts = [f for f, _, _ in fs]
            ds = [d for _, d, _ in fs]
            if stack_consistent(CTX_TT, ts, ds) != oracle(fs):
                bad.append(fs)
            # drop one dynamic frame: lengths disagree
            if k and stack_consistent(CTX_TT, ts, ds[1:]):
                bad.append(("length", fs))
            n += 1 if k else 0
    return n, bad


def stack_subtype_table():
    bad, n = [], 0
    for t, h in itertools.product(TYPES, TYPES):
        n += 1
        ts = [TypeStackFrame({}, h, {}, h)]
        if stack_subtype(t, ts) != sub_o(t, h):
            bad.append((t, h))
    return n, bad


K = ("A", "m")
BODIES = {
    "id": Premethod("x", Var("x")),
    "new": Premethod("x", New("A")),
    "nil": Premethod("x", Nil()),
    "self": Premethod("x", Call(SelfRef(), "m", Var("x"))),
    "other": Premethod("x", Call(New("B"), "m", Var("x"))),
}
METH_TYPES = [MethType(d, r) for d, r in itertools.product(TYPES, TYPES)]


def body_o(name: str, mt: MethType, tt: dict):
    """Result type and dependencies of a body, or None if it does not check."""
    if name == "id":
        return mt.dom, frozenset()
    if name == "new":
        return A, frozenset()
    if name == "nil":
        return NIL_TYPE, frozenset()
    if name == "self":
        sig = tt.get(K)
        if sig is not None and sub_o(mt.dom, sig.dom):
            return sig.rng, frozenset({K})
        return None
    return None  # B.m is never in the table


def entry_o(entry: CacheEntry, bname: str, tt: dict, dt: dict) -> bool:
    if dt.get(K) != entry.body or tt.get(K) != entry.method_type:
        return False
    if dict(entry.table_snapshot) != tt:
        return False
    got = body_o(bname, entry.method_type, entry.table_snapshot)
    return got == (entry.result_type, entry.deps) and sub_o(entry.result_type,
                                                              entry.method_type.rng)


def cache_consistent_table():
    n, bad = 0, []
    tts = [{}] + [{K: mt} for mt in METH_TYPES]
    dts = [{}] + [{K: b} for b in BODIES.values()]
    deps_opts = (frozenset(), frozenset({K}))
    for tt, dt in itertools.product(tts, dts):
        snaps = (tt, {}) if tt else (tt, {K: METH_TYPES[0]})
        n += 1
        if not consistent({}, tt, dt):
            bad.append(("empty", tt, dt))
        for (bname, body), mt, r, deps, snap in itertools.product(
                BODIES.items(), METH_TYPES, TYPES, deps_opts, snaps):
            entry = CacheEntry(mt, body, r, deps, snap)
            n += 1
            want = entry_o(entry, bname, tt, dt)
            if entry_consistent(K, entry, tt, dt) != want or \
                    consistent({K: entry}, tt, dt) != want:
                bad.append((tt, dt, entry))
    return n, bad


ALL_TABLES = {
    "subtype": subtype_table,
    "lub": lub_table,
    "join_env": join_env_table,
    "env_leq": env_leq_table,
    "env_consistent": env_consistent_table,
    "stack_subtype": stack_subtype_table,
    "stack_frame": stack_frame_table,
    "stack_consistent": stack_consistent_table,
    "cache_consistent": cache_consistent_table,
}
