"""Seeded random programs over a tiny alphabet.

Two shapes are produced:

* *declarative* programs never call a method at the top level, so they pass
  the top-level check (made against an empty type table) most of the time;
* *active* programs plan a few method signatures, define and annotate the
  methods, and call them. Bodies are generated against the planned
  signatures so that many of them check; a mutation pass then drops,
  moves, or rewrites annotations and definitions to provoke blame,
  invalidation, and multiple phases.
"""

from __future__ import annotations

import random
from typing import Optional

from ..syntax import (
    NIL, NIL_TYPE, Assign, Call, ClassType, Def, Expr, If, MethType, New, Nil,
    Premethod, SelfRef, Seq, TypeDecl, ValType, Var,
)
from ..typechecker import SELF, lub, lub_defined

CLASSES = ("A", "B", "C")
METHODS = ("f", "g", "h")
VARS = ("x", "y", "z")
PARAMS = ("x", "y")


def _seq(stmts: list) -> Expr:
    e = stmts[-1]
    for s in reversed(stmts[:-1]):
        e = Seq(s, e)
    return e


class _Gen:
    def __init__(self, rng: random.Random, budget: int):
        self.rng = rng
        self.budget = budget
        self.plan: dict = {}  # planned signatures, key -> MethType
        self.noise = 0.04
        self.inside: set = set()  # keys whose bodies are being generated

    # -- helpers ---------------------------------------------------------
    def spend(self, n: int = 1) -> bool:
        self.budget -= n
        return self.budget > 0

    def vtype(self) -> ValType:
        r = self.rng.random()
        return NIL_TYPE if r < 0.3 else ClassType(self.rng.choice(CLASSES))

    def sig(self) -> MethType:
        return MethType(self.vtype(), self.vtype())

    def value_of(self, t: ValType) -> Expr:
        if type(t) is ClassType and self.rng.random() < 0.85:
            return New(t.name)
        return Nil()

    def noise_leaf(self, env) -> Expr:
        r = self.rng.random()
        if r < 0.3:
            return Var(self.rng.choice(VARS))
        if r < 0.45:
            return SelfRef()
        if r < 0.7:
            return Call(New(self.rng.choice(CLASSES)), self.rng.choice(METHODS), Nil())
        return Call(Nil(), self.rng.choice(METHODS), Nil())

    # -- type-directed expressions ---------------------------------------
    def expr(self, env: dict, want: Optional[ValType], depth: int,
             calls: bool = True):
        """Return ``(e, out_env, type)``; ``want=None`` accepts any type."""
        rng = self.rng
        if rng.random() < self.noise:
            e = self.noise_leaf(env)
            self.spend()
            return e, env, want if want is not None else NIL_TYPE
        if depth <= 0 or not self.spend():
            return self.leaf(env, want, calls)
        choices = ["leaf", "seq", "assign", "if", "call", "call", "def", "type"]
        if not calls:
            choices = [c for c in choices if c != "call"]
        kind = rng.choice(choices)
        if kind == "seq":
            e1, g1, _ = self.expr(env, None, depth - 1, calls)
            e2, g2, t2 = self.expr(g1, want, depth - 1, calls)
            return Seq(e1, e2), g2, t2
        if kind == "assign":
            x = rng.choice(VARS)
            e1, g1, t1 = self.expr(env, want, depth - 1, calls)
            g2 = dict(g1)
            g2[x] = t1
            return Assign(x, e1), g2, t1
        if kind == "if":
            c, g0, _ = self.expr(env, None, depth - 1, calls)
            a, ga, ta = self.expr(g0, want, depth - 1, calls)
            b, gb, tb = self.expr(g0, want if want is not None else ta, depth - 1, calls)
            out = {x: lub(t, gb[x]) for x, t in ga.items()
                   if x in gb and lub_defined(t, gb[x])}
            t = lub(ta, tb) if lub_defined(ta, tb) else ta
            return If(c, a, b), out, t
        if kind == "call":
            r = self.call(env, want, depth, calls)
            if r is not None:
                return r
        if kind == "def":
            return self.defn(depth), env, NIL_TYPE
        if kind == "type":
            key = self.pick_key()
            return TypeDecl(*key, self.plan.get(key) or self.sig()), env, NIL_TYPE
        return self.leaf(env, want, calls)

    def leaf(self, env: dict, want: Optional[ValType], calls: bool):
        rng = self.rng
        fits = [x for x, t in env.items() if want is None or t == want or
                (type(t) is type(NIL_TYPE) and rng.random() < 0.5)]
        if fits and rng.random() < 0.6:
            x = rng.choice(fits)
            return (SelfRef() if x == SELF else Var(x)), env, env[x]
        if want is None:
            t = self.vtype()
        else:
            t = want
        e = self.value_of(t)
        return e, env, (NIL_TYPE if type(e) is Nil else t)

    def receiver(self, env: dict, cls: str) -> Expr:
        opts = [x for x, t in env.items() if t == ClassType(cls)]
        if opts and self.rng.random() < 0.5:
            x = self.rng.choice(opts)
            return SelfRef() if x == SELF else Var(x)
        return New(cls)

    def call(self, env: dict, want, depth: int, calls: bool):
        keys = [k for k, mt in self.plan.items() if (want is None or mt.rng == want
                or type(mt.rng) is type(NIL_TYPE)) and k not in self.inside]
        if not keys:
            return None
        key = self.rng.choice(keys)
        mt = self.plan[key]
        recv = self.receiver(env, key[0])
        if self.rng.random() < 0.5:
            arg, g1, _ = self.expr(env, mt.dom, depth - 1, calls)
        else:
            arg, g1 = self.leaf(env, mt.dom, calls)[:2]
        return Call(recv, key[1], arg), g1, mt.rng

    def pick_key(self) -> tuple:
        if self.plan and self.rng.random() < 0.8:
            return self.rng.choice(sorted(self.plan))
        return (self.rng.choice(CLASSES), self.rng.choice(METHODS))

    def defn(self, depth: int, key=None) -> Def:
        key = key or self.pick_key()
        mt = self.plan.get(key) or self.sig()
        param = self.rng.choice(PARAMS)
        env = {param: mt.dom, SELF: ClassType(key[0])}
        self.inside.add(key)
        try:
            body = self.body(env, mt, key, depth)
        finally:
            self.inside.discard(key)
        return Def(key[0], key[1], Premethod(param, body))

    def body(self, env: dict, mt: MethType, key, depth: int) -> Expr:
        rng = self.rng
        r = rng.random()
        param = next(x for x in env if x != SELF)
        if r < 0.12:
            # guarded recursion: one level deep when the argument is nil
            arg = Nil()
            rec = Call(SelfRef(), key[1], arg)
            base, _, _ = self.leaf(env, mt.rng, True)
            return If(Var(param), rec, base) if rng.random() < 0.5 else If(Var(param), base, rec)
        if r < 0.135:
            return Call(SelfRef(), key[1], Var(param))  # diverges
        e, _, _ = self.expr(env, mt.rng, depth, True)
        return e


def _declarative(g: _Gen, size: int) -> Expr:
    stmts = []
    env: dict = {}
    g.noise = 0.01
    while g.budget > 0 and len(stmts) < 12:
        r = g.rng.random()
        if r < 0.3:
            key = g.pick_key()
            g.plan.setdefault(key, g.sig())
            stmts.append(g.defn(3, key))
        elif r < 0.55:
            key = g.pick_key()
            stmts.append(TypeDecl(*key, g.plan.get(key) or g.sig()))
            g.spend()
        else:
            e, env, _ = g.expr(env, None, 3, calls=False)
            stmts.append(e)
    return _seq(stmts or [NIL])


def _active(g: _Gen, size: int) -> Expr:
    rng = g.rng
    nkeys = rng.randint(1, 3)
    keys = set()
    while len(keys) < nkeys:
        keys.add((rng.choice(CLASSES), rng.choice(METHODS)))
    keys = sorted(keys)
    for k in keys:
        g.plan[k] = g.sig()
    decls: list = []
    for k in keys:
        decls.append(g.defn(2, k))
        decls.append(TypeDecl(*k, g.plan[k]))
    rng.shuffle(decls)

    def top_call():
        k = rng.choice(keys)
        mt = g.plan[k]
        arg = g.value_of(mt.dom)
        if rng.random() < 0.08:
            arg = New(rng.choice(CLASSES))
        c = Call(New(k[0]), k[1], arg)
        if rng.random() < 0.3:
            return Assign(rng.choice(VARS), c)
        return c

    body: list = []
    ncalls = rng.randint(1, 4)
    for _ in range(ncalls):
        body.append(top_call())
        g.spend(3)
    # late changes between calls: redefinitions, re-annotations, new methods
    tail: list = []
    while g.budget > 0 and len(tail) < 4:
        r = rng.random()
        k = rng.choice(keys)
        if r < 0.35:
            tail.append(g.defn(2, k))
        elif r < 0.6:
            if rng.random() < 0.5:
                g.plan[k] = g.sig()
            tail.append(TypeDecl(*k, g.plan[k]))
            g.spend()
        else:
            tail.append(top_call())
            g.spend(3)
        if rng.random() < 0.5:
            tail.append(top_call())
    prog = decls + body + tail
    return _seq(_mutate(rng, prog))


def _mutate(rng: random.Random, prog: list) -> list:
    """Reorder or drop annotations to make blame-rich corpora."""
    r = rng.random()
    types = [i for i, s in enumerate(prog) if type(s) is TypeDecl]
    defs = [i for i, s in enumerate(prog) if type(s) is Def]
    if r < 0.12 and types:
        del prog[rng.choice(types)]
    elif r < 0.24 and types:
        s = prog.pop(rng.choice(types))
        prog.insert(rng.randrange(len(prog) + 1), s)
    elif r < 0.32 and defs:
        del prog[rng.choice(defs)]
    elif r < 0.40 and types:
        i = rng.choice(types)
        s = prog[i]
        prog[i] = TypeDecl(s.cls, s.meth, MethType(s.mtype.rng, s.mtype.dom))
    return prog or [NIL]


def gen_program(seed: int, size: int = 30) -> Expr:
    """Deterministic in ``(seed, size)``."""
    if size < 1:
        raise ValueError("size must be positive")
    rng = random.Random(seed * 1_000_003 + size)
    g = _Gen(rng, size)
    if rng.random() < 0.4:
        return _declarative(g, size)
    return _active(g, size)
