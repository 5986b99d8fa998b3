"""Step-by-step preservation checking.

A :class:`Monitor` rides along with :func:`jitcheck.machine.execute` and
keeps the static picture the soundness argument talks about: a type
environment for the running activation and a type stack mirroring the call
stack. After every step it checks

* the type environment is consistent with the dynamic one,
* the cache is consistent with the current tables,
* optionally, the type stack is consistent with the call stack,
* the current expression still type checks, at a type the waiting
  context accepts, with an output environment no weaker than before.

Activations that start out ill-typed (the top level of most programs) are
tracked for environments only.

The typing rules have no subsumption at a call receiver, so once a variable
of class type ``A`` holding ``nil`` is substituted into receiver position
the remaining expression stops type checking even though nothing has gone
wrong: the call will simply blame the nil receiver. Those events are
counted in ``receiver_gaps`` and the activation stops being typing-tracked;
they are not violations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .. import cache as cachemod
from ..machine import Config, Next, depth, stype
from ..syntax import Call, Expr, ValType, show
from ..typechecker import (
    StaticTypeError, TypeEnv, body_env, env_leq, subtype, typecheck,
)
from .consistency import TypeStackFrame, env_consistent, frame_consistent, type_context


class PreservationViolation(AssertionError):
    def __init__(self, step: int, what: str, detail: str):
        self.step = step
        self.what = what
        self.detail = detail
        super().__init__(f"step {step}: {what}: {detail}")


@dataclass
class _Activation:
    gamma: dict
    typed: bool
    expected: Optional[ValType]
    out_env: Optional[TypeEnv] = None


@dataclass
class MonitorReport:
    steps: int = 0
    violations: list = field(default_factory=list)
    receiver_gaps: int = 0
    typed_steps: int = 0
    stack_checks: int = 0


class Monitor:
    def __init__(self, program: Expr, check_stack: bool = False, strict: bool = False):
        self.check_stack = check_stack
        self.strict = strict
        self.report = MonitorReport()
        try:
            r = typecheck({}, {}, program)
            top = _Activation({}, True, r.typ, r.out_env)
        except StaticTypeError:
            top = _Activation({}, False, None)
        self.acts: list[_Activation] = [top]
        # parallel to the call stack, bottom first; None = caller untracked
        self.tstack: list[Optional[TypeStackFrame]] = []
        self._cache_ok = None  # (cache, tt, dt) last verified
        self._stack_tt = None
        self._stack_ok: dict = {}  # id(stack node) -> node verified under _stack_tt

    # -- bookkeeping --------------------------------------------------
    def _violate(self, what: str, detail: str) -> None:
        v = PreservationViolation(self.report.steps, what, detail)
        self.report.violations.append(v)
        if self.strict:
            raise v

    def _retype(self, act: _Activation, c: Config, pushed: bool) -> None:
        """Re-derive the current expression's type after a step."""
        try:
            r = typecheck(c.tt, act.gamma, c.expr)
        except StaticTypeError as err:
            act.typed = False
            if err.reason == "nil-receiver":
                self.report.receiver_gaps += 1
            else:
                self._violate("typing", f"{err.render()} in {show(c.expr)}")
            return
        self.report.typed_steps += 1
        if act.expected is not None and not subtype(r.typ, act.expected):
            self._violate("stack subtyping",
                          f"expression type {r.typ} does not fit {act.expected}")
        if not pushed and act.out_env is not None and not env_leq(r.out_env, act.out_env):
            self._violate("output environment",
                          f"{dict(r.out_env)} is not below {dict(act.out_env)}")
        act.out_env = r.out_env

    # -- observer protocol --------------------------------------------
    def __call__(self, before: Config, t: Next) -> None:
        self.report.steps += 1
        after = t.config
        rule = t.rule
        if rule in ("EAppMiss", "EAppHit"):
            self._enter(before, t)
        elif rule == "ERet":
            self.acts.pop()
            popped = self.tstack.pop()
            act = self.acts[-1]
            if act.typed:
                self._retype(act, after, pushed=True)
                if act.typed and popped is not None:
                    r = typecheck(after.tt, act.gamma, after.expr)
                    if not subtype(r.typ, popped.result_type):
                        self._violate("return", f"{r.typ} exceeds {popped.result_type}")
        else:
            act = self.acts[-1]
            if rule == "EAssn":
                act.gamma = dict(act.gamma)
                act.gamma[t.redex.name] = stype(t.redex.value)
            if act.typed:
                self._retype(act, after, pushed=False)
        self._check_config(after)

    def _enter(self, before: Config, t: Next) -> None:
        call: Call = t.redex
        key = (call.recv.cls, call.meth)
        mt = before.tt[key]
        pm = before.dt[key]
        caller = self.acts[-1]
        try:
            r = type_context(before.tt, caller.gamma, mt.rng, t.ctx)
            frame = TypeStackFrame(dict(caller.gamma), mt.rng, r.out_env, r.typ)
            if caller.expected is not None and caller.typed and not subtype(r.typ, caller.expected):
                self._violate("stack subtyping",
                              f"context result {r.typ} does not fit {caller.expected}")
        except StaticTypeError as err:
            frame = None
            if caller.typed:
                self._violate("contextual substitution", err.render())
        self.tstack.append(frame)
        gamma = body_env(pm.param, mt, key[0])
        try:
            body = typecheck(before.tt, gamma, pm.body)
        except StaticTypeError as err:
            self._violate("body check", f"{t.rule} entered {key[0]}.{key[1]} "
                          f"whose body does not check: {err.render()}")
            self.acts.append(_Activation(gamma, False, mt.rng))
            return
        if not subtype(body.typ, mt.rng):
            self._violate("body check", f"{key[0]}.{key[1]} returns {body.typ}, "
                          f"declared {mt.rng}")
        self.acts.append(_Activation(gamma, True, mt.rng, body.out_env))

    def _check_config(self, c: Config) -> None:
        act = self.acts[-1]
        if not env_consistent(act.gamma, c.env):
            self._violate("environment consistency",
                          f"{dict(act.gamma)} vs {_show_env(c.env)}")
        key = (c.cache, c.tt, c.dt)
        ok = self._cache_ok
        if ok is None or any(a is not b for a, b in zip(ok, key)):
            bad = cachemod.inconsistencies(c.cache, c.tt, c.dt)
            if bad:
                self._violate("cache consistency", "; ".join(bad))
            self._cache_ok = key
        if self.check_stack:
            self._check_stack(c)

    def _check_stack(self, c: Config) -> None:
        # The call stack is persistent: a node already verified under the
        # same type table still describes the same frames, so only the
        # nodes pushed since then need checking.
        n = depth(c.stack)
        if n != len(self.tstack):
            self._violate("stack consistency",
                          f"{len(self.tstack)} type frames for {n} call frames")
            return
        self.report.stack_checks += 1
        if c.tt is not self._stack_tt:
            self._stack_tt = c.tt
            self._stack_ok = {}
        node, i = c.stack, n - 1
        while node is not None and self._stack_ok.get(id(node)) is not node:
            f = self.tstack[i]
            if f is not None:
                if not frame_consistent(c.tt, f, node.top):
                    self._violate("stack consistency",
                                  f"frame awaiting {f.hole_type} no longer types its context")
                below = self.tstack[i - 1] if i > 0 else None
                # the frame below receives this frame's result
                if below is not None and not subtype(f.result_type, below.hole_type):
                    self._violate("stack consistency",
                                  f"frame result {f.result_type} does not fit {below.hole_type}")
            self._stack_ok[id(node)] = node
            node, i = node.rest, i - 1


def _show_env(env) -> str:
    return "{" + ", ".join(f"{k}: {show(v)}" for k, v in env.items()) + "}"
