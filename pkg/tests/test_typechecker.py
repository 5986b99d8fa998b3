import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jitcheck.syntax import NIL_TYPE, ClassType, MethType, parse
from jitcheck.typechecker import (
    LubUndefined, StaticTypeError, body_env, env_leq, join_env, lub, lub_defined,
    subtype, typecheck,
)

import tables
from strategies import exprs, val_types

A, B = ClassType("A"), ClassType("B")


@pytest.mark.parametrize("name", ["subtype", "lub", "join_env", "env_leq"])
def test_exhaustive_table(name):
    n, bad = tables.ALL_TABLES[name]()
    assert n > 0 and bad == []


def test_subtype_examples():
    assert subtype(NIL_TYPE, A)
    assert subtype(A, A)
    assert not subtype(A, B)
    assert not subtype(A, NIL_TYPE)


def test_lub_examples():
    assert lub(A, A) == A
    assert lub(NIL_TYPE, B) == B
    with pytest.raises(LubUndefined):
        lub(A, B)
    assert not lub_defined(A, B)


def test_join_env_examples():
    assert join_env({"x": A}, {"x": A, "y": B}) == {"x": A}
    assert join_env({"x": NIL_TYPE}, {"x": B}) == {"x": B}
    assert join_env({"x": A}, {"x": B}) == {}


def test_env_leq_examples():
    assert env_leq({"x": A, "y": B}, {"x": A})
    assert env_leq({"x": NIL_TYPE}, {"x": A})
    assert not env_leq({}, {"x": A})


def test_assign_then_read():
    r = typecheck({}, {}, parse("x = A.new; x"))
    assert (dict(r.out_env), r.typ, r.deps) == ({"x": A}, A, frozenset())


def test_call_on_self_records_dependency():
    r = typecheck({("A", "m"): MethType(A, NIL_TYPE)}, {"self": A}, parse("self.m(A.new)"))
    assert r.typ == NIL_TYPE
    assert r.deps == {("A", "m")}


def test_call_to_untyped_method_is_rejected():
    with pytest.raises(StaticTypeError) as info:
        typecheck({}, {}, parse("B.new.m(nil)"))
    assert info.value.rule == "TApp" and info.value.reason == "no-type"
    assert "B.m not in type table" in info.value.render()


def test_variable_dropped_by_join_cannot_be_read():
    with pytest.raises(StaticTypeError) as info:
        typecheck({}, {}, parse("if nil then x = A.new else nil end; x"))
    assert info.value.rule == "TVar"


def test_join_of_incompatible_assignments_drops_variable():
    src = "if nil then x = A.new; nil else x = B.new; nil end"
    r = typecheck({}, {}, parse(src))
    assert "x" not in r.out_env
    with pytest.raises(StaticTypeError):
        typecheck({}, {}, parse(src + "; x"))


def test_branches_without_join_are_rejected():
    with pytest.raises(StaticTypeError) as info:
        typecheck({}, {}, parse("if nil then A.new else B.new end"))
    assert info.value.rule == "TIf"


def test_nil_branch_joins_to_class():
    r = typecheck({}, {}, parse("if nil then nil else A.new end"))
    assert r.typ == A


def test_nil_receiver_is_rejected_statically():
    with pytest.raises(StaticTypeError) as info:
        typecheck({("A", "m"): MethType(NIL_TYPE, NIL_TYPE)}, {}, parse("x = nil; x.m(nil)"))
    assert info.value.reason == "nil-receiver"


def test_argument_subtyping():
    tt = {("A", "m"): MethType(A, B)}
    assert typecheck(tt, {}, parse("A.new.m(nil)")).typ == B
    with pytest.raises(StaticTypeError) as info:
        typecheck(tt, {}, parse("A.new.m(B.new)"))
    assert info.value.reason == "arg"


def test_def_and_type_are_nil_and_do_not_touch_the_table():
    # a type declared earlier in the same body is not visible to the check
    with pytest.raises(StaticTypeError):
        typecheck({}, {}, parse("type B.k : nil -> nil; B.new.k(nil)"))
    r = typecheck({}, {}, parse("def A.m(x) y end"))  # bodies are not checked here
    assert r.typ == NIL_TYPE


def test_flow_sensitive_reassignment():
    r = typecheck({}, {}, parse("x = A.new; x = B.new; x"))
    assert r.typ == B and r.out_env["x"] == B


def test_deps_include_failed_lookup_keys_of_checked_calls():
    tt = {("A", "f"): MethType(NIL_TYPE, B), ("B", "g"): MethType(NIL_TYPE, A)}
    r = typecheck(tt, {}, parse("A.new.f(nil).g(nil)"))
    assert r.typ == A
    assert r.deps == {("A", "f"), ("B", "g")}


def test_body_env():
    assert body_env("x", MethType(NIL_TYPE, A), "C") == {"x": NIL_TYPE, "self": ClassType("C")}


def test_error_render_has_position():
    with pytest.raises(StaticTypeError) as info:
        typecheck({}, {}, parse("nil;\n  y"))
    assert info.value.render().startswith("2:3: [TVar]")


# -- properties -----------------------------------------------------------

envs = st.dictionaries(st.sampled_from(["x", "y", "tmp1", "self"]), val_types, max_size=4)
tts = st.dictionaries(st.tuples(st.sampled_from(["A", "B", "Cls"]),
                                st.sampled_from(["m", "f", "go_2"])),
                      st.builds(MethType, val_types, val_types), max_size=6)


@given(envs, envs)
def test_join_is_an_upper_bound(g1, g2):
    j = join_env(g1, g2)
    assert env_leq(g1, j) and env_leq(g2, j)


@given(envs, envs)
def test_join_is_commutative(g1, g2):
    assert join_env(g1, g2) == join_env(g2, g1)


@given(envs)
def test_env_leq_reflexive(g):
    assert env_leq(g, g)


@settings(max_examples=300, deadline=None)
@given(tts, envs, exprs)
def test_typecheck_is_deterministic_and_keys_come_from_calls(tt, g, e):
    try:
        r1 = typecheck(tt, g, e)
    except StaticTypeError as err:
        with pytest.raises(StaticTypeError) as again:
            typecheck(tt, g, e)
        assert again.value.render() == err.render()
        return
    r2 = typecheck(tt, g, e)
    assert r1 == r2
    assert r1.deps <= set(tt)


@settings(max_examples=300, deadline=None)
@given(tts, envs, envs, exprs)
def test_strengthening_the_environment_preserves_typing(tt, g, extra, e):
    """Checking under a smaller environment (g' <= g) still succeeds, at a
    subtype, with a smaller output environment."""
    try:
        r = typecheck(tt, g, e)
    except StaticTypeError:
        return
    narrow = dict(g)
    for x, t in extra.items():
        if x not in g:
            narrow[x] = t
        elif subtype(NIL_TYPE, g[x]) and x != "self" and t == NIL_TYPE:
            narrow[x] = NIL_TYPE
    assert env_leq(narrow, g)
    try:
        r2 = typecheck(tt, narrow, e)
    except StaticTypeError as err:
        # narrowing to nil can only fail at a receiver
        assert err.reason == "nil-receiver"
        return
    assert subtype(r2.typ, r.typ)
    assert env_leq(r2.out_env, r.out_env)
