from __future__ import annotations

import pytest

from helpers import ILL_TYPED, WELL_TYPED
from lucretia.generator import generate_program
from lucretia.parser import parse_constraints as C, parse_program, parse_type as T
from lucretia.printer import pretty_constraints, pretty_type
from lucretia.syntax import INT, STR, ConstraintSet, GetField, Loc, TArrow, TOr, TVar, Var
from lucretia.typechecker import (
    ErrorKind, TypeCheckError, TypeResult, TypeState, describe, join_branches, synthesize,
    typecheck_program,
)


def check(text: str) -> TypeResult:
    return typecheck_program(parse_program(text))


def kind_of(text: str) -> ErrorKind:
    with pytest.raises(TypeCheckError) as info:
        check(text)
    return info.value.kind


def test_constant():
    assert check("5") == TypeResult(INT, ConstraintSet())


def test_new():
    r = check("new")
    assert r.type == TVar("X0") and r.post == C("X0 <| {}")


def test_update_fresh():
    # (new), (let), (update-fresh) by hand: X0 <| {} then a: int added
    r = check("let x = new in x.a := 1")
    assert r.type == INT and r.post == C("X0 <| {a: int}")


def test_update_old_discards_the_previous_type():
    r = check('let x = new in let u = x.a := 1 in x.a := "s"')
    assert r.type == STR and r.post == C("X0 <| {a: str}")


def test_access_of_indefinite_field():
    state = TypeState(pre=C("X <| {a: int \\/ bot}"), env={"x": TVar("X")})
    with pytest.raises(TypeCheckError) as info:
        synthesize(state, GetField(Var("x"), "a"))
    assert info.value.kind is ErrorKind.IndefiniteFieldType
    assert info.value.rule == "access"


def test_access_of_missing_field():
    assert kind_of("let x = new in ifhasattr(x, a) then x.a else 0") in (
        ErrorKind.MissingField, ErrorKind.IndefiniteFieldType)


def test_label_and_break():
    assert check("label n : [ ]( ) -> int [ ] { break n 7 }") == TypeResult(INT, ConstraintSet())


def test_location_typed_by_sigma():
    state = TypeState(pre=C("X <| {a: int}"), locs={0: TVar("X")})
    assert synthesize(state, GetField(Loc(0), "a")).type == INT
    with pytest.raises(TypeCheckError) as info:
        synthesize(TypeState(), Loc(1))
    assert info.value.kind is ErrorKind.UnboundLocation


def test_join_branches_examples():
    psi = C("X <| {a: int}")
    assert join_branches(TypeResult(INT, psi), TypeResult(INT, psi)) == TypeResult(INT, psi)
    r = join_branches(TypeResult(INT, C("X <| {a: int}")), TypeResult(STR, C("X <| {}")))
    assert r.type == T("int \\/ str") and r.post == C("X <| {a: int \\/ bot}")


def test_break_result_joins_as_never():
    r = check("label l: []() -> int [] { if true then break l 1 else 2 }")
    assert r.type == INT


def test_ifhasattr_refines_then_branch():
    r = check("let o = new in let u = if true then o.a := 1 else 0 in ifhasattr(o, a) then o.a else 0")
    assert r.type == INT and r.post == C("X0 <| {a: int \\/ bot}")


def test_function_value_leaves_outer_constraints_alone():
    r = check("let o = new in let f = func(p): [X0 <| {}](X0) -> int [X0 <| {a: int}] { p.a := 1 } in 0")
    assert r.post == C("X0 <| {}")


def test_call_applies_the_callee_post():
    r = check("let o = new in let f = func(p): [X0 <| {}](X0) -> int [X0 <| {a: int}] { p.a := 1 } in let u = f(o) in o.a")
    assert r.type == INT and r.post == C("X0 <| {a: int}")


def test_argument_types_may_be_weaker():
    assert check("func(x): [](int \\/ str) -> int [] { 1 }(2)").type == INT


def test_labels_are_not_visible_inside_functions():
    assert kind_of("label l: []() -> int [] { let f = func(): []() -> int [] { break l 1 } in f() }") \
        is ErrorKind.UnboundVariable


def test_label_post_may_widen_fields():
    r = check("let o = new in label l: []() -> int [X0 <| {a: int \\/ str}] { o.a := 1 }")
    assert r.post == C("X0 <| {a: int \\/ str}")


@pytest.mark.parametrize("text,kind", [
    ("x", ErrorKind.UnboundVariable),
    ("let x = 1 in x.a", ErrorKind.NotAnObjectVariable),
    ("let f = 1 in f(2)", ErrorKind.NotAFunction),
    ("let o = new in o.a", ErrorKind.MissingField),
    ("if 1 then 2 else 3", ErrorKind.ConditionNotBool),
    ("let o = new in let f = func(p): [X0 <| {a: int}](X0) -> int [X0 <| {a: int}] { 1 } in f(o)",
     ErrorKind.CallPreconditionFailure),
    ("func(x): [](int) -> int [] { x }(1, 2)", ErrorKind.ArityMismatch),
    ("func(x): [](int) -> int [] { x }(true)", ErrorKind.CallPreconditionFailure),
    ("func(x): [](int) -> str [] { x }", ErrorKind.AnnotationMismatch),
    ("func(x, y): [](int) -> int [] { x }", ErrorKind.ArityMismatch),
    ("label l: []() -> int [] { break l true }", ErrorKind.BreakPostconditionFailure),
    ("label l: []() -> int [] { true }", ErrorKind.LabelPostconditionFailure),
    ("let o = new in label l: []() -> int [X0 <| {a: int}] { 1 }", ErrorKind.LabelPostconditionFailure),
    ("not(1)", ErrorKind.PrimopSignatureMismatch),
    ("add(1)", ErrorKind.PrimopSignatureMismatch),
    ("let mk = func(): []() -> X0 [X0 <| {}] { new } in let a = mk() in mk()", ErrorKind.SiteReallocated),
])
def test_error_kinds(text, kind):
    assert kind_of(text) is kind


def test_errors_render_with_position_and_rule():
    with pytest.raises(TypeCheckError) as info:
        check("let o = new in\n  o.a")
    err = info.value
    assert err.render("f.luc").startswith("f.luc:2:3: MissingField [access]:")
    assert err.to_json("f.luc")["kind"] == "MissingField"


def test_describe():
    assert describe(check("let x = new in x.a := 1")) == "type: int  post: [X0 <| {a: int}]"


@pytest.mark.parametrize("entry", WELL_TYPED, ids=lambda c: c.name)
def test_corpus_well_typed(entry):
    r = typecheck_program(parse_program(entry.text))
    assert pretty_type(r.type) == entry.type
    assert pretty_constraints(r.post) == entry.post


@pytest.mark.parametrize("entry", ILL_TYPED, ids=lambda c: c.name)
def test_corpus_ill_typed(entry):
    with pytest.raises(TypeCheckError) as info:
        typecheck_program(parse_program(entry.text))
    assert info.value.kind.value == entry.expect


def free_type_vars(t) -> set[str]:
    """Variables not described by any enclosing arrow's pre or post."""
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, TOr):
        return set().union(*(free_type_vars(a) for a in t.alts))
    if isinstance(t, TArrow):
        inner = set().union(free_type_vars(t.result), *(free_type_vars(p) for p in t.params))
        for cs in (t.pre, t.post):
            for _, r in cs:
                for _, ft in r:
                    inner |= free_type_vars(ft)
        return inner - set(t.pre.vars()) - set(t.post.vars())
    return set()


@pytest.mark.parametrize("seed", range(60))
def test_result_type_variables_are_bound(seed):
    r = typecheck_program(generate_program(seed, 6))
    bound = set(r.post.vars())
    assert free_type_vars(r.type) <= bound
    for _, record in r.post:
        for _, t in record:
            assert free_type_vars(t) <= bound


def test_checking_is_deterministic():
    e = generate_program(7, 6)
    assert typecheck_program(e) == typecheck_program(e)
