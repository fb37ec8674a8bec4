from __future__ import annotations

from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import constraint_sets, raw_types
from lucretia.constraints import (
    FilterEmptiesField, entails, entails_record, entails_type, filter_attr, is_definite,
    label_exit_failure, label_result, merge, merge_records, postcondition_failure,
    precondition_failure, reallocated, update,
)
from lucretia.parser import parse_constraints as C, parse_type as T
from lucretia.syntax import BOT, ConstraintSet, Record, alternatives, join


def R(text: str) -> Record:
    return C(f"Z <| {text}").get("Z")


# --- definite types -------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("int", True), ("X", True), ("[]() -> int []", True), ("int \\/ str", True),
    ("int \\/ bot", False), ("bot", False),
])
def test_is_definite(text, expected):
    assert is_definite(T(text)) is expected


# --- merge ----------------------------------------------------------------

def test_merge_records_examples():
    assert merge_records(R("{a: int}"), R("{a: str}")) == R("{a: int \\/ str}")
    assert merge_records(R("{}"), R("{a: int}")) == R("{a: int \\/ bot}")
    assert merge_records(R("{}"), R("{}")) == R("{}")
    # one-sided fields in the general case
    assert merge_records(R("{a: int, b: str}"), R("{a: int, c: bool}")) == \
        R("{a: int, b: str \\/ bot, c: bool \\/ bot}")


def test_merge_examples():
    assert merge(C("X <| {a: int}"), C("X <| {a: str}")) == C("X <| {a: int \\/ str}")
    psi = C("X <| {a: int}, Y <| {b: str}")
    assert merge(psi, ConstraintSet()) == psi
    assert merge(C("X <| {a: int}"), C("Y <| {}")) == C("X <| {a: int}, Y <| {}")


@given(constraint_sets(), constraint_sets())
def test_merge_commutes(a, b):
    assert merge(a, b) == merge(b, a)


@given(constraint_sets(), constraint_sets(), constraint_sets())
def test_merge_associates(a, b, c):
    assert merge(merge(a, b), c) == merge(a, merge(b, c))


# --- update ---------------------------------------------------------------

def test_update_examples():
    assert update(C("X <| {a: int}"), C("X <| {a: str}")) == C("X <| {a: str}")
    psi = C("X <| {a: int}")
    assert update(psi, ConstraintSet()) == psi
    assert update(ConstraintSet(), C("X <| {}")) == C("X <| {}")


@given(constraint_sets(), constraint_sets(), constraint_sets())
def test_update_associates(a, b, c):
    assert update(update(a, b), c) == update(a, update(b, c))


# --- filter ---------------------------------------------------------------

def test_filter_examples():
    assert filter_attr(C("X <| {a: int \\/ bot, b: str}"), "X", "a") == C("X <| {a: int, b: str}")
    psi = C("X <| {a: int}")
    assert filter_attr(psi, "X", "a") == psi
    psi = C("X <| {b: int}")
    assert filter_attr(psi, "X", "a") == psi


def test_filter_all_bot_field_is_an_error():
    with pytest.raises(FilterEmptiesField):
        filter_attr(C("X <| {a: bot}"), "X", "a")


@given(constraint_sets(), st.sampled_from("XYZ"), st.sampled_from("abc"))
def test_filter_strengthens(psi, var, attr):
    try:
        out = filter_attr(psi, var, attr)
    except FilterEmptiesField:
        return
    assert entails(out, psi)


# --- entailment -----------------------------------------------------------

def test_entails_type_examples():
    assert entails_type(T("int"), T("int"))
    assert entails_type(T("int"), T("int \\/ str"))
    assert not entails_type(T("int \\/ str"), T("int"))


def test_entails_examples():
    assert entails(C("X <| {a: int, b: str}"), C("X <| {b: str}"))
    assert entails(C("X <| {a: int}"), C("X <| {a: int \\/ str}"))
    # a field that may be absent is implied by a record without it
    assert entails(C("X <| {}"), C("X <| {a: int \\/ bot}"))
    assert not entails(C("X <| {}"), C("X <| {a: int}"))
    # variables bound only on the right are unconstrained
    assert entails(C("X <| {}"), C("X <| {}, Y <| {a: int}"))


def test_empty_right_side_axiom_is_inconsistent_with_the_update_lemma():
    # Keeping "psi entails empty" together with "psi2 entails psi1 <| psi2" and
    # transitivity makes every set entail every other; the implementation
    # drops the axiom.  The witness chain:
    a, b = C("X <| {}"), C("X <| {a: int}")
    empty = ConstraintSet()
    assert update(b, empty) == b           # so the update lemma gives  empty |- b
    assert entails(a, a)
    assert not entails(a, b)               # and  a |- empty |- b  would make this true
    assert not entails(a, empty)


def _records_reachable(r1: Record, r2: Record) -> bool:
    """Breadth-first search over single rule applications, inside the finite
    universe of field names and disjuncts that occur in either record.

    Rules: widen a field by one disjunct; drop a field; add an absent field
    with type bot (then widen it); reflexivity is the start state.
    """
    names = sorted(set(r1.names()) | set(r2.names()))
    universe = {BOT}
    for r in (r1, r2):
        for _, t in r:
            universe |= set(alternatives(t))
    universe = sorted(universe, key=repr)

    def state(r):
        return frozenset((k, frozenset(alternatives(t))) for k, t in r)

    start, goal = state(r1), state(r2)
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s == goal:
            return True
        fields = dict(s)
        nexts = []
        for k, alts in fields.items():
            rest = {n: a for n, a in fields.items() if n != k}
            nexts.append(frozenset(rest.items()))
            for u in universe:
                if u not in alts:
                    nexts.append(frozenset({**fields, k: alts | {u}}.items()))
        for k in names:
            if k not in fields:
                nexts.append(frozenset({**fields, k: frozenset({BOT})}.items()))
        for n in nexts:
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return False


small_types = st.sampled_from([T("int"), T("str"), T("X"), BOT, T("int \\/ bot"), T("int \\/ str")])
small_records = st.dictionaries(st.sampled_from("ab"), small_types, max_size=2).map(Record.of)


@settings(max_examples=300)
@given(small_records, small_records)
def test_entails_record_matches_rule_search(r1, r2):
    assert entails_record(r1, r2) == _records_reachable(r1, r2)


def _sets_reachable(a: ConstraintSet, b: ConstraintSet) -> bool:
    # no rule removes a binding; a fresh binding may carry any record
    return all(v in b and _records_reachable(r, b.get(v)) for v, r in a)


small_sets = st.dictionaries(st.sampled_from("XY"), small_records, max_size=2).map(ConstraintSet.of)


@settings(max_examples=300)
@given(small_sets, small_sets)
def test_entails_matches_rule_search(a, b):
    assert entails(a, b) == _sets_reachable(a, b)


@given(constraint_sets())
def test_entails_reflexive(a):
    assert entails(a, a)


@given(constraint_sets(), constraint_sets())
def test_merge_is_entailed(a, b):
    assert entails(a, merge(a, b))
    assert entails(b, merge(a, b))


@given(constraint_sets(), constraint_sets())
def test_update_is_entailed(a, b):
    assert entails(b, update(a, b))


@settings(max_examples=300)
@given(small_sets, small_sets, small_sets)
def test_entails_transitive_small(a, b, c):
    if entails(a, b) and entails(b, c):
        assert entails(a, c)


@given(raw_types, raw_types)
def test_entails_type_is_alternative_inclusion(t1, t2):
    assert entails_type(t1, t2) == (set(alternatives(join(t1))) <= set(alternatives(join(t2))))


# --- closed-world checks used by the typechecker --------------------------

def test_precondition_field_by_field():
    assert precondition_failure(C("X <| {a: int}"), C("X <| {a: int \\/ str}")) is None
    assert precondition_failure(C("X <| {}"), C("X <| {a: int}")) is not None
    assert precondition_failure(C("Y <| {}"), C("X <| {}")) is not None


def test_precondition_rejects_fields_it_does_not_know():
    assert precondition_failure(C("X <| {a: str}"), C("X <| {}")) is not None
    # a field known to be absent may be forgotten
    assert precondition_failure(C("X <| {a: bot}"), C("X <| {}")) is None


def test_callers_other_variables_are_framed():
    assert precondition_failure(C("X <| {}, Y <| {b: int}"), C("X <| {}")) is None


def test_reallocated():
    assert reallocated(C("X <| {}"), C(""), C("X <| {}")) == ["X"]
    assert reallocated(C("X <| {}"), C("X <| {}"), C("X <| {}")) == []
    assert reallocated(C(""), C(""), C("X <| {}")) == []


def test_postcondition_keeps_every_field():
    assert postcondition_failure(C("X <| {a: int}"), C("X <| {a: int \\/ str}")) is None
    assert postcondition_failure(C("X <| {a: int}"), C("X <| {}")) is not None
    assert postcondition_failure(C("X <| {a: int}"), C("")) is not None
    assert postcondition_failure(C("X <| {}"), C("X <| {a: int \\/ bot}")) is None


def test_label_exits_merge_then_take_the_annotation():
    exits = [C("X <| {a: int}, Y <| {}"), C("X <| {}, Y <| {}")]
    post = C("X <| {a: int \\/ bot}")
    assert all(label_exit_failure(e, post) is None for e in exits)
    assert label_result(exits, post) == C("X <| {a: int \\/ bot}, Y <| {}")
    assert label_exit_failure(C("X <| {}"), C("X <| {a: int}")) is not None
