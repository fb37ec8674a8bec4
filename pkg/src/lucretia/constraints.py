"""Constraint-set algebra: definiteness, branch merge, call update, attribute
filtering and the entailment relation between constraint sets."""
from __future__ import annotations

from functools import lru_cache

from .printer import pretty_type
from .syntax import (
    BOT, ConstraintSet, Record, TArrow, TConst, TNever, TOr, TVar, Type,
    alternatives, contains_bot, join, normalize_type, without_bot,
)


class FilterEmptiesField(Exception):
    """Filtering ``X <| {a: ...}`` by attribute ``a`` left no alternative."""

    def __init__(self, var: str, attr: str) -> None:
        super().__init__(f"every alternative of {var}.{attr} is bot")
        self.var = var
        self.attr = attr


def is_definite(t: Type) -> bool:
    """A type is definite when no disjunct is ⊥."""
    if isinstance(t, (TConst, TVar, TArrow)):
        return True
    if isinstance(t, TOr):
        return all(is_definite(a) for a in t.alts)
    return False


def merge_records(r1: Record, r2: Record) -> Record:
    fields: dict[str, Type] = {}
    for name, t in r1:
        other = r2.get(name)
        fields[name] = join(t, other if other is not None else BOT)
    for name, t in r2:
        if name not in fields:
            fields[name] = join(t, BOT)
    return Record.of(fields)


def merge(cs1: ConstraintSet, cs2: ConstraintSet) -> ConstraintSet:
    """Join of the knowledge from two branches.

    A variable bound on one side only keeps its record unchanged.
    """
    out = dict(cs1.bindings)
    for var, r in cs2:
        out[var] = merge_records(out[var], r) if var in out else r
    return ConstraintSet.of(out)


def update(cs1: ConstraintSet, cs2: ConstraintSet) -> ConstraintSet:
    """``cs1`` overridden by the bindings of ``cs2``."""
    out = dict(cs1.bindings)
    out.update(cs2.bindings)
    return ConstraintSet.of(out)


def filter_attr(cs: ConstraintSet, var: str, attr: str) -> ConstraintSet:
    """Knowledge in the branch where ``var`` is known to have ``attr``."""
    record = cs.get(var)
    if record is None:
        return cs
    t = record.get(attr)
    if t is None:
        return cs
    narrowed = without_bot(t)
    if isinstance(narrowed, TNever):
        raise FilterEmptiesField(var, attr)
    return cs.set(var, record.set(attr, narrowed))


@lru_cache(maxsize=65536)
def entails_type(t1: Type, t2: Type) -> bool:
    """``t1 ⊩c t2`` on (normalized) field types.

    Alternatives are atomic under the rules, so reflexivity, disjunction
    introduction and congruence close to: every alternative of ``t1`` is an
    alternative of ``t2``.  ``never`` entails everything.
    """
    t1, t2 = normalize_type(t1), normalize_type(t2)
    if isinstance(t1, TNever):
        return True
    right = set(alternatives(t2))
    return all(a in right for a in alternatives(t1))


@lru_cache(maxsize=65536)
def entails_record(r1: Record, r2: Record) -> bool:
    """``r1 ⊩c r2``.

    Closing the record rules (drop a field, weaken a field type) together
    with ``{} ⊩c {a: t ∨ ⊥}`` under transitivity gives: a field of ``r2``
    whose type has a ⊥ alternative is implied by anything; any other field
    must be present in ``r1`` with a type entailing it.
    """
    for name, t2 in r2:
        if contains_bot(t2):
            continue
        t1 = r1.get(name)
        if t1 is None or not entails_type(t1, t2):
            return False
    return True


def entails(cs1: ConstraintSet, cs2: ConstraintSet) -> bool:
    """``cs1 ⊩c cs2``.

    Every variable ``cs1`` knows about stays bound in ``cs2`` with an
    entailed record.  A variable ``cs1`` does not bind denotes no object it
    speaks about, so ``cs2`` may constrain it freely.
    """
    for var, r1 in cs1:
        r2 = cs2.get(var)
        if r2 is None or not entails_record(r1, r2):
            return False
    return True


def missing_vars(cs1: ConstraintSet, cs2: ConstraintSet) -> list[str]:
    return [v for v in cs2.vars() if v not in cs1]


# -- closed-world entailment used by the typechecker ---------------------------
#
# The checker keeps every record exhaustive: a field missing from the static
# record is missing at run time.  Dropping fields or variables would break
# that, and with it the soundness of filtering on ``ifhasattr``.


def closed_record_failure(var: str, r1: Record, r2: Record) -> str | None:
    for name, t1 in r1:
        t2 = r2.get(name)
        if t2 is None:
            if t1 == BOT:
                # known to be absent, so nothing is lost
                continue
            return f"{var}.{name} would be forgotten"
        if not entails_type(t1, t2):
            return f"{var}.{name}: {pretty_type(t1)} does not entail {pretty_type(t2)}"
    for name, t2 in r2:
        if name not in r1 and not contains_bot(t2):
            return f"{var}.{name} is not known to exist"
    return None


def precondition_failure(cs: ConstraintSet, pre: ConstraintSet) -> str | None:
    """Why the call-site constraints ``cs`` do not establish ``pre``.

    The callee reasons about the objects in ``pre`` under the closed-world
    reading too, so the caller may not know fields the precondition lacks.
    """
    for var, r2 in pre:
        r1 = cs.get(var)
        if r1 is None:
            return f"no constraint on {var}"
        reason = closed_record_failure(var, r1, r2)
        if reason is not None:
            return reason
    return None


def reallocated(cs: ConstraintSet, pre: ConstraintSet, post: ConstraintSet) -> list[str]:
    """Variables a callee allocates that the caller already binds."""
    return [var for var in post.vars() if var not in pre and var in cs]


def postcondition_failure(cs: ConstraintSet, post: ConstraintSet) -> str | None:
    """Why ``cs`` (the state at a function or label exit) does not entail
    the annotated ``post``.  Every variable of ``cs`` must be kept."""
    for var, r1 in cs:
        r2 = post.get(var)
        if r2 is None:
            return f"{var} would be forgotten"
        reason = closed_record_failure(var, r1, r2)
        if reason is not None:
            return reason
    return None


def entails_closed(cs1: ConstraintSet, cs2: ConstraintSet) -> bool:
    return postcondition_failure(cs1, cs2) is None


def label_exit_failure(exit_cs: ConstraintSet, post: ConstraintSet) -> str | None:
    """Why a state leaving a label (its end, or a break) does not entail
    what the label's ``post`` says.  Variables and fields ``post`` does not
    mention are unconstrained; they flow through (see :func:`label_result`)."""
    for var, r2 in post:
        r1 = exit_cs.get(var)
        if r1 is None:
            continue
        for name, t2 in r2:
            t1 = r1.get(name)
            if t1 is None:
                if not contains_bot(t2):
                    return f"{var}.{name} is not known to exist"
            elif not entails_type(t1, t2):
                return f"{var}.{name}: {pretty_type(t1)} does not entail {pretty_type(t2)}"
    return None


def label_result(exits: list[ConstraintSet], post: ConstraintSet) -> ConstraintSet:
    """Constraints after a label: the merge of every way out of it, with
    the annotation's (possibly weaker) types for what it mentions."""
    joined: dict[str, Record] = {}
    if exits:
        acc = exits[0]
        for cs in exits[1:]:
            acc = merge(acc, cs)
        joined = dict(acc.bindings)
    for var, r in post:
        before = joined.get(var)
        joined[var] = r if before is None else Record.of({**dict(before.fields), **dict(r.fields)})
    return ConstraintSet.of(joined)


__all__ = [
    "FilterEmptiesField", "closed_record_failure", "entails", "entails_closed",
    "entails_record", "entails_type", "filter_attr", "is_definite",
    "label_exit_failure", "label_result", "merge", "merge_records", "missing_vars",
    "postcondition_failure", "precondition_failure", "reallocated", "update",
]
