"""The satisfaction relation between run-time stores and static knowledge.

``Σ`` (a *location environment*) maps each location to the type variable
that stands for it.  During a run every location is named after the
allocation site that created it, so the static and run-time namespaces
coincide.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from .constraints import merge_records
from .syntax import (
    Const, ConstraintSet, Expr, Func, Loc, Record, TArrow, TNever, TVar, Type,
    alternatives, contains_bot, type_equal, walk, without_bot,
)
from .typechecker import Checker, TypeCheckError, TypeState, site_var

LocEnv = Mapping[int, str]
Store = Mapping[int, Mapping[str, Expr]]


def location_env(sites: Mapping[int, int | None]) -> dict[int, str]:
    """Σ for a run: each location gets the variable of its allocation site."""
    return {loc: site_var(s) if s is not None else f"L{loc}" for loc, s in sites.items()}


def _locs_in(e: Expr) -> frozenset[int]:
    return frozenset(n.id for n in walk(e) if isinstance(n, Loc))


@lru_cache(maxsize=4096)
def _function_checks(f: Func, env: tuple[tuple[int, str], ...]) -> bool:
    locs = {loc: TVar(var) for loc, var in env}
    try:
        Checker(replay=True).synthesize(TypeState(pre=f.annotation.pre, locs=locs), f)
    except TypeCheckError:
        return False
    return True


def function_checks(f: Func, sigma_env: LocEnv) -> bool:
    """The body of ``f`` typechecks against its annotation, from its own
    precondition, with the locations it mentions typed by Σ."""
    needed = _locs_in(f.body)
    if any(loc not in sigma_env for loc in needed):
        return False
    return _function_checks(f, tuple(sorted((loc, sigma_env[loc]) for loc in needed)))


def satisfies_value(store: Store, sigma_env: LocEnv, v: Expr, t: Type) -> bool:
    """``σ;Σ ⊨ v : t``."""
    alts = alternatives(t)
    if isinstance(v, Const):
        return v.type in alts
    if isinstance(v, Loc):
        var = sigma_env.get(v.id)
        return var is not None and TVar(var) in alts
    if isinstance(v, Func):
        return any(isinstance(a, TArrow) and type_equal(a, v.annotation) for a in alts) \
            and function_checks(v, sigma_env)
    return False


def satisfies_constraints(store: Store, sigma_env: LocEnv, cs: ConstraintSet,
                          precise: bool = False) -> bool:
    """``σ;Σ ⊨ Ψ``.

    A field whose type is definite must be present and hold a value of that
    type.  A field type with a ⊥ alternative is reachable through the merge
    rule from the record without that field, so it constrains nothing.  With
    ``precise`` a present field must in addition match the non-⊥ part of
    such a type (the reading the typechecker actually maintains).
    """
    by_var: dict[str, list[int]] = {}
    for loc, var in sigma_env.items():
        if loc in store:
            by_var.setdefault(var, []).append(loc)
    for var, record in cs:
        for loc in by_var.get(var, ()):
            if not _object_satisfies(store, sigma_env, store[loc], record, precise):
                return False
    return True


def _object_satisfies(store: Store, sigma_env: LocEnv, obj: Mapping[str, Expr],
                      record: Record, precise: bool) -> bool:
    for name, t in record:
        present = name in obj
        if contains_bot(t):
            if precise and present:
                rest = without_bot(t)
                if not isinstance(rest, TNever) and not satisfies_value(store, sigma_env, obj[name], rest):
                    return False
            continue
        if not present or not satisfies_value(store, sigma_env, obj[name], t):
            return False
    return True


def value_type(sigma_env: LocEnv, v: Expr) -> Type:
    """Exact type of a stored value."""
    if isinstance(v, Const):
        return v.type
    if isinstance(v, Func):
        return v.annotation
    if isinstance(v, Loc):
        return TVar(sigma_env[v.id])
    raise TypeError(f"not a closed value: {v!r}")


def extract_store_typing(store: Store, sigma_env: LocEnv) -> ConstraintSet:
    """The constraint set describing ``store`` exactly.

    Locations sharing a variable have their records merged.
    """
    out: dict[str, Record] = {}
    for loc in sorted(store):
        var = sigma_env[loc]
        record = Record.of({name: value_type(sigma_env, v) for name, v in store[loc].items()})
        out[var] = merge_records(out[var], record) if var in out else record
    return ConstraintSet.of(out)


__all__ = [
    "LocEnv", "Store", "extract_store_typing", "function_checks", "location_env",
    "satisfies_constraints", "satisfies_value", "value_type",
]
