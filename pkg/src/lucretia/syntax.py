"""Abstract syntax of the object calculus: expressions, types, constraint sets.

Everything here is immutable.  Types are kept in a canonical form (see
:func:`normalize_type`) so that structural equality coincides with
``type_equal``.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Union

BASE_TYPES = ("int", "bool", "str")


def _cached_hash(cls):
    """Memoize the generated structural hash; these values are immutable
    and are hashed constantly as dictionary and cache keys."""
    structural = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = structural(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls



@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


# ---------------------------------------------------------------------------
# Types


class Type:
    """Base class of type expressions."""

    __slots__ = ()


@dataclass(frozen=True)
class TConst(Type):
    name: str


@dataclass(frozen=True)
class TVar(Type):
    name: str


@_cached_hash
@dataclass(frozen=True)
class TOr(Type):
    alts: tuple[Type, ...]


@dataclass(frozen=True)
class TBot(Type):
    pass


@dataclass(frozen=True)
class TNever(Type):
    """Type of expressions that never return (``break``).  Checker-internal."""


@_cached_hash
@dataclass(frozen=True)
class TArrow(Type):
    pre: ConstraintSet
    params: tuple[Type, ...]
    result: Type
    post: ConstraintSet


INT = TConst("int")
BOOL = TConst("bool")
STR = TConst("str")
BOT = TBot()
NEVER = TNever()


@_cached_hash
@dataclass(frozen=True)
class Record:
    """Record type ``{a: t, ...}``; fields are kept sorted by name."""

    fields: tuple[tuple[str, Type], ...] = ()

    @classmethod
    def of(cls, fields: Mapping[str, Type] | Iterable[tuple[str, Type]] = ()) -> Record:
        items = dict(fields.items() if isinstance(fields, Mapping) else fields)
        return cls(tuple(sorted((k, normalize_type(v)) for k, v in items.items())))

    def __contains__(self, name: str) -> bool:
        return any(k == name for k, _ in self.fields)

    def __iter__(self) -> Iterator[tuple[str, Type]]:
        return iter(self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def get(self, name: str) -> Type | None:
        for k, t in self.fields:
            if k == name:
                return t
        return None

    def set(self, name: str, t: Type) -> Record:
        d = dict(self.fields)
        d[name] = t
        return Record.of(d)

    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.fields)


@_cached_hash
@dataclass(frozen=True)
class ConstraintSet:
    """Finite map from type variable names to record types (``X <| r``)."""

    bindings: tuple[tuple[str, Record], ...] = ()

    @classmethod
    def of(cls, bindings: Mapping[str, Record] | Iterable[tuple[str, Record]] = ()) -> ConstraintSet:
        items = dict(bindings.items() if isinstance(bindings, Mapping) else bindings)
        return cls(tuple(sorted(items.items())))

    def __contains__(self, var: str) -> bool:
        return any(k == var for k, _ in self.bindings)

    def __iter__(self) -> Iterator[tuple[str, Record]]:
        return iter(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    def get(self, var: str) -> Record | None:
        for k, r in self.bindings:
            if k == var:
                return r
        return None

    def set(self, var: str, record: Record) -> ConstraintSet:
        d = dict(self.bindings)
        d[var] = record
        return ConstraintSet.of(d)

    def without(self, var: str) -> ConstraintSet:
        return ConstraintSet(tuple((k, r) for k, r in self.bindings if k != var))

    def restrict(self, variables: Iterable[str]) -> ConstraintSet:
        keep = set(variables)
        return ConstraintSet(tuple((k, r) for k, r in self.bindings if k in keep))

    def vars(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.bindings)


EMPTY = ConstraintSet()


@lru_cache(maxsize=1 << 16)
def _sort_key(t: Type) -> tuple:
    if isinstance(t, TConst):
        return (0, t.name)
    if isinstance(t, TVar):
        return (1, t.name)
    if isinstance(t, TArrow):
        return (2, _cs_key(t.pre), tuple(_sort_key(p) for p in t.params),
                _sort_key(t.result), _cs_key(t.post))
    if isinstance(t, TNever):
        return (3,)
    if isinstance(t, TBot):
        return (4,)
    if isinstance(t, TOr):
        return (5, tuple(_sort_key(a) for a in t.alts))
    raise TypeError(f"not a type: {t!r}")


def _record_key(r: Record) -> tuple:
    return tuple((k, _sort_key(t)) for k, t in r.fields)


def _cs_key(cs: ConstraintSet) -> tuple:
    return tuple((k, _record_key(r)) for k, r in cs.bindings)


def alternatives(t: Type) -> tuple[Type, ...]:
    """The disjuncts of a normalized type (a singleton for non-disjunctions)."""
    return t.alts if isinstance(t, TOr) else (t,)


def _normalize_record(r: Record) -> Record:
    return Record(tuple(sorted((k, normalize_type(v)) for k, v in r.fields)))


def _normalize_cs(cs: ConstraintSet) -> ConstraintSet:
    return ConstraintSet(tuple(sorted((k, _normalize_record(r)) for k, r in cs.bindings)))


@lru_cache(maxsize=1 << 16)
def normalize_type(t: Type) -> Type:
    """Canonical form: flat, duplicate-free, sorted disjunctions.

    ``never`` is the empty disjunction, so it disappears from any disjunction
    that has another alternative.
    """
    if isinstance(t, (TConst, TVar, TBot, TNever)):
        return t
    if isinstance(t, TArrow):
        return TArrow(_normalize_cs(t.pre), tuple(normalize_type(p) for p in t.params),
                      normalize_type(t.result), _normalize_cs(t.post))
    if isinstance(t, TOr):
        flat: dict[tuple, Type] = {}
        for alt in t.alts:
            for leaf in alternatives(normalize_type(alt)):
                flat.setdefault(_sort_key(leaf), leaf)
        if len(flat) > 1:
            flat.pop(_sort_key(NEVER), None)
        leaves = [flat[k] for k in sorted(flat)]
        if not leaves:
            return NEVER
        if len(leaves) == 1:
            return leaves[0]
        return TOr(tuple(leaves))
    raise TypeError(f"not a type: {t!r}")


def join(*types: Type) -> Type:
    """Normalized disjunction of ``types``."""
    if len(types) == 1:
        return normalize_type(types[0])
    return normalize_type(TOr(tuple(types)))


def type_equal(t1: Type, t2: Type) -> bool:
    return normalize_type(t1) == normalize_type(t2)


def contains_bot(t: Type) -> bool:
    return any(isinstance(a, TBot) for a in alternatives(normalize_type(t)))


def without_bot(t: Type) -> Type:
    """``t`` with its ⊥ disjuncts removed (``never`` if nothing is left)."""
    rest = [a for a in alternatives(normalize_type(t)) if not isinstance(a, TBot)]
    return join(*rest) if rest else NEVER


def type_vars(t: Type) -> set[str]:
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, TOr):
        return set().union(*(type_vars(a) for a in t.alts))
    if isinstance(t, TArrow):
        out = cs_type_vars(t.pre) | cs_type_vars(t.post) | type_vars(t.result)
        for p in t.params:
            out |= type_vars(p)
        return out
    return set()


def cs_type_vars(cs: ConstraintSet) -> set[str]:
    out = set(cs.vars())
    for _, r in cs:
        for _, t in r:
            out |= type_vars(t)
    return out


# ---------------------------------------------------------------------------
# Expressions


class Expr:
    """Base class of expressions."""

    __slots__ = ()


def _span():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Const(Expr):
    value: Union[int, bool, str]
    span: SourceSpan | None = _span()

    @property
    def type(self) -> TConst:
        if isinstance(self.value, bool):
            return BOOL
        if isinstance(self.value, int):
            return INT
        return STR

    def __eq__(self, other: object) -> bool:
        # 1 == True in Python; constants of different tags must differ
        return (isinstance(other, Const) and type(self.value) is type(other.value)
                and self.value == other.value)

    def __hash__(self) -> int:
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class Func(Expr):
    params: tuple[str, ...]
    annotation: TArrow
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Loc(Expr):
    id: int
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class App(Expr):
    callee: Expr
    args: tuple[Expr, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Prim(Expr):
    op: str
    args: tuple[Expr, ...]
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class IfHasAttr(Expr):
    subject: Expr
    attr: str
    then: Expr
    orelse: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Break(Expr):
    label: str
    arg: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Label(Expr):
    label: str
    annotation: TArrow
    body: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class New(Expr):
    # allocation site; fixes the type variable of the objects created here
    site: int | None = field(default=None, compare=False)
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class SetField(Expr):
    target: Expr
    field: str
    value: Expr
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class GetField(Expr):
    target: Expr
    field: str
    span: SourceSpan | None = _span()


VALUE_TYPES = (Const, Func, Loc, Var)


def is_value(e: Expr) -> bool:
    return isinstance(e, VALUE_TYPES)


def children(e: Expr) -> tuple[Expr, ...]:
    """Immediate subexpressions in source order."""
    if isinstance(e, Func):
        return (e.body,)
    if isinstance(e, Let):
        return (e.bound, e.body)
    if isinstance(e, (App,)):
        return (e.callee, *e.args)
    if isinstance(e, Prim):
        return e.args
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, IfHasAttr):
        return (e.subject, e.then, e.orelse)
    if isinstance(e, Break):
        return (e.arg,)
    if isinstance(e, Label):
        return (e.body,)
    if isinstance(e, SetField):
        return (e.target, e.value)
    if isinstance(e, GetField):
        return (e.target,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Func):
        return free_vars(e.body) - set(e.params)
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    out: frozenset[str] = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def has_locations(e: Expr) -> bool:
    return any(isinstance(n, Loc) for n in walk(e))


def number_sites(e: Expr) -> Expr:
    """Renumber every ``new`` by its position in a pre-order walk, from 0."""
    counter = itertools.count()

    def go(node: Expr) -> Expr:
        if isinstance(node, New):
            return replace(node, site=next(counter))
        return map_children(node, go)

    return go(e)


def map_children(e: Expr, f) -> Expr:
    """Rebuild ``e`` with ``f`` applied to each immediate subexpression."""
    if isinstance(e, Func):
        return replace(e, body=f(e.body))
    if isinstance(e, Let):
        return replace(e, bound=f(e.bound), body=f(e.body))
    if isinstance(e, App):
        return replace(e, callee=f(e.callee), args=tuple(f(a) for a in e.args))
    if isinstance(e, Prim):
        return replace(e, args=tuple(f(a) for a in e.args))
    if isinstance(e, If):
        return replace(e, cond=f(e.cond), then=f(e.then), orelse=f(e.orelse))
    if isinstance(e, IfHasAttr):
        return replace(e, subject=f(e.subject), then=f(e.then), orelse=f(e.orelse))
    if isinstance(e, Break):
        return replace(e, arg=f(e.arg))
    if isinstance(e, Label):
        return replace(e, body=f(e.body))
    if isinstance(e, SetField):
        return replace(e, target=f(e.target), value=f(e.value))
    if isinstance(e, GetField):
        return replace(e, target=f(e.target))
    return e


def _fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    for i in itertools.count(1):
        name = f"{base}_{i}"
        if name not in avoid:
            return name
    raise AssertionError("unreachable")


def substitute(e: Expr, x: str, v: Expr) -> Expr:
    """Capture-avoiding substitution ``e[x/v]``."""
    return substitute_many(e, {x: v})


def substitute_many(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous capture-avoiding substitution of values for variables."""
    if not mapping:
        return e
    fv_values = frozenset().union(*(free_vars(v) for v in mapping.values()))
    return _subst(e, dict(mapping), fv_values)


def _subst(e: Expr, m: dict[str, Expr], fvv: frozenset[str]) -> Expr:
    if isinstance(e, Var):
        return m.get(e.name, e)
    if isinstance(e, (Const, Loc, New)):
        return e
    if isinstance(e, Let):
        bound = _subst(e.bound, m, fvv)
        inner = {k: v for k, v in m.items() if k != e.name}
        name, body = e.name, e.body
        if inner and name in fvv:
            name = _fresh_name(e.name, fvv | free_vars(body))
            body = _subst(body, {e.name: Var(name)}, frozenset((name,)))
        return replace(e, name=name, bound=bound,
                       body=_subst(body, inner, fvv) if inner else body)
    if isinstance(e, Func):
        inner = {k: v for k, v in m.items() if k not in e.params}
        if not inner:
            return e
        params, body = list(e.params), e.body
        renames: dict[str, Expr] = {}
        for i, p in enumerate(params):
            if p in fvv:
                fresh = _fresh_name(p, fvv | free_vars(body) | set(params))
                renames[p] = Var(fresh)
                params[i] = fresh
        if renames:
            body = _subst(body, renames, frozenset(v.name for v in renames.values()))
        return replace(e, params=tuple(params), body=_subst(body, inner, fvv))
    return map_children(e, lambda c: _subst(c, m, fvv))


# Primitive operations: name -> (parameter types, result type)
PRIMOPS: dict[str, tuple[tuple[TConst, ...], TConst]] = {
    "add": ((INT, INT), INT),
    "sub": ((INT, INT), INT),
    "mul": ((INT, INT), INT),
    "eq": ((INT, INT), BOOL),
    "lt": ((INT, INT), BOOL),
    "not": ((BOOL,), BOOL),
}
