"""Shared test fixtures: the corpus, hypothesis strategies and small oracles."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from hypothesis import strategies as st

from lucretia.syntax import (
    BOT, App, Break, Const, ConstraintSet, Expr, Func, GetField, If, IfHasAttr, Label, Let,
    Loc, New, Prim, Record, SetField, TConst, TOr, TVar, Var,
)

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


@dataclass(frozen=True)
class CorpusEntry:
    path: Path
    text: str
    expect: str                # "ok" or an ErrorKind name
    type: str | None = None
    post: str | None = None
    stuck: str | None = None

    @property
    def name(self) -> str:
        return self.path.stem


def load_corpus() -> list[CorpusEntry]:
    entries = []
    for path in sorted(CORPUS.glob("*.luc")):
        text = path.read_text(encoding="utf-8")
        headers = {}
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].strip().partition(":")
            if sep and key in ("expect", "type", "post", "stuck"):
                headers[key] = value.strip()
        entries.append(CorpusEntry(path, text, **headers))
    return entries


CORPUS_ENTRIES = load_corpus()
WELL_TYPED = [c for c in CORPUS_ENTRIES if c.expect == "ok"]
ILL_TYPED = [c for c in CORPUS_ENTRIES if c.expect != "ok"]


# ------------------------------------------------------------- strategies

VAR_NAMES = ("X", "Y", "Z")
FIELD_NAMES = ("a", "b", "c")

base_types = st.sampled_from([TConst("int"), TConst("bool"), TConst("str")])
leaf_types = st.one_of(base_types, st.sampled_from([TVar(v) for v in VAR_NAMES]), st.just(BOT))


def _extend(children):
    return st.lists(children, min_size=2, max_size=3).map(lambda alts: TOr(tuple(alts)))


# raw (unnormalized) nested disjunctions
raw_types = st.recursive(leaf_types, _extend, max_leaves=8)


def records(types=raw_types):
    return st.dictionaries(st.sampled_from(FIELD_NAMES), types, max_size=3).map(Record.of)


def constraint_sets(types=raw_types):
    return st.dictionaries(st.sampled_from(VAR_NAMES), records(types), max_size=3).map(ConstraintSet.of)


# ----------------------------------------------------- substitution oracle

def locally_nameless(e: Expr, scope: tuple[str, ...] = ()):
    """Bound variables become de Bruijn indices, free ones stay names.

    Two terms are alpha-equivalent iff their images are equal, and
    substituting for a free name never needs renaming in this form.
    """
    def go(e, scope):
        if isinstance(e, Var):
            if e.name in scope:
                return ("bound", scope.index(e.name))
            return ("free", e.name)
        if isinstance(e, Const):
            return ("const", type(e.value).__name__, e.value)
        if isinstance(e, Loc):
            return ("loc", e.id)
        if isinstance(e, New):
            return ("new",)
        if isinstance(e, Func):
            inner = tuple(reversed(e.params)) + scope
            return ("func", len(e.params), e.annotation, go(e.body, inner))
        if isinstance(e, Let):
            return ("let", go(e.bound, scope), go(e.body, (e.name,) + scope))
        if isinstance(e, App):
            return ("app", go(e.callee, scope), tuple(go(a, scope) for a in e.args))
        if isinstance(e, Prim):
            return ("prim", e.op, tuple(go(a, scope) for a in e.args))
        if isinstance(e, If):
            return ("if", go(e.cond, scope), go(e.then, scope), go(e.orelse, scope))
        if isinstance(e, IfHasAttr):
            return ("ifh", go(e.subject, scope), e.attr, go(e.then, scope), go(e.orelse, scope))
        if isinstance(e, Break):
            return ("break", e.label, go(e.arg, scope))
        if isinstance(e, Label):
            return ("label", e.label, e.annotation, go(e.body, scope))
        if isinstance(e, SetField):
            return ("set", go(e.target, scope), e.field, go(e.value, scope))
        if isinstance(e, GetField):
            return ("get", go(e.target, scope), e.field)
        raise TypeError(e)
    return go(e, scope)


def ln_substitute(term, name: str, value):
    """Replace the free name ``name`` by the locally nameless ``value``."""
    if isinstance(term, tuple):
        if term == ("free", name):
            return value
        return tuple(ln_substitute(t, name, value) for t in term)
    return term
