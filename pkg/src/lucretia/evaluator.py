"""Small-step evaluation over configurations (store, context stack, redex).

Decomposition into evaluation context and redex (the focus-shuffling rules
that only move the focus) is done eagerly inside :func:`step`; only the rules
that change the term or the store count as steps.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Union

from .printer import pretty_print
from .syntax import (
    PRIMOPS, App, Break, Const, Expr, Func, GetField, If, IfHasAttr, Label, Let,
    Loc, New, Prim, SetField, TArrow, Var, is_value, substitute, substitute_many,
)

Object = Mapping[str, Expr]
Store = Mapping[int, Object]

_MASK = (1 << 64) - 1


def _wrap(n: int) -> int:
    n &= _MASK
    return n - (1 << 64) if n >> 63 else n


class StuckReason(enum.Enum):
    MissingFieldAtRuntime = "MissingFieldAtRuntime"
    DeltaTypeTrap = "DeltaTypeTrap"
    ArityTrap = "ArityTrap"
    NotAFunction = "NotAFunction"
    NotABoolean = "NotABoolean"
    UnboundLocation = "UnboundLocation"
    DanglingBreak = "DanglingBreak"


class DeltaTypeTrap(Exception):
    pass


def delta(op: str, args: list[Expr]) -> Const:
    """Interpretation of primitive operations; integers wrap at 64 bits."""
    params, _ = PRIMOPS[op]
    if len(args) != len(params) or not all(
            isinstance(a, Const) and a.type == p for a, p in zip(args, params)):
        raise DeltaTypeTrap(f"{op} applied to {', '.join(pretty_print(a) for a in args)}")
    vals = [a.value for a in args]
    if op == "add":
        return Const(_wrap(vals[0] + vals[1]))
    if op == "sub":
        return Const(_wrap(vals[0] - vals[1]))
    if op == "mul":
        return Const(_wrap(vals[0] * vals[1]))
    if op == "eq":
        return Const(vals[0] == vals[1])
    if op == "lt":
        return Const(vals[0] < vals[1])
    if op == "not":
        return Const(not vals[0])
    raise DeltaTypeTrap(f"unknown primitive {op}")


# -- frames: one-hole evaluation contexts --------------------------------------


@dataclass(frozen=True)
class LetFrame:
    name: str
    body: Expr


@dataclass(frozen=True)
class CallFrame:
    """``f(v1, .., [], e_{i+1}, ..)``; ``callee`` is None while the callee
    itself is being evaluated."""
    callee: Expr | None
    done: tuple[Expr, ...]
    rest: tuple[Expr, ...]


@dataclass(frozen=True)
class PrimFrame:
    op: str
    done: tuple[Expr, ...]
    rest: tuple[Expr, ...]


@dataclass(frozen=True)
class IfFrame:
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class BreakFrame:
    label: str


@dataclass(frozen=True)
class LabelFrame:
    label: str
    annotation: TArrow


@dataclass(frozen=True)
class SetFieldFrame:
    target: Expr
    field: str


Frame = Union[LetFrame, CallFrame, PrimFrame, IfFrame, BreakFrame, LabelFrame, SetFieldFrame]


@dataclass(frozen=True)
class Config:
    store: Store
    context: tuple[Frame, ...]
    redex: Expr
    # allocation site of each location (None for hand-built sites)
    sites: Mapping[int, int | None] = field(default_factory=dict)


@dataclass(frozen=True)
class Done:
    store: Store
    value: Expr
    sites: Mapping[int, int | None] = field(default_factory=dict)


@dataclass(frozen=True)
class Stepped:
    config: Config
    rule: str
    redex: Expr


@dataclass(frozen=True)
class Stuck:
    reason: StuckReason
    config: Config
    detail: str = ""


@dataclass(frozen=True)
class StepLimit:
    config: Config


Outcome = Union[Done, Stepped, Stuck, StepLimit]


def plug(frame: Frame, e: Expr) -> Expr:
    if isinstance(frame, LetFrame):
        return Let(frame.name, e, frame.body)
    if isinstance(frame, CallFrame):
        if frame.callee is None:
            return App(e, frame.rest)
        return App(frame.callee, (*frame.done, e, *frame.rest))
    if isinstance(frame, PrimFrame):
        return Prim(frame.op, (*frame.done, e, *frame.rest))
    if isinstance(frame, IfFrame):
        return If(e, frame.then, frame.orelse)
    if isinstance(frame, BreakFrame):
        return Break(frame.label, e)
    if isinstance(frame, LabelFrame):
        return Label(frame.label, frame.annotation, e)
    if isinstance(frame, SetFieldFrame):
        return SetField(frame.target, frame.field, e)
    raise TypeError(frame)


def recompose(config: Config) -> Expr:
    """Plug the redex back into its whole context."""
    e = config.redex
    for frame in reversed(config.context):
        e = plug(frame, e)
    return e


def decompose(e: Expr, store: Store | None = None, sites=None) -> Config:
    """Split ``e`` into leftmost-innermost evaluation context and redex."""
    frames: list[Frame] = []
    while True:
        pushed = _push(e)
        if pushed is None:
            return Config(store or {}, tuple(frames), e, dict(sites or {}))
        frame, e = pushed
        frames.append(frame)


def _push(e: Expr) -> tuple[Frame, Expr] | None:
    """If ``e``'s next evaluation happens in a proper subterm, return the
    frame around it and that subterm."""
    if isinstance(e, Let):
        if not is_value(e.bound):
            return LetFrame(e.name, e.body), e.bound
        return None
    if isinstance(e, App):
        if not is_value(e.callee):
            return CallFrame(None, (), e.args), e.callee
        for i, a in enumerate(e.args):
            if not is_value(a):
                return CallFrame(e.callee, e.args[:i], e.args[i + 1:]), a
        return None
    if isinstance(e, Prim):
        for i, a in enumerate(e.args):
            if not is_value(a):
                return PrimFrame(e.op, e.args[:i], e.args[i + 1:]), a
        return None
    if isinstance(e, If):
        if not is_value(e.cond):
            return IfFrame(e.then, e.orelse), e.cond
        return None
    if isinstance(e, Break):
        if not is_value(e.arg):
            return BreakFrame(e.label), e.arg
        return None
    if isinstance(e, Label):
        return LabelFrame(e.label, e.annotation), e.body
    if isinstance(e, SetField):
        if not is_value(e.value):
            return SetFieldFrame(e.target, e.field), e.value
        return None
    return None


def _next_loc(store: Store) -> int:
    return max(store, default=-1) + 1


def step(config: Config) -> Outcome:
    """One reduction step."""
    store, frames, e = config.store, list(config.context), config.redex
    sites = config.sites

    def stepped(rule: str, new_e: Expr, new_store: Store = store, new_sites=sites) -> Stepped:
        # decompose the result so the next redex is in focus
        nxt = decompose(new_e)
        return Stepped(Config(new_store, (*frames, *nxt.context), nxt.redex, new_sites), rule, e)

    def stuck(reason: StuckReason, detail: str) -> Stuck:
        return Stuck(reason, config, detail)

    # bring a non-value redex into decomposed form
    pushed = _push(e)
    while pushed is not None:
        frame, e = pushed
        frames.append(frame)
        pushed = _push(e)

    if is_value(e):
        if isinstance(e, Var):
            return stuck(StuckReason.UnboundLocation, f"free variable {e.name}")
        if not frames:
            return Done(store, e, sites)
        frame = frames.pop()
        if isinstance(frame, LabelFrame):
            return stepped("Lbl-Pop", e)
        # the hole is filled with a value: rebuild the parent and reduce it
        e = plug(frame, e)
        pushed = _push(e)
        if pushed is not None:
            # more subterms of the parent to evaluate first (administrative)
            frames_before = tuple(frames)
            nxt = decompose(e)
            return step(Config(store, (*frames_before, *nxt.context), nxt.redex, sites))

    if isinstance(e, Let):
        return stepped("Let", substitute(e.body, e.name, e.bound))
    if isinstance(e, App):
        f = e.callee
        if not isinstance(f, Func):
            return stuck(StuckReason.NotAFunction, f"cannot call {pretty_print(f)}")
        if len(f.params) != len(e.args):
            return stuck(StuckReason.ArityTrap,
                         f"{len(f.params)} parameters, {len(e.args)} arguments")
        return stepped("Beta-v", substitute_many(f.body, dict(zip(f.params, e.args))))
    if isinstance(e, Prim):
        try:
            result = delta(e.op, list(e.args))
        except DeltaTypeTrap as exc:
            return stuck(StuckReason.DeltaTypeTrap, str(exc))
        return stepped("Op-Eval", result)
    if isinstance(e, If):
        if e.cond == Const(True):
            return stepped("If-True", e.then)
        if e.cond == Const(False):
            return stepped("If-False", e.orelse)
        return stuck(StuckReason.NotABoolean, f"condition {pretty_print(e.cond)}")
    if isinstance(e, IfHasAttr):
        loc = e.subject
        if not isinstance(loc, Loc) or loc.id not in store:
            return stuck(StuckReason.UnboundLocation, f"ifhasattr on {pretty_print(loc)}")
        if e.attr in store[loc.id]:
            return stepped("Ifhtr-True", e.then)
        return stepped("Ifhtr-False", e.orelse)
    if isinstance(e, Break):
        for i in range(len(frames) - 1, -1, -1):
            fr = frames[i]
            if isinstance(fr, LabelFrame) and fr.label == e.label:
                del frames[i:]
                return stepped("Brk-P", e.arg)
        return stuck(StuckReason.DanglingBreak, f"no enclosing label {e.label}")
    if isinstance(e, New):
        loc = _next_loc(store)
        return stepped("New", Loc(loc), {**store, loc: {}}, {**sites, loc: e.site})
    if isinstance(e, SetField):
        loc = e.target
        if not isinstance(loc, Loc) or loc.id not in store:
            return stuck(StuckReason.UnboundLocation, f"field update on {pretty_print(loc)}")
        obj = {**store[loc.id], e.field: e.value}
        return stepped("SetRef", e.value, {**store, loc.id: obj})
    if isinstance(e, GetField):
        loc = e.target
        if not isinstance(loc, Loc) or loc.id not in store:
            return stuck(StuckReason.UnboundLocation, f"field access on {pretty_print(loc)}")
        obj = store[loc.id]
        if e.field not in obj:
            return stuck(StuckReason.MissingFieldAtRuntime, f"@loc{loc.id} has no field {e.field}")
        return stepped("Deref", obj[e.field])
    if isinstance(e, Label):  # pragma: no cover - _push always enters labels
        raise AssertionError("label not decomposed")
    raise TypeError(f"cannot step {e!r}")


@dataclass
class RunResult:
    outcome: Union[Done, Stuck, StepLimit]
    steps: int
    store: Store
    trace: list[str] | None = None


def format_store(store: Store) -> str:
    objs = []
    for loc in sorted(store):
        fields = ",".join(f"{k}={pretty_print(v)}" for k, v in sorted(store[loc].items()))
        objs.append(f"l{loc}:{{{fields}}}")
    return "{" + ",".join(objs) + "}"


def initial(e: Expr) -> Config:
    return decompose(e)


def run(e: Expr, max_steps: int = 100_000, trace: bool = False) -> RunResult:
    """Iterate :func:`step` from the empty store until a final outcome."""
    config = initial(e)
    lines: list[str] | None = [] if trace else None
    steps = 0
    while True:
        if steps >= max_steps:
            out = step(config)
            if isinstance(out, Stepped):
                return RunResult(StepLimit(config), steps, config.store, lines)
        else:
            out = step(config)
        if isinstance(out, Stepped):
            steps += 1
            config = out.config
            if lines is not None:
                lines.append(f"step={steps} rule={out.rule} redex={pretty_print(out.redex)} "
                             f"store={format_store(config.store)}")
            continue
        store = out.store if isinstance(out, Done) else out.config.store
        return RunResult(out, steps, store, lines)


def iterate(e: Expr, max_steps: int = 100_000):
    """Yield every configuration reached (the initial one included) and
    finally the terminal outcome."""
    config = initial(e)
    yield config
    for _ in range(max_steps):
        out = step(config)
        if not isinstance(out, Stepped):
            yield out
            return
        config = out.config
        yield config
    yield StepLimit(config)
