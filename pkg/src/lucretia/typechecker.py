"""Flow-sensitive typechecker: synthesizes ``t ; Ψ₂`` for ``Ψ₁; Γ; Σ ⊢ e``.

The checker threads the constraint set left to right through the
expression.  Objects are described by type variables; a ``new`` at source
site ``n`` always gets the variable ``Xn`` so that checking is deterministic
and can be replayed on partially evaluated programs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .constraints import (
    FilterEmptiesField, entails_type, filter_attr, is_definite, label_exit_failure,
    label_result, merge, postcondition_failure, precondition_failure, reallocated, update,
)
from .printer import pretty_constraints, pretty_type
from .syntax import (
    BOOL, EMPTY, NEVER, PRIMOPS, App, Break, Const, ConstraintSet, Expr, Func, GetField,
    If, IfHasAttr, Label, Let, Loc, New, Prim, Record, SetField, SourceSpan,
    TArrow, TNever, TVar, Type, Var, join, number_sites, type_equal, walk,
)


class ErrorKind(enum.Enum):
    UnboundVariable = "UnboundVariable"
    UnboundLocation = "UnboundLocation"
    NotAnObjectVariable = "NotAnObjectVariable"
    NotAFunction = "NotAFunction"
    MissingField = "MissingField"
    IndefiniteFieldType = "IndefiniteFieldType"
    ConditionNotBool = "ConditionNotBool"
    BranchJoinFailure = "BranchJoinFailure"
    CallPreconditionFailure = "CallPreconditionFailure"
    ArityMismatch = "ArityMismatch"
    AnnotationMismatch = "AnnotationMismatch"
    BreakPostconditionFailure = "BreakPostconditionFailure"
    LabelPostconditionFailure = "LabelPostconditionFailure"
    FilterEmptiesField = "FilterEmptiesField"
    PrimopSignatureMismatch = "PrimopSignatureMismatch"
    SiteReallocated = "SiteReallocated"


class TypeCheckError(Exception):
    def __init__(self, kind: ErrorKind, rule: str, detail: str, span: SourceSpan | None) -> None:
        super().__init__(f"{kind.value} [{rule}]: {detail}")
        self.kind = kind
        self.rule = rule
        self.detail = detail
        self.span = span

    def render(self, filename: str = "<input>") -> str:
        line, col = (self.span.line, self.span.column) if self.span else (0, 0)
        return f"{filename}:{line}:{col}: {self.kind.value} [{self.rule}]: {self.detail}"

    def to_json(self, filename: str = "<input>") -> dict:
        return {
            "file": filename,
            "line": self.span.line if self.span else 0,
            "column": self.span.column if self.span else 0,
            "kind": self.kind.value,
            "rule": self.rule,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class LabelInfo:
    # None while the annotation is still being worked out (generator)
    annotation: TArrow | None
    entry: ConstraintSet


@dataclass(frozen=True)
class TypeState:
    pre: ConstraintSet = EMPTY
    env: Mapping[str, Type] = field(default_factory=dict)
    locs: Mapping[int, Type] = field(default_factory=dict)
    # labels in scope; a separate namespace from term variables
    labels: Mapping[str, LabelInfo] = field(default_factory=dict)


@dataclass(frozen=True)
class TypeResult:
    type: Type
    post: ConstraintSet


def site_var(site: int) -> str:
    return f"X{site}"


class Checker:
    """Synthesis engine.

    ``replay`` relaxes one rule for re-checking partially evaluated programs:
    an ``ifhasattr`` whose filtered field can only be ⊥ has a dead true branch
    instead of raising FilterEmptiesField.
    """

    def __init__(self, replay: bool = False) -> None:
        self.replay = replay
        self._fresh = 0
        self.site_vars: dict[int, str] = {}
        self.pending_breaks: list[tuple[str, TypeResult]] = []
        # constraint sets at the breaks to each enclosing label
        self._exits: dict[str, list[list[ConstraintSet]]] = {}

    def fresh_var(self, node: New) -> str:
        if node.site is not None:
            name = site_var(node.site)
            self.site_vars[node.site] = name
            return name
        name = f"X{self._fresh}"
        self._fresh += 1
        return name

    # -- helpers ------------------------------------------------------------

    @staticmethod
    def _err(kind: ErrorKind, rule: str, detail: str, e: Expr) -> TypeCheckError:
        return TypeCheckError(kind, rule, detail, getattr(e, "span", None))

    def _subject_var(self, state: TypeState, target: Expr, rule: str) -> str:
        t = self.synthesize(state, target).type
        if not isinstance(t, TVar):
            raise self._err(ErrorKind.NotAnObjectVariable, rule,
                            f"expected an object, got {pretty_type(t)}", target)
        return t.name

    # -- judgement ----------------------------------------------------------

    def synthesize(self, state: TypeState, e: Expr) -> TypeResult:
        method = getattr(self, "_" + type(e).__name__)
        return method(state, e)

    def _Var(self, state: TypeState, e: Var) -> TypeResult:
        t = state.env.get(e.name)
        if t is None:
            raise self._err(ErrorKind.UnboundVariable, "v-access", f"unbound variable {e.name}", e)
        return TypeResult(t, state.pre)

    def _Loc(self, state: TypeState, e: Loc) -> TypeResult:
        t = state.locs.get(e.id)
        if t is None:
            raise self._err(ErrorKind.UnboundLocation, "l-access", f"unbound location @loc{e.id}", e)
        return TypeResult(t, state.pre)

    def _Const(self, state: TypeState, e: Const) -> TypeResult:
        return TypeResult(e.type, state.pre)

    def _New(self, state: TypeState, e: New) -> TypeResult:
        var = self.fresh_var(e)
        if var in state.pre:
            raise self._err(ErrorKind.SiteReallocated, "new",
                            f"this allocation may run again while {var} is live", e)
        return TypeResult(TVar(var), state.pre.set(var, Record()))

    def _GetField(self, state: TypeState, e: GetField) -> TypeResult:
        var = self._subject_var(state, e.target, "access")
        record = state.pre.get(var)
        if record is None or e.field not in record:
            raise self._err(ErrorKind.MissingField, "access",
                            f"{var} is not known to have field {e.field}", e)
        t = record.get(e.field)
        if not is_definite(t):
            raise self._err(ErrorKind.IndefiniteFieldType, "access",
                            f"{var}.{e.field} has type {pretty_type(t)}, which may be bot", e)
        return TypeResult(t, state.pre)

    def _SetField(self, state: TypeState, e: SetField) -> TypeResult:
        var = self._subject_var(state, e.target, "update")
        value = self.synthesize(state, e.value)
        if isinstance(value.type, TNever):
            return value
        record = value.post.get(var)
        if record is None:
            raise self._err(ErrorKind.NotAnObjectVariable, "update",
                            f"no constraint on {var}", e)
        return TypeResult(value.type, value.post.set(var, record.set(e.field, value.type)))

    def _Let(self, state: TypeState, e: Let) -> TypeResult:
        bound = self.synthesize(state, e.bound)
        if isinstance(bound.type, TNever):
            # the body is unreachable
            return bound
        inner = TypeState(bound.post, {**state.env, e.name: bound.type}, state.locs, state.labels)
        return self.synthesize(inner, e.body)

    def _If(self, state: TypeState, e: If) -> TypeResult:
        cond = self.synthesize(state, e.cond)
        if isinstance(cond.type, TNever):
            return cond
        if cond.type != BOOL:
            raise self._err(ErrorKind.ConditionNotBool, "if",
                            f"condition has type {pretty_type(cond.type)}", e.cond)
        branch = TypeState(cond.post, state.env, state.locs, state.labels)
        return join_branches(self.synthesize(branch, e.then), self.synthesize(branch, e.orelse))

    def _IfHasAttr(self, state: TypeState, e: IfHasAttr) -> TypeResult:
        var = self._subject_var(state, e.subject, "ifhasattr")
        orelse = self.synthesize(state, e.orelse)
        record = state.pre.get(var)
        if self.replay and record is not None and record.get(e.attr) is None:
            # closed world: a field the record lacks is absent at run time
            return orelse
        try:
            narrowed = filter_attr(state.pre, var, e.attr)
        except FilterEmptiesField as exc:
            if self.replay:
                return orelse
            raise self._err(ErrorKind.FilterEmptiesField, "ifhasattr", str(exc), e) from None
        then = self.synthesize(TypeState(narrowed, state.env, state.locs, state.labels), e.then)
        return join_branches(then, orelse)

    def _Func(self, state: TypeState, e: Func) -> TypeResult:
        annot = e.annotation
        if not isinstance(annot, TArrow):
            raise self._err(ErrorKind.AnnotationMismatch, "fdecl", "annotation is not a function type", e)
        if len(annot.params) != len(e.params):
            raise self._err(ErrorKind.ArityMismatch, "fdecl",
                            f"{len(e.params)} parameters but annotation has {len(annot.params)}", e)
        unframed = [v for v in annot.pre.vars() if v not in annot.post]
        if unframed:
            raise self._err(ErrorKind.AnnotationMismatch, "fdecl",
                            f"postcondition must mention every precondition variable; missing {', '.join(unframed)}",
                            e)
        env = {**state.env, **dict(zip(e.params, annot.params))}
        # labels are not visible inside a body: the call may happen after the
        # label has been exited
        body = self.synthesize(TypeState(annot.pre, env, state.locs, {}), e.body)
        if not entails_type(body.type, annot.result):
            raise self._err(ErrorKind.AnnotationMismatch, "fdecl",
                            f"body has type {pretty_type(body.type)}, annotation says {pretty_type(annot.result)}",
                            e)
        reason = postcondition_failure(body.post, annot.post)
        if reason is not None:
            raise self._err(ErrorKind.AnnotationMismatch, "fdecl",
                            f"body postcondition does not entail the annotation: {reason}", e)
        return TypeResult(annot, state.pre)

    def _App(self, state: TypeState, e: App) -> TypeResult:
        callee = self.synthesize(state, e.callee)
        if isinstance(callee.type, TNever):
            return callee
        ftype = callee.type
        if not isinstance(ftype, TArrow):
            raise self._err(ErrorKind.NotAFunction, "fapp",
                            f"callee has type {pretty_type(ftype)}", e.callee)
        if len(ftype.params) != len(e.args):
            raise self._err(ErrorKind.ArityMismatch, "fapp",
                            f"function expects {len(ftype.params)} arguments, got {len(e.args)}", e)
        cs = callee.post
        for i, (arg, expected) in enumerate(zip(e.args, ftype.params)):
            r = self.synthesize(TypeState(cs, state.env, state.locs, state.labels), arg)
            if isinstance(r.type, TNever):
                return r
            if not entails_type(r.type, expected):
                raise self._err(ErrorKind.CallPreconditionFailure, "fapp",
                                f"argument {i + 1} has type {pretty_type(r.type)}, expected {pretty_type(expected)}",
                                arg)
            cs = r.post
        reason = precondition_failure(cs, ftype.pre)
        if reason is not None:
            raise self._err(ErrorKind.CallPreconditionFailure, "fapp",
                            f"call site does not establish the precondition: {reason}", e)
        again = reallocated(cs, ftype.pre, ftype.post)
        if again:
            raise self._err(ErrorKind.SiteReallocated, "fapp",
                            f"the callee allocates {', '.join(again)} again while the earlier object is live", e)
        return TypeResult(ftype.result, update(cs, ftype.post))

    def _Prim(self, state: TypeState, e: Prim) -> TypeResult:
        params, result = PRIMOPS[e.op]
        if len(params) != len(e.args):
            raise self._err(ErrorKind.PrimopSignatureMismatch, "op",
                            f"{e.op} takes {len(params)} arguments, got {len(e.args)}", e)
        cs = state.pre
        for arg, expected in zip(e.args, params):
            r = self.synthesize(TypeState(cs, state.env, state.locs, state.labels), arg)
            if isinstance(r.type, TNever):
                return r
            if not type_equal(r.type, expected):
                raise self._err(ErrorKind.PrimopSignatureMismatch, "op",
                                f"{e.op} expects {pretty_type(expected)}, got {pretty_type(r.type)}", arg)
            cs = r.post
        return TypeResult(result, cs)

    def _Label(self, state: TypeState, e: Label) -> TypeResult:
        annot = e.annotation
        if not isinstance(annot, TArrow) or annot.params or len(annot.pre):
            raise self._err(ErrorKind.AnnotationMismatch, "label",
                            "label annotation must have the form [ ]() -> t [Psi]", e)
        labels = {**state.labels, e.label: LabelInfo(annot, state.pre)}
        exits = self._exits.setdefault(e.label, [])
        exits.append([])
        try:
            body = self.synthesize(TypeState(state.pre, state.env, state.locs, labels), e.body)
        finally:
            outs = exits.pop()
        if not entails_type(body.type, annot.result):
            raise self._err(ErrorKind.LabelPostconditionFailure, "label",
                            f"body has type {pretty_type(body.type)}, label expects {pretty_type(annot.result)}", e)
        if not isinstance(body.type, TNever):
            reason = label_exit_failure(body.post, annot.post)
            if reason is not None:
                raise self._err(ErrorKind.LabelPostconditionFailure, "label",
                                f"body postcondition does not entail the label's: {reason}", e)
            outs.append(body.post)
        return TypeResult(annot.result, label_result(outs, annot.post))

    def _Break(self, state: TypeState, e: Break) -> TypeResult:
        info = state.labels.get(e.label)
        if info is None:
            raise self._err(ErrorKind.UnboundVariable, "break", f"no enclosing label {e.label}", e)
        arg = self.synthesize(state, e.arg)
        annot = info.annotation
        if annot is None:
            self.pending_breaks.append((e.label, arg))
            return TypeResult(NEVER, state.pre)
        if not entails_type(arg.type, annot.result):
            raise self._err(ErrorKind.BreakPostconditionFailure, "break",
                            f"break value has type {pretty_type(arg.type)}, label {e.label} expects "
                            f"{pretty_type(annot.result)}", e)
        if not isinstance(arg.type, TNever):
            reason = label_exit_failure(arg.post, annot.post)
            if reason is not None:
                raise self._err(ErrorKind.BreakPostconditionFailure, "break",
                                f"constraints at break do not entail label {e.label}'s: {reason}", e)
            stack = self._exits.get(e.label)
            if stack:
                stack[-1].append(arg.post)
        return TypeResult(NEVER, state.pre)


def join_branches(r1: TypeResult, r2: TypeResult) -> TypeResult:
    """Combine the results of two branches by weakening both."""
    post = merge(r1.post, r2.post)
    if isinstance(r1.type, TNever):
        return TypeResult(r2.type, post)
    if isinstance(r2.type, TNever):
        return TypeResult(r1.type, post)
    if type_equal(r1.type, r2.type):
        return TypeResult(r1.type, post)
    return TypeResult(join(r1.type, r2.type), post)


def synthesize(state: TypeState, e: Expr, replay: bool = False) -> TypeResult:
    return Checker(replay=replay).synthesize(state, e)


def typecheck_program(e: Expr) -> TypeResult:
    """Check a closed source program from empty contexts."""
    if any(isinstance(n, New) and n.site is None for n in _news(e)):
        e = number_sites(e)
    return Checker().synthesize(TypeState(), e)


def _news(e: Expr):
    return (n for n in walk(e) if isinstance(n, New))


def describe(result: TypeResult) -> str:
    return f"type: {pretty_type(result.type)}  post: [{pretty_constraints(result.post)}]"


__all__ = [
    "Checker", "ErrorKind", "LabelInfo", "TypeCheckError", "TypeResult", "TypeState", "describe",
    "join_branches", "site_var", "synthesize", "typecheck_program",
]
