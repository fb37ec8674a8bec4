"""Pretty-printing of expressions and types in the concrete surface syntax."""
from __future__ import annotations

import json

from .syntax import (
    App, Break, Const, ConstraintSet, Expr, Func, GetField, If, IfHasAttr, Label,
    Let, Loc, New, Prim, Record, SetField, TArrow, TBot, TConst, TNever, TOr,
    TVar, Type, Var,
)


def pretty_type(t: Type) -> str:
    if isinstance(t, (TConst, TVar)):
        return t.name
    if isinstance(t, TBot):
        return "bot"
    if isinstance(t, TNever):
        return "never"
    if isinstance(t, TOr):
        return " \\/ ".join(pretty_type(a) for a in t.alts)
    if isinstance(t, TArrow):
        params = ", ".join(pretty_type(p) for p in t.params)
        return (f"[{pretty_constraints(t.pre)}]({params}) -> "
                f"{pretty_type(t.result)} [{pretty_constraints(t.post)}]")
    raise TypeError(f"not a type: {t!r}")


def pretty_record(r: Record) -> str:
    return "{" + ", ".join(f"{k}: {pretty_type(t)}" for k, t in r) + "}"


def pretty_constraints(cs: ConstraintSet) -> str:
    """``X <| {a: int}, Y <| {}`` -- empty string for the empty set."""
    return ", ".join(f"{x} <| {pretty_record(r)}" for x, r in cs)


def _const(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


# expressions that extend as far right as possible
_OPEN = (Let, If, IfHasAttr, Break, SetField)


def _postfix_base(e: Expr) -> str:
    s = pretty_print(e)
    return f"({s})" if isinstance(e, _OPEN) else s


def pretty_print(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return _const(e.value)
    if isinstance(e, Loc):
        return f"@loc{e.id}"
    if isinstance(e, New):
        return "new"
    if isinstance(e, Func):
        return f"func({', '.join(e.params)}): {pretty_type(e.annotation)} {{ {pretty_print(e.body)} }}"
    if isinstance(e, Label):
        return f"label {e.label} : {pretty_type(e.annotation)} {{ {pretty_print(e.body)} }}"
    if isinstance(e, Let):
        return f"let {e.name} = {pretty_print(e.bound)} in {pretty_print(e.body)}"
    if isinstance(e, If):
        return (f"if {pretty_print(e.cond)} then {pretty_print(e.then)} "
                f"else {pretty_print(e.orelse)}")
    if isinstance(e, IfHasAttr):
        return (f"ifhasattr({pretty_print(e.subject)}, {e.attr}) then "
                f"{pretty_print(e.then)} else {pretty_print(e.orelse)}")
    if isinstance(e, Break):
        return f"break {e.label} {pretty_print(e.arg)}"
    if isinstance(e, App):
        return f"{_postfix_base(e.callee)}({', '.join(pretty_print(a) for a in e.args)})"
    if isinstance(e, Prim):
        return f"{e.op}({', '.join(pretty_print(a) for a in e.args)})"
    if isinstance(e, GetField):
        return f"{_postfix_base(e.target)}.{e.field}"
    if isinstance(e, SetField):
        return f"{_postfix_base(e.target)}.{e.field} := {pretty_print(e.value)}"
    raise TypeError(f"not an expression: {e!r}")
