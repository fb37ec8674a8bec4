"""Recursive-descent parser for ``.luc`` programs and type annotations.

Grammar (types in brackets are written inline in annotations)::

    expr    := "let" ident "=" expr "in" expr
             | "if" expr "then" expr "else" expr
             | "ifhasattr" "(" ident "," ident ")" "then" expr "else" expr
             | "break" ident expr
             | postfix
    postfix := atom ("." ident (":=" expr)? | "(" exprlist ")")*
    atom    := ident | int | string | "true" | "false" | "new" | "(" expr ")"
             | "func" "(" idents ")" ":" type "{" expr "}"
             | "label" ident ":" type "{" expr "}"
             | primop "(" exprlist ")"

    type    := alt ("\\/" alt)*
    alt     := "int" | "bool" | "str" | "bot" | TypeVar | "(" type ")"
             | "[" constraints "]" "(" types ")" "->" type "[" constraints "]"
    constraints := (TypeVar "<|" "{" (ident ":" type),* "}"),*
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .syntax import (
    BOOL, BOT, INT, PRIMOPS, STR, App, Break, Const, ConstraintSet, Expr, Func,
    GetField, If, IfHasAttr, Label, Let, New, Prim, Record, SetField, SourceSpan,
    TArrow, TVar, Type, Var, is_value, join, normalize_type, number_sites,
)

KEYWORDS = frozenset({
    "let", "in", "if", "then", "else", "ifhasattr", "func", "label", "break",
    "new", "true", "false", *PRIMOPS,
})

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<loc>@loc\d+)
  | (?P<int>-?\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|->|\\/|<\||[=.(),:{}\[\]])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: frozenset[str] = frozenset()) -> None:
        super().__init__(message)
        self.message = message
        self.span = span
        self.expected = expected

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


class LocationLiteralError(ParseError):
    """Run-time locations cannot be written in source programs."""


@dataclass(frozen=True)
class Token:
    kind: str  # int | str | ident | kw | sym | loc | eof
    text: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        value = m.group()
        span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
        if kind == "ws":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rindex("\n") + 1
        else:
            if kind == "ident" and value in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, value, span))
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(len(text), len(text), line, len(text) - line_start + 1)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0
        self.last_end = 0
        self.temps = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        self.last_end = tok.span.end
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("kw", "sym") and tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}", {text})
        return self.advance()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail("expected identifier", {"identifier"})
        return self.advance()

    def fail(self, message: str, expected=()) -> None:
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.span, frozenset(expected))

    def span_from(self, start: Token) -> SourceSpan:
        return SourceSpan(start.span.start, max(self.last_end, start.span.end),
                          start.span.line, start.span.column)

    # -- expressions --------------------------------------------------------

    def expr(self) -> Expr:
        tok = self.peek()
        if self.at("let"):
            self.advance()
            name = self.ident().text
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return Let(name, bound, body, span=self.span_from(tok))
        if self.at("if"):
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return If(cond, then, orelse, span=self.span_from(tok))
        if self.at("ifhasattr"):
            self.advance()
            self.expect("(")
            subj_tok = self.ident()
            subject = Var(subj_tok.text, span=subj_tok.span)
            self.expect(",")
            attr = self.ident().text
            self.expect(")")
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return IfHasAttr(subject, attr, then, orelse, span=self.span_from(tok))
        if self.at("break"):
            self.advance()
            label = self.ident().text
            arg = self.expr()
            return Break(label, arg, span=self.span_from(tok))
        return self.postfix()

    def postfix(self) -> Expr:
        start = self.peek()
        e = self.atom()
        while True:
            if self.at("."):
                self.advance()
                field = self.ident().text
                if not isinstance(e, Var):
                    raise ParseError("field access needs a variable on the left; bind it with let",
                                     self.span_from(start))
                if self.at(":="):
                    self.advance()
                    value = self.expr()
                    return self.field_set(e, field, value, start)
                e = GetField(e, field, span=self.span_from(start))
            elif self.at("("):
                self.advance()
                args = self.exprlist(")")
                e = App(e, args, span=self.span_from(start))
            else:
                return e

    def field_set(self, target: Var, field: str, value: Expr, start: Token) -> Expr:
        span = self.span_from(start)
        if is_value(value):
            return SetField(target, field, value, span=span)
        tmp = f"_tmp{self.temps}"
        self.temps += 1
        return Let(tmp, value, SetField(target, field, Var(tmp), span=span), span=span)

    def exprlist(self, close: str) -> tuple[Expr, ...]:
        items: list[Expr] = []
        if self.at(close):
            self.advance()
            return ()
        while True:
            items.append(self.expr())
            if self.at(","):
                self.advance()
                continue
            self.expect(close)
            return tuple(items)

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return Var(tok.text, span=tok.span)
        if tok.kind == "int":
            self.advance()
            return Const(int(tok.text), span=tok.span)
        if tok.kind == "str":
            self.advance()
            try:
                value = json.loads(tok.text)
            except json.JSONDecodeError:
                raise ParseError("malformed string literal", tok.span) from None
            return Const(value, span=tok.span)
        if tok.kind == "loc":
            raise LocationLiteralError("locations are not allowed in source programs", tok.span)
        if self.at("true") or self.at("false"):
            self.advance()
            return Const(tok.text == "true", span=tok.span)
        if self.at("new"):
            self.advance()
            return New(span=tok.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("func"):
            self.advance()
            self.expect("(")
            params: list[str] = []
            while not self.at(")"):
                params.append(self.ident().text)
                if self.at(","):
                    self.advance()
            self.expect(")")
            if len(set(params)) != len(params):
                raise ParseError("duplicate parameter name", self.span_from(tok))
            self.expect(":")
            annotation = self.arrow_annotation()
            self.expect("{")
            body = self.expr()
            self.expect("}")
            return Func(tuple(params), annotation, body, span=self.span_from(tok))
        if self.at("label"):
            self.advance()
            name = self.ident().text
            self.expect(":")
            annotation = self.arrow_annotation()
            self.expect("{")
            body = self.expr()
            self.expect("}")
            return Label(name, annotation, body, span=self.span_from(tok))
        if tok.kind == "kw" and tok.text in PRIMOPS:
            self.advance()
            self.expect("(")
            args = self.exprlist(")")
            return Prim(tok.text, args, span=self.span_from(tok))
        self.fail("expected an expression",
                  {"identifier", "integer", "string", "true", "false", "new", "(",
                   "func", "label", "let", "if", "ifhasattr", "break", *PRIMOPS})
        raise AssertionError("unreachable")

    def arrow_annotation(self) -> TArrow:
        tok = self.peek()
        t = self.type()
        if not isinstance(t, TArrow):
            raise ParseError("annotation must be a function type", tok.span, frozenset({"["}))
        return t

    # -- types --------------------------------------------------------------

    def type(self) -> Type:
        alts = [self.type_alt()]
        while self.at("\\/"):
            self.advance()
            alts.append(self.type_alt())
        return join(*alts)

    def type_alt(self) -> Type:
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            if tok.text == "int":
                return INT
            if tok.text == "bool":
                return BOOL
            if tok.text == "str":
                return STR
            if tok.text == "bot":
                return BOT
            if tok.text[0].isupper():
                return TVar(tok.text)
            raise ParseError(f"unknown type {tok.text!r}; type variables start with an uppercase letter",
                             tok.span)
        if self.at("("):
            self.advance()
            t = self.type()
            self.expect(")")
            return t
        if self.at("["):
            self.advance()
            pre = self.constraints()
            self.expect("]")
            self.expect("(")
            params: list[Type] = []
            while not self.at(")"):
                params.append(self.type())
                if not self.at(")"):
                    self.expect(",")
            self.expect(")")
            self.expect("->")
            result = self.type()
            self.expect("[")
            post = self.constraints()
            self.expect("]")
            return normalize_type(TArrow(pre, tuple(params), result, post))
        self.fail("expected a type", {"int", "bool", "str", "bot", "type variable", "(", "["})
        raise AssertionError("unreachable")

    def constraints(self) -> ConstraintSet:
        bindings: dict[str, Record] = {}
        if self.at("]") or self.peek().kind == "eof":
            return ConstraintSet()
        while True:
            tok = self.ident()
            if not tok.text[0].isupper():
                raise ParseError("constraint subject must be a type variable", tok.span)
            if tok.text in bindings:
                raise ParseError(f"duplicate constraint on {tok.text}", tok.span)
            self.expect("<|")
            bindings[tok.text] = self.record()
            if not self.at(","):
                return ConstraintSet.of(bindings)
            self.advance()

    def record(self) -> Record:
        self.expect("{")
        fields: dict[str, Type] = {}
        while not self.at("}"):
            tok = self.ident()
            if tok.text in fields:
                raise ParseError(f"duplicate field {tok.text}", tok.span)
            self.expect(":")
            fields[tok.text] = self.type()
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return Record.of(fields)

    def finish(self) -> None:
        if self.peek().kind != "eof":
            self.fail("unexpected trailing input", {"end of input"})


def parse_program(text: str) -> Expr:
    """Parse a source program; raises :class:`ParseError` on bad input."""
    p = _Parser(text)
    e = p.expr()
    p.finish()
    return number_sites(e)


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type()
    p.finish()
    return t


def parse_constraints(text: str) -> ConstraintSet:
    p = _Parser(text)
    cs = p.constraints()
    p.finish()
    return cs
