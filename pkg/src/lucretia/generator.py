"""Type-directed generation of closed, well-typed programs.

Every piece is synthesized by the typechecker as soon as it is built, so the
generator always knows the exact constraint set at the current point and
only emits field accesses, calls and breaks that the checker will accept.
Allocation sites are numbered in generation order, which is the preorder
order the parser would assign.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .constraints import (
    FilterEmptiesField, filter_attr, is_definite, merge, precondition_failure, reallocated,
)
from .syntax import (
    BOOL, INT, STR, App, Break, Const, ConstraintSet, Expr, Func, GetField, If,
    IfHasAttr, Label, Let, New, Prim, SetField, TArrow, TNever, TVar, Type, Var,
    alternatives, contains_bot, join, number_sites,
)
from .typechecker import Checker, LabelInfo, TypeCheckError, TypeResult, TypeState, typecheck_program

FIELDS = ("a", "b", "c", "m")
_BASE = (INT, BOOL, STR)


@dataclass(frozen=True)
class Ctx:
    pre: ConstraintSet
    env: Mapping[str, Type] = field(default_factory=dict)
    labels: Mapping[str, LabelInfo] = field(default_factory=dict)
    # branch positions may hold a break
    branch: bool = False

    def state(self) -> TypeState:
        return TypeState(self.pre, self.env, {}, self.labels)

    def bind(self, name: str, t: Type, pre: ConstraintSet) -> Ctx:
        return Ctx(pre, {**self.env, name: t}, self.labels, self.branch)

    def with_pre(self, pre: ConstraintSet, branch: bool = False) -> Ctx:
        return Ctx(pre, self.env, self.labels, branch)


class _Dead(Exception):
    """No production applies here."""


class Generator:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self.site = 0
        self.names = 0

    # -- bookkeeping ----------------------------------------------------------

    def fresh(self, prefix: str) -> str:
        self.names += 1
        return f"{prefix}{self.names}"

    def new(self) -> New:
        node = New(site=self.site)
        self.site += 1
        return node

    @staticmethod
    def check(ctx: Ctx, e: Expr) -> TypeResult:
        return Checker().synthesize(ctx.state(), e)

    def attempt(self, ctx: Ctx, depth: int, productions: list[tuple[float, Callable]],
                accept: Callable[[TypeResult], bool] = lambda r: True) -> Expr:
        """Try weighted productions in random order until one yields an
        expression the checker accepts."""
        pool = [(w, p) for w, p in productions if w > 0]
        while pool:
            weights = [w for w, _ in pool]
            i = self.rng.choices(range(len(pool)), weights)[0]
            _, prod = pool.pop(i)
            saved = (self.site, self.names)
            try:
                e = prod(ctx, depth)
                if accept(self.check(ctx, e)):
                    return e
            except (_Dead, TypeCheckError, FilterEmptiesField):
                pass
            self.site, self.names = saved
        raise _Dead

    # -- helpers over the current state ---------------------------------------

    def objects(self, ctx: Ctx) -> list[tuple[str, str]]:
        """Variables holding objects the constraints know about."""
        return sorted((x, t.name) for x, t in ctx.env.items()
                      if isinstance(t, TVar) and t.name in ctx.pre)

    def vars_of(self, ctx: Ctx, want: Type) -> list[str]:
        return sorted(x for x, t in ctx.env.items() if set(alternatives(t)) <= set(alternatives(want)))

    def constant(self, t: Type | None = None) -> Const:
        t = t or self.rng.choice(_BASE)
        if t == INT:
            return Const(self.rng.randint(-5, 20))
        if t == BOOL:
            return Const(self.rng.random() < 0.5)
        return Const(self.rng.choice(["s", "t", "hello", ""]))

    # -- untyped generation ---------------------------------------------------

    def expr(self, ctx: Ctx, depth: int) -> Expr:
        if depth <= 0:
            return self.leaf(ctx)
        has_objects = bool(self.objects(ctx))
        prods = [
            (1.0, lambda c, d: self.leaf(c)),
            (3.0, self.p_let),
            (2.0, self.p_object),
            (4.0 if has_objects else 0.0, self.p_set),
            (3.0 if has_objects else 0.0, self.p_get),
            (1.5, self.p_if),
            (5.0 if has_objects else 0.0, self.p_ifhasattr),
            (1.5, self.p_prim),
            (2.0, self.p_funcdef),
            (2.0, self.p_call),
            (1.5, self.p_label),
            (2.0 if ctx.branch else 0.2, self.p_break),
        ]
        try:
            return self.attempt(ctx, depth, prods)
        except _Dead:
            return self.constant()

    def leaf(self, ctx: Ctx) -> Expr:
        r = self.rng.random()
        if r < 0.25 and ctx.env:
            return Var(self.rng.choice(sorted(ctx.env)))
        if r < 0.35:
            return self.new()
        return self.constant()

    def value(self, ctx: Ctx, depth: int) -> Expr:
        """A value: constant, variable or function literal."""
        r = self.rng.random()
        if r < 0.3 and ctx.env:
            return Var(self.rng.choice(sorted(ctx.env)))
        if r < 0.45 and depth > 0:
            f = self.function(ctx, depth - 1)
            if f is not None:
                return f
        return self.constant()

    # -- productions ----------------------------------------------------------

    def p_let(self, ctx: Ctx, depth: int) -> Expr:
        bound = self.expr(ctx.with_pre(ctx.pre), depth - 1)
        r = self.check(ctx, bound)
        if isinstance(r.type, TNever):
            return bound
        name = self.fresh("v")
        body = self.expr(ctx.bind(name, r.type, r.post), depth - 1)
        return Let(name, bound, body)

    def p_object(self, ctx: Ctx, depth: int) -> Expr:
        name = self.fresh("o")
        node = self.new()
        r = self.check(ctx, node)
        inner = ctx.bind(name, r.type, r.post)
        # initialise a field or two first
        updates = []
        for _ in range(self.rng.choice((0, 1, 1, 2))):
            update = SetField(Var(name), self.rng.choice(FIELDS), self.value(inner, depth - 1))
            seq = self.fresh("u")
            r = self.check(inner, update)
            inner = inner.bind(seq, r.type, r.post)
            updates.append((seq, update))
        body = self.expr(inner, depth - 1)
        for seq, update in reversed(updates):
            body = Let(seq, update, body)
        return Let(name, node, body)

    def p_set(self, ctx: Ctx, depth: int) -> Expr:
        objs = self.objects(ctx)
        if not objs:
            raise _Dead
        x, _ = self.rng.choice(objs)
        return SetField(Var(x), self.rng.choice(FIELDS), self.value(ctx, depth))

    def p_get(self, ctx: Ctx, depth: int) -> Expr:
        options = [(x, a) for x, var in self.objects(ctx)
                   for a, t in ctx.pre.get(var) if is_definite(t)]
        if not options:
            raise _Dead
        x, a = self.rng.choice(options)
        return GetField(Var(x), a)

    def p_if(self, ctx: Ctx, depth: int) -> Expr:
        cond = self.typed(ctx, depth - 1, BOOL)
        r = self.check(ctx, cond)
        if isinstance(r.type, TNever):
            return cond
        inner = ctx.with_pre(r.post, branch=True)
        return If(cond, self.expr(inner, depth - 1), self.expr(inner, depth - 1))

    def p_ifhasattr(self, ctx: Ctx, depth: int, want: Type | None = None) -> Expr:
        objs = self.objects(ctx)
        if not objs:
            raise _Dead
        x, var = self.rng.choice(objs)
        record = ctx.pre.get(var)
        maybe = [a for a, t in record if contains_bot(t)]
        attr = self.rng.choice(maybe) if maybe and self.rng.random() < 0.8 else self.rng.choice(FIELDS)
        then_ctx = ctx.with_pre(filter_attr(ctx.pre, var, attr), branch=True)
        else_ctx = ctx.with_pre(ctx.pre, branch=True)
        if want is None:
            then, orelse = self.expr(then_ctx, depth - 1), self.expr(else_ctx, depth - 1)
        else:
            then, orelse = self.typed(then_ctx, depth - 1, want), self.typed(else_ctx, depth - 1, want)
        return IfHasAttr(Var(x), attr, then, orelse)

    def p_prim(self, ctx: Ctx, depth: int) -> Expr:
        return self.typed(ctx, depth, self.rng.choice((INT, BOOL)))

    def p_funcdef(self, ctx: Ctx, depth: int) -> Expr:
        f = self.function(ctx, depth - 1)
        if f is None:
            raise _Dead
        name = self.fresh("f")
        body = self.expr(ctx.bind(name, f.annotation, ctx.pre), depth - 1)
        return Let(name, f, body)

    def function(self, ctx: Ctx, depth: int) -> Func | None:
        objs = self.objects(ctx)
        keep = sorted({var for _, var in objs if self.rng.random() < 0.6})
        pre = ctx.pre.restrict(keep)
        ptypes: list[Type] = []
        for _ in range(self.rng.randint(0, 2)):
            choices: list[Type] = [INT, BOOL]
            choices += [TVar(v) for v in keep]
            ptypes.append(self.rng.choice(choices))
        params = [self.fresh("p") for _ in ptypes]
        env = {**ctx.env, **dict(zip(params, ptypes))}
        body_ctx = Ctx(pre, env, {}, False)
        saved = (self.site, self.names)
        try:
            body = self.expr(body_ctx, depth)
            r = self.check(body_ctx, body)
        except TypeCheckError:
            self.site, self.names = saved
            return None
        if isinstance(r.type, TNever):
            self.site, self.names = saved
            return None
        return Func(tuple(params), TArrow(pre, tuple(ptypes), r.type, r.post), body)

    def p_call(self, ctx: Ctx, depth: int) -> Expr:
        callees: list[Expr] = [Var(x) for x, t in sorted(ctx.env.items()) if isinstance(t, TArrow)]
        callees += [GetField(Var(x), a) for x, var in self.objects(ctx)
                    for a, t in ctx.pre.get(var) if isinstance(t, TArrow)]
        if not callees:
            if self.rng.random() < 0.5:
                raise _Dead
            f = self.function(ctx, depth - 1)
            if f is None:
                raise _Dead
            callees = [f]
        callee = self.rng.choice(callees)
        ftype = self.check(ctx, callee).type
        assert isinstance(ftype, TArrow)
        args = []
        cs = ctx.pre
        for p in ftype.params:
            arg = self.typed(ctx.with_pre(cs), max(depth - 2, 0), p)
            cs = self.check(ctx.with_pre(cs), arg).post
            args.append(arg)
        if precondition_failure(cs, ftype.pre) is not None or reallocated(cs, ftype.pre, ftype.post):
            raise _Dead
        return App(callee, tuple(args))

    def p_label(self, ctx: Ctx, depth: int) -> Expr:
        name = self.fresh("l")
        inner = Ctx(ctx.pre, ctx.env, {**ctx.labels, name: LabelInfo(None, ctx.pre)}, False)
        body = self.expr(inner, depth - 1)
        checker = Checker()
        end = checker.synthesize(inner.state(), body)
        exits = [r for label, r in checker.pending_breaks if label == name]
        if not isinstance(end.type, TNever):
            exits.append(end)
        exits = [r for r in exits if not isinstance(r.type, TNever)]
        if not exits:
            raise _Dead
        result = join(*(r.type for r in exits))
        post = exits[0].post
        for r in exits[1:]:
            post = merge(post, r.post)
        return Label(name, TArrow(ConstraintSet(), (), result, post), body)

    def p_break(self, ctx: Ctx, depth: int) -> Expr:
        if not ctx.labels:
            raise _Dead
        label = self.rng.choice(sorted(ctx.labels))
        annot = ctx.labels[label].annotation
        if annot is not None:
            arg = self.typed(ctx, depth - 1, annot.result)
        else:
            arg = self.typed(ctx, depth - 1, self.rng.choice((INT, BOOL)))
        return Break(label, arg)

    # -- typed generation -----------------------------------------------------

    def typed(self, ctx: Ctx, depth: int, want: Type) -> Expr:
        """An expression whose type entails ``want``."""
        wanted = set(alternatives(want))

        def fits(r: TypeResult) -> bool:
            return isinstance(r.type, TNever) or set(alternatives(r.type)) <= wanted

        prods: list[tuple[float, Callable]] = []
        base = [t for t in _BASE if t in wanted]
        if base:
            prods.append((1.0, lambda c, d: self.constant(self.rng.choice(base))))
        if self.vars_of(ctx, want):
            prods.append((1.5, lambda c, d: Var(self.rng.choice(self.vars_of(c, want)))))
        if depth > 0:
            if INT in wanted or BOOL in wanted:
                prods.append((2.0, lambda c, d: self.primop(c, d, want)))
            prods += [
                (1.0, self.p_get),
                (0.7, lambda c, d: self.typed_if(c, d, want)),
                (1.5 if self.objects(ctx) else 0.0, lambda c, d: self.p_ifhasattr(c, d, want)),
                (0.7, lambda c, d: self.typed_let(c, d, want)),
                (0.7, self.p_call),
                (0.5, self.p_label),
            ]
            if ctx.branch and ctx.labels:
                prods.append((1.0, self.p_break))
        try:
            return self.attempt(ctx, depth, prods, accept=fits)
        except _Dead:
            if base:
                return self.constant(base[0])
            raise

    def primop(self, ctx: Ctx, depth: int, want: Type) -> Expr:
        wanted = set(alternatives(want))
        ops = [op for op, res in (("add", INT), ("sub", INT), ("mul", INT),
                                  ("eq", BOOL), ("lt", BOOL), ("not", BOOL)) if res in wanted]
        op = self.rng.choice(ops)
        argt = BOOL if op == "not" else INT
        args = []
        cs = ctx.pre
        for _ in range(1 if op == "not" else 2):
            arg = self.typed(ctx.with_pre(cs), depth - 1, argt)
            cs = self.check(ctx.with_pre(cs), arg).post
            args.append(arg)
        return Prim(op, tuple(args))

    def typed_if(self, ctx: Ctx, depth: int, want: Type) -> Expr:
        cond = self.typed(ctx, depth - 1, BOOL)
        r = self.check(ctx, cond)
        inner = ctx.with_pre(r.post, branch=True)
        return If(cond, self.typed(inner, depth - 1, want), self.typed(inner, depth - 1, want))

    def typed_let(self, ctx: Ctx, depth: int, want: Type) -> Expr:
        bound = self.expr(ctx.with_pre(ctx.pre), depth - 1)
        r = self.check(ctx, bound)
        if isinstance(r.type, TNever):
            raise _Dead
        name = self.fresh("v")
        return Let(name, bound, self.typed(ctx.bind(name, r.type, r.post), depth - 1, want))


@dataclass
class GenStats:
    programs: int = 0
    first_try: int = 0


STATS = GenStats()


def generate_program(seed: int, depth: int, max_tries: int = 20) -> Expr:
    """A closed program accepted by :func:`typecheck_program`; deterministic
    in ``(seed, depth)``."""
    STATS.programs += 1
    if depth <= 0:
        return Generator(seed).constant()
    for attempt in range(max_tries):
        gen = Generator(seed * 1_000_003 + attempt)
        e = gen.expr(Ctx(ConstraintSet()), depth)
        try:
            typecheck_program(e)
        except TypeCheckError:
            continue
        if attempt == 0:
            STATS.first_try += 1
        return number_sites(e)
    return Const(0)


__all__ = ["FIELDS", "GenStats", "Generator", "STATS", "generate_program"]
