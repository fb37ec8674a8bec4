"""Randomized property suite for the constraint algebra and the store model.

Every property draws its own instances from a seeded ``random.Random`` so
that a failing instance can be replayed from the report.
"""
from __future__ import annotations

import gc
import random
from dataclasses import dataclass, field
from typing import Callable

from .constraints import entails, entails_type, is_definite, merge, update
from .printer import pretty_constraints
from .runtime import (
    extract_store_typing, satisfies_constraints, satisfies_value, value_type,
)
from .syntax import (
    BASE_TYPES, BOT, BOOL, INT, STR, Const, ConstraintSet, Expr, Func, Loc, Prim, Record,
    TArrow, TConst, TVar, Type, Var, join,
)
from .typechecker import TypeState, synthesize

MAX_VARS = 6
MAX_FIELDS = 6
MAX_DEPTH = 4
FIELDS = ("a", "b", "c", "d", "e", "f")
VARS = tuple(f"X{i}" for i in range(MAX_VARS))


# ---------------------------------------------------------------- instances

def _leaf(rng: random.Random, variables) -> Type:
    pick = int(rng.random() * (len(BASE_TYPES) + 2))
    if pick < len(BASE_TYPES):
        return TConst(BASE_TYPES[pick])
    if pick == len(BASE_TYPES) and variables:
        return TVar(variables[int(rng.random() * len(variables))])
    return BOT


def _disjuncts(rng: random.Random, depth: int, variables, out: list) -> None:
    # nested disjunctions flatten, so only the leaves are drawn; join runs once
    roll = rng.random()
    if depth <= 1 or roll < 0.45:
        out.append(_leaf(rng, variables))
    elif roll < 0.9:
        for _ in range(2 if rng.random() < 0.5 else 3):
            _disjuncts(rng, depth - 1, variables, out)
    else:
        params = tuple(random_type(rng, 2, variables) for _ in range(int(rng.random() * 3)))
        out.append(TArrow(random_cs(rng, 2, 1, 2), params, random_type(rng, 2, variables),
                          random_cs(rng, 2, 1, 2)))


def random_type(rng: random.Random, depth: int = MAX_DEPTH, variables=VARS) -> Type:
    leaves: list[Type] = []
    _disjuncts(rng, depth, variables, leaves)
    return leaves[0] if len(leaves) == 1 else join(*leaves)


def _pick(rng: random.Random, pool: tuple, k: int) -> list:
    """``k`` distinct items of ``pool``; cheaper than ``Random.sample`` here."""
    items = list(pool)
    for i in range(k):
        j = i + int(rng.random() * (len(items) - i))
        items[i], items[j] = items[j], items[i]
    return items[:k]


def random_record(rng: random.Random, depth: int = MAX_DEPTH, max_fields: int = MAX_FIELDS) -> Record:
    names = _pick(rng, FIELDS, int(rng.random() * (max_fields + 1)))
    return Record.of({n: random_type(rng, depth - 1) for n in names})


def random_cs(rng: random.Random, depth: int = MAX_DEPTH, max_vars: int = MAX_VARS,
              max_fields: int = MAX_FIELDS) -> ConstraintSet:
    if depth <= 0:
        return ConstraintSet()
    names = _pick(rng, VARS, int(rng.random() * (max_vars + 1)))
    return ConstraintSet.of({v: random_record(rng, depth, max_fields) for v in names})


def _pool_function(rng: random.Random, locs: dict[int, str]) -> Func:
    """A function value that typechecks against its own annotation."""
    if locs and rng.random() < 0.5:
        loc = rng.choice(sorted(locs))
        var = locs[loc]
        pre = ConstraintSet.of({var: Record()})
        return Func((), TArrow(pre, (), TVar(var), pre), Loc(loc))
    if rng.random() < 0.5:
        return Func(("p",), TArrow(ConstraintSet(), (INT,), INT, ConstraintSet()), Var("p"))
    return Func(("p", "q"), TArrow(ConstraintSet(), (BOOL, STR), BOOL, ConstraintSet()),
                Prim("not", (Var("p"),)))


def random_value(rng: random.Random, locs: dict[int, str]) -> Expr:
    roll = rng.random()
    if roll < 0.2:
        return Const(rng.randint(-50, 50))
    if roll < 0.3:
        return Const(rng.random() < 0.5)
    if roll < 0.4:
        return Const(rng.choice(["", "a", "hello"]))
    if roll < 0.8 and locs:
        return Loc(rng.choice(sorted(locs)))
    return _pool_function(rng, locs)


@dataclass(frozen=True)
class StoreInstance:
    store: dict[int, dict[str, Expr]]
    sigma: dict[int, str]


def random_store(rng: random.Random) -> StoreInstance:
    """Up to six objects over up to six variables; locations may share a variable."""
    n_vars = rng.randint(1, MAX_VARS)
    sigma = {loc: VARS[rng.randrange(n_vars)] for loc in range(rng.randint(1, 6))}
    store = {loc: {} for loc in sigma}
    for loc in sigma:
        for name in rng.sample(FIELDS, rng.randint(0, MAX_FIELDS)):
            store[loc][name] = random_value(rng, sigma)
    return StoreInstance(store, sigma)


# ------------------------------------------------------ entailment derivations

def _weaken(rng: random.Random, t: Type) -> Type:
    return join(t, BOT if rng.random() < 0.3 else random_type(rng, 2))


def derive_step(rng: random.Random, cs: ConstraintSet, reserved: frozenset[str] = frozenset()) -> ConstraintSet:
    """One application of an entailment rule: the result is entailed by ``cs``.

    Rules: widen a field with a disjunct; drop a field; add a field whose
    type has a ``bot`` disjunct; bind a variable that is not yet bound and
    not in ``reserved``.
    """
    bound = cs.vars()
    rule = rng.randrange(4)
    if rule == 3 or not bound:
        free = [v for v in VARS if v not in cs and v not in reserved]
        if not free:
            return cs
        return cs.set(rng.choice(free), random_record(rng, 3, 3))
    var = rng.choice(bound)
    record = cs.get(var)
    names = record.names()
    if rule == 0 and names:
        name = rng.choice(names)
        return cs.set(var, record.set(name, _weaken(rng, record.get(name))))
    if rule == 1 and names:
        name = rng.choice(names)
        return cs.set(var, Record.of({k: t for k, t in record if k != name}))
    absent = [n for n in FIELDS if n not in record]
    if not absent:
        return cs
    return cs.set(var, record.set(rng.choice(absent), join(random_type(rng, 2), BOT)))


def derive(rng: random.Random, cs: ConstraintSet, steps: int,
           reserved: frozenset[str] = frozenset()) -> ConstraintSet:
    for _ in range(steps):
        cs = derive_step(rng, cs, reserved)
    return cs


# --------------------------------------------------------------- properties

Check = Callable[[random.Random], "str | None"]


def prop_reflexive(rng: random.Random) -> str | None:
    cs = random_cs(rng)
    return None if entails(cs, cs) else f"not reflexive at [{pretty_constraints(cs)}]"


def prop_transitive(rng: random.Random) -> str | None:
    a = random_cs(rng)
    b = derive(rng, a, rng.randint(0, 6))
    c = derive(rng, b, rng.randint(0, 6))
    if not (entails(a, b) and entails(b, c)):
        return f"derivation not entailed: [{pretty_constraints(a)}] / [{pretty_constraints(b)}]"
    if not entails(a, c):
        return f"not transitive: [{pretty_constraints(a)}] ... [{pretty_constraints(c)}]"
    return None


def prop_transitive_random(rng: random.Random) -> str | None:
    # small universes so that the premises hold reasonably often
    a, b, c = (random_cs(rng, 2, 2, 2) for _ in range(3))
    if entails(a, b) and entails(b, c) and not entails(a, c):
        return f"not transitive: [{pretty_constraints(a)}] [{pretty_constraints(b)}] [{pretty_constraints(c)}]"
    return None


def prop_merge(rng: random.Random) -> str | None:
    a, b = random_cs(rng), random_cs(rng)
    if entails(a, merge(a, b)):
        return None
    return f"[{pretty_constraints(a)}] does not entail its merge with [{pretty_constraints(b)}]"


def prop_update(rng: random.Random) -> str | None:
    a, b = random_cs(rng), random_cs(rng)
    if entails(b, update(a, b)):
        return None
    return f"[{pretty_constraints(b)}] does not entail [{pretty_constraints(a)}] <| itself"


def _model(rng: random.Random) -> tuple[StoreInstance, ConstraintSet]:
    inst = random_store(rng)
    return inst, extract_store_typing(inst.store, inst.sigma)


def prop_entails_sound(rng: random.Random) -> str | None:
    inst, psi1 = _model(rng)
    if not satisfies_constraints(inst.store, inst.sigma, psi1):
        return f"store does not satisfy its own typing [{pretty_constraints(psi1)}]"
    psi2 = derive(rng, psi1, rng.randint(1, 8), frozenset(inst.sigma.values()))
    if not satisfies_constraints(inst.store, inst.sigma, psi2):
        return f"[{pretty_constraints(psi1)}] entails [{pretty_constraints(psi2)}] but the store fails it"
    return None


def prop_hasfield(rng: random.Random) -> str | None:
    inst, psi1 = _model(rng)
    psi = derive(rng, psi1, rng.randint(0, 6), frozenset(inst.sigma.values()))
    if not satisfies_constraints(inst.store, inst.sigma, psi):
        return f"derived constraints not satisfied: [{pretty_constraints(psi)}]"
    for var, record in psi:
        for name, t in record:
            if not is_definite(t):
                continue
            for loc, v in inst.sigma.items():
                if v != var:
                    continue
                obj = inst.store[loc]
                if name not in obj:
                    return f"l{loc} lacks {name} though {var} has definite {name}"
                if not satisfies_value(inst.store, inst.sigma, obj[name], t):
                    return f"l{loc}.{name} does not have the constrained type"
    return None


def prop_value_completeness(rng: random.Random) -> str | None:
    inst, psi1 = _model(rng)
    psi = derive(rng, psi1, rng.randint(0, 4), frozenset(inst.sigma.values()))
    v = random_value(rng, inst.sigma)
    t = value_type(inst.sigma, v)
    for _ in range(rng.randint(0, 2)):
        t = _weaken(rng, t)
    if not satisfies_value(inst.store, inst.sigma, v, t):
        return "value does not satisfy its own weakened type"
    locs = {loc: TVar(var) for loc, var in inst.sigma.items()}
    try:
        result = synthesize(TypeState(pre=psi, locs=locs), v)
    except Exception as exc:  # a rejection is the failure being tested for
        return f"value rejected: {exc}"
    if not entails_type(result.type, t):
        return "synthesized type does not entail the satisfied type"
    return None


PROPERTIES: dict[str, Check] = {
    "entails-reflexive": prop_reflexive,
    "entails-transitive": prop_transitive,
    "entails-transitive-random": prop_transitive_random,
    "merge-entailed": prop_merge,
    "update-entailed": prop_update,
    "entails-sound": prop_entails_sound,
    "hasfield": prop_hasfield,
    "value-completeness": prop_value_completeness,
}

# the store-based suites run at half the algebra's instance count
HALF = frozenset({"entails-sound", "hasfield", "value-completeness"})


@dataclass
class PropResult:
    name: str
    trials: int
    failures: int = 0
    example: str = ""

    @property
    def ok(self) -> bool:
        return self.failures == 0


@dataclass
class PropsReport:
    seed: int
    results: list[PropResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def render(self) -> str:
        lines = [f"props seed={self.seed}"]
        for r in self.results:
            status = "PASS" if r.ok else "FAIL"
            lines.append(f"{status} {r.name}: {r.trials - r.failures}/{r.trials}")
            if r.example:
                lines.append(f"  e.g. {r.example}")
        return "\n".join(lines) + "\n"


def check_property(name: str, trials: int, seed: int = 0) -> PropResult:
    check = PROPERTIES[name]
    result = PropResult(name, trials)
    # instances are acyclic; generational scans of the long-lived type caches
    # cost more than a third of the run
    enabled = gc.isenabled()
    gc.disable()
    try:
        for i in range(trials):
            rng = random.Random(f"{name}:{seed}:{i}")
            problem = check(rng)
            if problem is not None:
                result.failures += 1
                if not result.example:
                    result.example = f"trial {i}: {problem}"
    finally:
        if enabled:
            gc.enable()
    return result


def run_props(iters: int = 10_000, seed: int = 0, names=None) -> PropsReport:
    report = PropsReport(seed)
    for name in names or PROPERTIES:
        n = max(1, iters // 2) if name in HALF else iters
        report.results.append(check_property(name, n, seed))
    return report


__all__ = [
    "PROPERTIES", "PropResult", "PropsReport", "StoreInstance", "check_property", "derive",
    "derive_step", "random_cs", "random_record", "random_store", "random_type", "random_value",
    "run_props",
]
