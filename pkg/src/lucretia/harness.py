"""Soundness and subject-reduction trials, and fuzzing over generated programs."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from .constraints import entails, entails_type
from .evaluator import Config, Done, Stepped, Stuck, initial, recompose, step
from .generator import generate_program
from .printer import pretty_constraints, pretty_print, pretty_type
from .runtime import extract_store_typing, location_env, satisfies_constraints, satisfies_value
from .syntax import (
    BOT, ConstraintSet, Expr, GetField, IfHasAttr, Record, SetField, TVar, walk,
)
from .typechecker import Checker, TypeCheckError, TypeResult, TypeState, typecheck_program


class Verdict(enum.Enum):
    Pass = "Pass"
    ProgressViolation = "ProgressViolation"
    SoundnessViolation = "SoundnessViolation"
    SubjectReductionViolation = "SubjectReductionViolation"
    Diverged = "Diverged"


VIOLATIONS = frozenset({Verdict.ProgressViolation, Verdict.SoundnessViolation,
                        Verdict.SubjectReductionViolation})


@dataclass
class TrialReport:
    program: str
    seed: int | None
    verdict: Verdict
    steps: int
    details: str = ""

    def line(self) -> str:
        head = f"seed={self.seed} verdict={self.verdict.value} steps={self.steps}"
        return f"{head} details={self.details}" if self.details else head


def field_names(e: Expr) -> frozenset[str]:
    names = set()
    for n in walk(e):
        if isinstance(n, (GetField, SetField)):
            names.add(n.field)
        elif isinstance(n, IfHasAttr):
            names.add(n.attr)
    return frozenset(names)


def replay_witness(config: Config, names: frozenset[str]) -> tuple[ConstraintSet, dict[int, str]]:
    """Store typing for an intermediate configuration: the exact typing of
    the store, with every field name the program uses but an object lacks
    recorded as ``bot``."""
    sigma_env = location_env(config.sites)
    exact = extract_store_typing(config.store, sigma_env)
    padded = {}
    for var, record in exact:
        fields = dict(record.fields)
        for name in names:
            fields.setdefault(name, BOT)
        padded[var] = Record.of(fields)
    return ConstraintSet.of(padded), sigma_env


def replay(config: Config, names: frozenset[str]) -> TypeResult:
    """Re-typecheck the residual program of ``config`` from its store typing."""
    psi, sigma_env = replay_witness(config, names)
    locs = {loc: TVar(var) for loc, var in sigma_env.items()}
    state = TypeState(psi, {}, locs, {})
    return Checker(replay=True).synthesize(state, recompose(config))


def soundness_trial(e: Expr, max_steps: int = 100_000, subject_reduction: bool = False,
                    seed: int | None = None, typing: TypeResult | None = None) -> TrialReport:
    """Run a well-typed program and compare what happens against its typing."""
    typing = typing or typecheck_program(e)
    t, post = typing.type, typing.post
    program = pretty_print(e)
    names = field_names(e)
    config = initial(e)
    steps = 0
    while True:
        if steps >= max_steps:
            return TrialReport(program, seed, Verdict.Diverged, steps)
        out = step(config)
        if isinstance(out, Stuck):
            return TrialReport(program, seed, Verdict.ProgressViolation, steps,
                               f"{out.reason.value}: {out.detail}")
        if isinstance(out, Done):
            return _final_check(program, seed, steps, out, t, post)
        assert isinstance(out, Stepped)
        steps += 1
        config = out.config
        if subject_reduction:
            problem = _replay_check(config, names, t, post)
            if problem is not None:
                return TrialReport(program, seed, Verdict.SubjectReductionViolation, steps,
                                   f"after {out.rule}: {problem}")


def _final_check(program: str, seed: int | None, steps: int, out: Done, t, post) -> TrialReport:
    sigma_env = location_env(out.sites)
    if not satisfies_value(out.store, sigma_env, out.value, t):
        return TrialReport(program, seed, Verdict.SoundnessViolation, steps,
                           f"value {pretty_print(out.value)} does not have type {pretty_type(t)}")
    if not satisfies_constraints(out.store, sigma_env, post, precise=True):
        return TrialReport(program, seed, Verdict.SoundnessViolation, steps,
                           f"final store does not satisfy [{pretty_constraints(post)}]")
    return TrialReport(program, seed, Verdict.Pass, steps)


def _replay_check(config: Config, names, t, post) -> str | None:
    try:
        r = replay(config, names)
    except TypeCheckError as exc:
        return f"residual rejected: {exc}"
    if not entails_type(r.type, t):
        return f"residual type {pretty_type(r.type)} does not entail {pretty_type(t)}"
    if not entails(r.post, post):
        return (f"residual post [{pretty_constraints(r.post)}] does not entail "
                f"[{pretty_constraints(post)}]")
    return None


@dataclass
class FuzzReport:
    seed: int
    count: int
    depth: int
    subject_reduction: bool
    verdicts: Counter = field(default_factory=Counter)
    failures: list[TrialReport] = field(default_factory=list)
    total_steps: int = 0
    max_steps_seen: int = 0

    @property
    def violations(self) -> int:
        return sum(self.verdicts[v] for v in VIOLATIONS)

    def render(self) -> str:
        lines = [f"fuzz seed={self.seed} count={self.count} depth={self.depth} "
                 f"subject_reduction={str(self.subject_reduction).lower()}"]
        for v in Verdict:
            lines.append(f"{v.value}: {self.verdicts[v]}")
        lines.append(f"total_steps: {self.total_steps}")
        lines.append(f"max_steps: {self.max_steps_seen}")
        for f in self.failures:
            lines.append(f"FAIL {f.line()}")
            lines.append(f"  program: {f.program}")
        return "\n".join(lines) + "\n"


def trial_seed(seed: int, index: int) -> int:
    return seed * 100_003 + index


def fuzz(seed: int = 0, count: int = 1000, depth: int = 6, subject_reduction: bool = False,
         max_steps: int = 100_000) -> FuzzReport:
    report = FuzzReport(seed, count, depth, subject_reduction)
    for i in range(count):
        s = trial_seed(seed, i)
        e = generate_program(s, depth)
        try:
            typing = typecheck_program(e)
        except TypeCheckError as exc:  # pragma: no cover - generator guarantees typing
            raise AssertionError(f"generated program rejected (seed {s}): {exc}") from exc
        r = soundness_trial(e, max_steps, subject_reduction, seed=s, typing=typing)
        report.verdicts[r.verdict] += 1
        report.total_steps += r.steps
        report.max_steps_seen = max(report.max_steps_seen, r.steps)
        if r.verdict in VIOLATIONS:
            report.failures.append(r)
    return report


__all__ = [
    "FuzzReport", "TrialReport", "VIOLATIONS", "Verdict", "field_names", "fuzz",
    "replay", "replay_witness", "soundness_trial", "trial_seed",
]
