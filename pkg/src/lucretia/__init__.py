"""A small object calculus with flow-sensitive, constraint-based types.

Typical use::

    from lucretia import parse_program, typecheck_program, run
    e = parse_program("let x = new in x.a := 1")
    typecheck_program(e)      # int ; X0 <| {a: int}
    run(e).outcome            # Done(...)
"""
from __future__ import annotations

from .constraints import entails, entails_record, entails_type, filter_attr, merge, update
from .evaluator import Done, StepLimit, Stuck, StuckReason, run, step
from .generator import generate_program
from .harness import TrialReport, Verdict, fuzz, soundness_trial
from .parser import ParseError, parse_constraints, parse_program, parse_type
from .printer import pretty_constraints, pretty_print, pretty_type
from .runtime import extract_store_typing, satisfies_constraints, satisfies_value
from .typechecker import ErrorKind, TypeCheckError, TypeResult, synthesize, typecheck_program

__version__ = "0.1.0"

__all__ = [
    "Done", "ErrorKind", "ParseError", "StepLimit", "Stuck", "StuckReason", "TrialReport",
    "TypeCheckError", "TypeResult", "Verdict", "entails", "entails_record", "entails_type",
    "extract_store_typing", "filter_attr", "fuzz", "generate_program", "merge", "parse_constraints",
    "parse_program", "parse_type", "pretty_constraints", "pretty_print", "pretty_type", "run",
    "satisfies_constraints", "satisfies_value", "soundness_trial", "step", "synthesize",
    "typecheck_program", "update",
]
