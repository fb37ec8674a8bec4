"""Command-line entry point: ``lucretia check|run|fuzz|props``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluator import Done, StepLimit, Stuck, format_store, run
from .harness import fuzz
from .parser import ParseError, parse_program
from .printer import pretty_constraints, pretty_print, pretty_type
from .typechecker import TypeCheckError, describe, typecheck_program

EXIT_OK = 0
EXIT_TYPE_ERROR = 1
EXIT_PARSE_ERROR = 2
EXIT_STUCK = 3
EXIT_STEP_LIMIT = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default, which means "parse error" here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lucretia", description="Typecheck, run and fuzz programs of the object calculus.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and typecheck a program")
    c.add_argument("file")
    c.add_argument("--json", action="store_true", help="machine-readable output")

    r = sub.add_parser("run", help="typecheck, then evaluate a program")
    r.add_argument("file")
    r.add_argument("--max-steps", type=_positive, default=100_000)
    r.add_argument("--trace", action="store_true", help="print one line per reduction step")
    r.add_argument("--unsafe", action="store_true", help="skip typechecking")

    f = sub.add_parser("fuzz", help="soundness trials over generated programs")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--count", type=_positive, default=1000)
    f.add_argument("--depth", type=_positive, default=6)
    f.add_argument("--subject-reduction", action="store_true")
    f.add_argument("--max-steps", type=_positive, default=100_000)

    q = sub.add_parser("props", help="constraint-algebra property suite")
    q.add_argument("--iters", type=_positive, default=10_000)
    q.add_argument("--seed", type=int, default=0)
    return p


def _load(path: str):
    """Parse ``path``; returns the program or an exit code."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"{path}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return parse_program(text)
    except ParseError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR


def cmd_check(args) -> int:
    e = _load(args.file)
    if isinstance(e, int):
        if args.json and e == EXIT_PARSE_ERROR:
            print(json.dumps({"type": None, "post_constraints": None,
                              "errors": [{"file": args.file, "kind": "ParseError"}]}, sort_keys=True))
        return e
    try:
        result = typecheck_program(e)
    except TypeCheckError as exc:
        if args.json:
            print(json.dumps({"type": None, "post_constraints": None,
                              "errors": [exc.to_json(args.file)]}, sort_keys=True))
        else:
            print(exc.render(args.file))
        return EXIT_TYPE_ERROR
    if args.json:
        print(json.dumps({"type": pretty_type(result.type),
                          "post_constraints": pretty_constraints(result.post),
                          "errors": []}, sort_keys=True))
    else:
        print(describe(result))
    return EXIT_OK


def cmd_run(args) -> int:
    e = _load(args.file)
    if isinstance(e, int):
        return e
    if not args.unsafe:
        try:
            typecheck_program(e)
        except TypeCheckError as exc:
            print(exc.render(args.file))
            return EXIT_TYPE_ERROR
    result = run(e, max_steps=args.max_steps, trace=args.trace)
    for line in result.trace or ():
        print(line)
    out = result.outcome
    if isinstance(out, Done):
        print(f"value: {pretty_print(out.value)}")
        print(f"store: {format_store(out.store)}")
        print(f"steps: {result.steps}")
        return EXIT_OK
    if isinstance(out, Stuck):
        print(f"Stuck({out.reason.value}): {out.detail}")
        print(f"store: {format_store(result.store)}")
        print(f"steps: {result.steps}")
        return EXIT_STUCK
    assert isinstance(out, StepLimit)
    print(f"StepLimit after {result.steps} steps")
    return EXIT_STEP_LIMIT


def cmd_fuzz(args) -> int:
    report = fuzz(args.seed, args.count, args.depth, args.subject_reduction, args.max_steps)
    sys.stdout.write(report.render())
    return EXIT_OK if report.violations == 0 else 1


def cmd_props(args) -> int:
    from .props import run_props

    report = run_props(args.iters, args.seed)
    sys.stdout.write(report.render())
    return EXIT_OK if report.ok else 1


COMMANDS = {"check": cmd_check, "run": cmd_run, "fuzz": cmd_fuzz, "props": cmd_props}


def cli_main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; everything else is a usage error
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    return COMMANDS[args.command](args)


def main() -> None:
    sys.exit(cli_main())


__all__ = ["build_parser", "cli_main", "main"]
