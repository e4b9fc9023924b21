"""Command-line front end: check, run, and prove.

Exit codes: 0 success (file valid / normal form reached / witness found),
1 input error (parse, typing, rule validity), 2 inconclusive (fuel
exhausted / no witness found).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .core import LcstrsError
from .prover import ProverConfig, Witness, check_witness, find_witness
from .rewrite import InputSource, normalize
from .syntax import parse_system, parse_term, print_rule, print_term

SMT_ENV_VAR = "LCSTRS_SMT_CMD"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcstrs",
        description="Constrained higher-order rewriting: execution and "
                    "termination proving.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="system file to load")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p_check = sub.add_parser("check", help="parse and validate a system file")
    common(p_check)

    p_run = sub.add_parser("run", help="normalize a term")
    common(p_run)
    p_run.add_argument("--term", required=True, help="term to normalize")
    p_run.add_argument("--strategy", choices=("innermost", "outermost"),
                       default="innermost")
    p_run.add_argument("--fuel", type=int, default=10000)
    p_run.add_argument("--inputs", default="",
                       help="comma-separated values for input variables, "
                            "e.g. 3,true,-1")
    p_prove = sub.add_parser("prove", help="search for a termination witness")
    common(p_prove)
    p_prove.add_argument("--bounds", default=None,
                         help="comma-separated bounds to try for the integer "
                              "ordering (default: the file's `option bound`, "
                              "else 0)")
    p_prove.add_argument("--smt-cmd", default=os.environ.get(SMT_ENV_VAR),
                         help="external SMT solver command line "
                              f"(default ${SMT_ENV_VAR})")
    p_prove.add_argument("--timeout", type=float, default=60.0,
                         help="wall-clock budget in seconds")
    p_prove.add_argument("--jobs", type=int, default=1,
                         help="parallel rule checks during verification")
    return parser


def _parse_inputs(text: str) -> list:
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if piece in ("true", "false"):
            values.append(piece == "true")
        else:
            values.append(int(piece))
    return values


def _emit(payload: dict, fmt: str, text: str) -> None:
    if fmt == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _fail(message: str, fmt: str, command: str, file: str) -> int:
    if fmt == "json":
        print(json.dumps({"command": command, "file": file, "ok": False,
                          "error": message}, indent=2))
    print(f"error: {message}", file=sys.stderr)
    return 1


def cmd_check(args) -> int:
    system = parse_system(_read(args.file))
    lines = [f"fun {s.name} : {s.type}" for s in system.declarations]
    lines += [f"rule {print_rule(r)}" for r in system.rules]
    lines.append(f"ok: {len(system.declarations)} symbols, "
                 f"{len(system.rules)} rules")
    payload = {
        "command": "check", "file": args.file, "ok": True,
        "symbols": [{"name": s.name, "type": str(s.type)}
                    for s in system.declarations],
        "rules": [{"index": i + 1,
                   "lhs": print_term(r.lhs),
                   "rhs": print_term(r.rhs),
                   "constraint": print_term(r.constraint)}
                  for i, r in enumerate(system.rules)],
    }
    _emit(payload, args.format, "\n".join(lines))
    return 0


def cmd_run(args) -> int:
    system = parse_system(_read(args.file))
    term = parse_term(args.term, system)
    inputs = InputSource(_parse_inputs(args.inputs))
    result = normalize(term, system, strategy=args.strategy, fuel=args.fuel,
                       inputs=inputs)
    lines = [f"start: {print_term(term)}"]
    for i, step in enumerate(result.steps):
        lines.append(f"step {i + 1}: {step.kind} at {list(step.position)} -> "
                     f"{print_term(step.result)}")
    if result.exhausted:
        lines.append(f"fuel exhausted after {result.total_steps} steps")
    else:
        lines.append(f"normal form after {result.total_steps} steps: "
                     f"{print_term(result.term)}")
    payload = {
        "command": "run", "file": args.file, "ok": not result.exhausted,
        "start": print_term(term), "strategy": args.strategy,
        "fuel": args.fuel, "result": print_term(result.term),
        "normal_form": not result.exhausted,
        "total_steps": result.total_steps,
        "steps": [{"position": list(s.position), "kind": s.kind,
                   "term": print_term(s.result)} for s in result.steps],
    }
    _emit(payload, args.format, "\n".join(lines))
    return 2 if result.exhausted else 0


def cmd_prove(args) -> int:
    system = parse_system(_read(args.file))
    if args.bounds is None:
        bounds = (system.bound,)
    else:
        bounds = tuple(int(b) for b in args.bounds.split(",")
                       if b.strip() != "") or (system.bound,)
    config = ProverConfig(bounds=bounds, timeout=args.timeout,
                          smt_command=args.smt_cmd)
    result = find_witness(system, config)
    if isinstance(result, Witness):
        verification = check_witness(result, system, jobs=max(1, args.jobs))
        if not verification.ok:
            payload = {"command": "prove", "file": args.file, "ok": False,
                       "report": {"message": "witness failed verification",
                                  "diagnostics": list(verification.diagnostics)}}
            _emit(payload, args.format,
                  "witness failed verification:\n" +
                  "\n".join(verification.diagnostics))
            return 2
        payload = {"command": "prove", "file": args.file, "ok": True,
                   "witness": result.to_dict()}
        _emit(payload, args.format, "TERMINATING\n" + result.to_text())
        return 0
    payload = {"command": "prove", "file": args.file, "ok": False,
               "report": result.to_dict()}
    _emit(payload, args.format, "UNKNOWN\n" + result.to_text())
    return 2


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as e:
        raise LcstrsError(f"cannot read {path}: {e.strerror}") from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = {"check": cmd_check, "run": cmd_run, "prove": cmd_prove}
    try:
        return handlers[args.command](args)
    except LcstrsError as e:
        return _fail(str(e), args.format, args.command, args.file)


if __name__ == "__main__":
    sys.exit(main())
