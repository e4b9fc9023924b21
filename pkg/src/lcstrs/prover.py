"""Automatic search for ordering parameters that orient every rule.

The search walks a small, finite space: for each candidate bound and each
assignment of statuses to defined symbols (lexicographic first, then
multiset by descending width), it grows a precedence incrementally. An
orientation attempt that fails reports which precedence queries came up
empty; each such edge is hypothesized in turn, rejecting cycles, and the
attempt is retried. Precedence growth never invalidates an orientation
that already succeeded, so the first fully-oriented assignment wins.

A found witness is self-certifying: `check_witness` replays every rule
from scratch with fresh caches.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence, Union

from .core import FunctionSymbol, Rule
from .horpo import LEX, Horpo, HorpoParams, Judgment, Mul, Status
from .solver import Solver
from .syntax import System, print_rule, print_term


@dataclass
class ProverConfig:
    bounds: Sequence[int] = (0,)
    timeout: float = 60.0                 # wall-clock budget, seconds
    max_queries: Optional[int] = None     # entailment-query budget
    smt_command: Optional[str] = None
    jobs: int = 1


@dataclass
class Witness:
    """Ordering parameters plus one derivation per rule, in rule order."""
    params: HorpoParams
    derivations: tuple[Judgment, ...]

    def to_dict(self) -> dict:
        status = {f.name: repr(st) for f, st in sorted(
            self.params.status.items(), key=lambda it: it[0].name)}
        return {
            "version": 1,
            "bound": self.params.bound,
            "precedence": [[f.name, g.name] for f, g in sorted(
                self.params.edges, key=lambda e: (e[0].name, e[1].name))],
            "status": status,
            "rules": [
                {
                    "index": i + 1,
                    "lhs": print_term(j.lhs),
                    "rhs": print_term(j.rhs),
                    "constraint": print_term(j.constraint),
                    "derivation": j.to_dict(),
                }
                for i, j in enumerate(self.derivations)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = ["termination witness"]
        lines.append(f"  bound: {self.params.bound}")
        hasse = self.params.hasse_pairs()
        prec = ", ".join(f"{f.name} > {g.name}" for f, g in hasse) or "(empty)"
        lines.append(f"  precedence: {prec}")
        status = ", ".join(
            f"{f.name}: {st!r}" for f, st in sorted(
                self.params.status.items(), key=lambda it: it[0].name))
        lines.append(f"  status: {status or '(all lexicographic)'}")
        for i, j in enumerate(self.derivations):
            lines.append(f"  rule {i + 1}: {print_term(j.lhs)} -> "
                         f"{print_term(j.rhs)} [{print_term(j.constraint)}]")
            lines.append(j.to_text(indent=4))
        return "\n".join(lines)


@dataclass
class RuleFailure:
    index: int                      # 1-based rule number
    rule: str
    deepest: Optional[str]          # deepest comparison that failed
    unknowns: tuple[str, ...]       # entailments that came back Unknown


@dataclass
class FailureReport:
    """Why no witness was found. Never a claim of nontermination: either
    the finite search space is exhausted or the prover gave up (budget or
    Unknown entailments)."""
    failures: tuple[RuleFailure, ...]
    searched: int                   # orientation attempts made
    gave_up: bool                   # budget exhausted or Unknowns encountered
    message: str = ""

    def __post_init__(self):
        if not self.message:
            kind = ("gave up before exhausting the search space" if self.gave_up
                    else "no witness exists in the search space")
            self.message = f"{kind} ({self.searched} orientation attempts)"

    def to_dict(self) -> dict:
        return {
            "message": self.message,
            "gave_up": self.gave_up,
            "attempts": self.searched,
            "rules": [
                {"index": f.index, "rule": f.rule, "deepest_failure": f.deepest,
                 "unknown_entailments": list(f.unknowns)}
                for f in self.failures
            ],
        }

    def to_text(self) -> str:
        lines = [f"no termination witness found: {self.message}"]
        for f in self.failures:
            lines.append(f"  rule {f.index}: {f.rule}")
            if f.deepest:
                lines.append(f"    deepest failing comparison: {f.deepest}")
            for u in f.unknowns:
                lines.append(f"    undecided entailment: {u}")
        return "\n".join(lines)


ProveResult = Union[Witness, FailureReport]


class _Budget:
    def __init__(self, config: ProverConfig, solver_of_bound):
        self.deadline = time.monotonic() + config.timeout
        self.max_queries = config.max_queries
        self._solvers = solver_of_bound
        self.attempts = 0

    def exceeded(self) -> bool:
        if time.monotonic() > self.deadline:
            return True
        if self.max_queries is not None:
            total = sum(s.queries for s in self._solvers.values())
            if total > self.max_queries:
                return True
        return False


def _status_options(symbol: FunctionSymbol) -> list[Status]:
    arity = symbol.type.arity
    return [LEX] + [Mul(k) for k in range(arity, 1, -1)]


def find_witness(system: System, config: Optional[ProverConfig] = None
                 ) -> ProveResult:
    """Search bounds, statuses and precedences for a verified witness."""
    cfg = config or ProverConfig()
    defined = system.defined_symbols()
    solvers: dict[int, Solver] = {}
    budget = _Budget(cfg, solvers)
    best_failure: Optional[tuple[int, FailureReport]] = None
    gave_up = False

    for bound in cfg.bounds:
        solver = solvers.setdefault(
            bound, Solver(smt_command=cfg.smt_command, bound=bound))
        for combo in product(*(_status_options(f) for f in defined)):
            status = dict(zip(defined, combo))
            outcome = _search_precedence(system, status, bound, solver, budget)
            if isinstance(outcome, Witness):
                return outcome
            oriented, report, interrupted = outcome
            gave_up = gave_up or interrupted
            if best_failure is None or oriented > best_failure[0]:
                best_failure = (oriented, report)
            if interrupted:
                break
        if gave_up:
            break

    failures = best_failure[1].failures if best_failure else ()
    had_unknowns = best_failure[1].gave_up if best_failure else False
    return FailureReport(failures, budget.attempts, gave_up or had_unknowns)


def _search_precedence(system: System, status: dict, bound: int,
                       solver: Solver, budget: _Budget):
    """Depth-first growth of the precedence edge set for one status/bound
    choice. Returns a Witness or (rules-oriented, FailureReport, gave_up)."""
    visited: set[frozenset] = set()
    best: Optional[tuple[int, FailureReport]] = None
    interrupted = False

    def attempt(edges: frozenset):
        nonlocal best
        budget.attempts += 1
        params = HorpoParams(edges, status, bound)
        derivations = []
        for index, rule in enumerate(system.rules):
            engine = Horpo(params, solver)
            judgment = engine.orient_rule(rule)
            if judgment is None:
                failure = RuleFailure(
                    index + 1, print_rule(rule),
                    engine.deepest_failure[1] if engine.deepest_failure else None,
                    tuple(engine.unknowns))
                report = FailureReport(
                    (failure,), budget.attempts,
                    gave_up=bool(engine.unknowns))
                if best is None or index > best[0]:
                    best = (index, report)
                return index, engine.prec_misses
            derivations.append(judgment)
        return Witness(params, tuple(derivations)), None

    def dfs(edges: frozenset):
        nonlocal interrupted
        if edges in visited:
            return None
        visited.add(edges)
        if budget.exceeded():
            interrupted = True
            return None
        result, misses = attempt(edges)
        if isinstance(result, Witness):
            return result
        for f, g in sorted(misses, key=lambda e: (e[0].name, e[1].name)):
            if _creates_cycle(edges, f, g):
                continue
            found = dfs(edges | {(f, g)})
            if found is not None:
                return found
            if interrupted:
                return None
        return None

    witness = dfs(frozenset())
    if witness is not None:
        return witness
    if best is None:
        # no rules at all: the empty witness orients everything
        if not system.rules:
            return Witness(HorpoParams((), status, bound), ())
        best = (0, FailureReport((), budget.attempts, interrupted))
    return best[0], best[1], interrupted


def _creates_cycle(edges: frozenset, f: FunctionSymbol,
                   g: FunctionSymbol) -> bool:
    """Would adding f > g close a cycle? True iff f is reachable from g."""
    if f == g:
        return True
    adjacency: dict = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
    stack = [g]
    seen = set()
    while stack:
        x = stack.pop()
        if x == f:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(adjacency.get(x, ()))
    return False


def params_from_dict(data: dict, signature) -> HorpoParams:
    """Rebuild ordering parameters from a witness JSON document, so a
    third party can re-check a proof from its serialized form alone."""
    def symbol(name: str) -> FunctionSymbol:
        found = signature.lookup(name)
        if not found:
            raise ValueError(f"witness names unknown symbol '{name}'")
        return found[0]

    edges = [(symbol(f), symbol(g)) for f, g in data["precedence"]]
    status: dict[FunctionSymbol, Status] = {}
    for name, st in data["status"].items():
        if st == "lex":
            status[symbol(name)] = LEX
        elif st.startswith("mul(") and st.endswith(")"):
            status[symbol(name)] = Mul(int(st[4:-1]))
        else:
            raise ValueError(f"bad status {st!r} in witness")
    return HorpoParams(edges, status, int(data["bound"]))


@dataclass
class CheckResult:
    ok: bool
    diagnostics: tuple[str, ...] = ()
    derivations: tuple[Optional[Judgment], ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_witness(witness: Witness, system: System,
                  solver: Optional[Solver] = None, jobs: int = 1
                  ) -> CheckResult:
    """Re-validate the witness parameters and re-orient every rule with
    fresh caches, independently of whatever search produced the witness."""
    params = HorpoParams(witness.params.edges, witness.params.status,
                         witness.params.bound)
    if solver is None:
        solver = Solver(bound=params.bound)
    diagnostics: list[str] = []
    derivations: list[Optional[Judgment]] = []

    def orient(indexed: tuple[int, Rule]):
        index, rule = indexed
        engine = Horpo(params, solver)
        judgment = engine.orient_rule(rule)
        note = None
        if judgment is None:
            note = f"rule {index + 1} not oriented: {print_rule(rule)}"
            if engine.deepest_failure:
                note += f" (deepest failure: {engine.deepest_failure[1]})"
        return judgment, note

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(orient, enumerate(system.rules)))
    else:
        results = [orient(pair) for pair in enumerate(system.rules)]
    for judgment, note in results:
        derivations.append(judgment)
        if note:
            diagnostics.append(note)
    return CheckResult(not diagnostics, tuple(diagnostics), tuple(derivations))
