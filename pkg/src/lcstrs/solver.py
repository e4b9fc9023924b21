"""Constraint entailment.

`phi entails psi` holds when every assignment of values to the constraint
variables that satisfies phi also satisfies psi. Verdicts are three-valued:
Yes, No (with a verified counterexample), or Unknown.

The decision pipeline:
  1. ground queries are evaluated outright;
  2. syntactic fast paths (psi a conjunct of phi, reflexive weak-ordering
     instances) and a linear-arithmetic fast path over the expansion of the
     ordering symbols;
  3. a bounded search for counterexamples over small value assignments;
  4. an external SMT solver over SMT-LIB 2 (QF_LIA), if configured.

Stages 1-3 need no external tooling; stage 4 only ever strengthens the
answer (unsat gives Yes, a model is verified by evaluation before a No is
returned, anything else is Unknown).
"""

from __future__ import annotations

import itertools
import random
import re
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Iterable, Optional

from . import theory
from .core import (
    App, BaseType, BOOL, BOOL_T, FunctionSymbol, INT, LcstrsError, Term,
    Variable, is_theory_sort_type,
)
from .theory import (
    ADD, AND, EQ, FALSE, GE, GT, LE, LT, MUL, NE, NOT, OR, SUB, SUP_BOOL,
    SUP_INT, SUPEQ_BOOL, SUPEQ_INT, TRUE, SemValue, int_value, interpret,
    value_symbol,
)


class SolverError(LcstrsError):
    pass


# ---------------------------------------------------------------------------
# Verdicts


class Verdict:
    is_yes = False
    is_no = False
    is_unknown = False


class Yes(Verdict):
    is_yes = True

    def __repr__(self):
        return "Yes"


class No(Verdict):
    is_no = True

    def __init__(self, counterexample: dict[Variable, SemValue]):
        self.counterexample = dict(counterexample)

    def __repr__(self):
        inner = ", ".join(f"{v.name}={val}" for v, val in sorted(
            self.counterexample.items(), key=lambda it: it[0].name))
        return f"No({inner})"


class Unknown(Verdict):
    is_unknown = True

    def __init__(self, reason: str):
        self.reason = reason

    def __repr__(self):
        return f"Unknown({self.reason})"


YES = Yes()


def eval_ground_constraint(constraint: Term, bound: int = 0) -> bool:
    """Evaluate a ground logical constraint."""
    if not constraint.is_ground:
        raise SolverError(f"constraint is not ground: {constraint!r}")
    if not constraint.is_theory_term or constraint.type != BOOL_T:
        raise SolverError(f"not a logical constraint: {constraint!r}")
    return interpret(constraint, bound) is True


def _check_logical_constraint(term: Term, what: str) -> None:
    if not term.is_theory_term or term.type != BOOL_T:
        raise SolverError(f"{what} is not a logical constraint: {term!r}")
    for v in term.free_vars:
        if not is_theory_sort_type(v.type):
            raise SolverError(
                f"{what} has a variable '{v.name}' of non-theory type {v.type}")


# ---------------------------------------------------------------------------
# Ordering-symbol expansion

_ORDERING = (SUP_INT, SUPEQ_INT, SUP_BOOL, SUPEQ_BOOL)


def expand_orderings(term: Term, bound: int) -> Term:
    """Rewrite applications of the ordering symbols into base theory
    operators: x !> y on Int becomes (x > b) /\\ (x > y), the weak version
    adds the equality disjunct; on Bool, x !> y becomes x /\\ not y and the
    weak version x \\/ not y."""
    head, args = term.spine()
    if isinstance(head, FunctionSymbol) and head in _ORDERING and len(args) == 2:
        x = expand_orderings(args[0], bound)
        y = expand_orderings(args[1], bound)
        if head is SUP_INT:
            return AND.apply(GT.apply(x, int_value(bound)), GT.apply(x, y))
        if head is SUPEQ_INT:
            strict = AND.apply(GT.apply(x, int_value(bound)), GT.apply(x, y))
            return OR.apply(EQ.apply(x, y), strict)
        if head is SUP_BOOL:
            return AND.apply(x, NOT.apply(y))
        return OR.apply(x, NOT.apply(y))  # weak Bool ordering
    if isinstance(term, App):
        return App(expand_orderings(term.head, bound),
                   expand_orderings(term.arg, bound))
    return term


def _conjuncts(term: Term) -> list[Term]:
    head, args = term.spine()
    if head is AND and len(args) == 2:
        return _conjuncts(args[0]) + _conjuncts(args[1])
    return [term]


# ---------------------------------------------------------------------------
# Linear fast path

_CMP = (LE, LT, GE, GT, EQ, NE)

Poly = tuple[dict[Variable, int], int]


def _linearize(term: Term) -> Optional[Poly]:
    """Integer term -> linear polynomial (coefficients, constant), or None
    if the term is nonlinear or not built from the arithmetic fragment."""
    if isinstance(term, Variable):
        return ({term: 1}, 0)
    if isinstance(term, FunctionSymbol):
        if term.is_value and term.type.sort == INT:
            return ({}, theory.semantic_value(term))
        return None
    head, args = term.spine()
    if len(args) != 2 or head not in (ADD, SUB, MUL):
        return None
    left = _linearize(args[0])
    right = _linearize(args[1])
    if left is None or right is None:
        return None
    if head is ADD:
        return _poly_add(left, right, 1)
    if head is SUB:
        return _poly_add(left, right, -1)
    lc, lk = left
    rc, rk = right
    if not lc:
        return _poly_scale(right, lk)
    if not rc:
        return _poly_scale(left, rk)
    return None  # product of two non-constant terms


def _poly_add(a: Poly, b: Poly, sign: int) -> Poly:
    coeffs = dict(a[0])
    for v, c in b[0].items():
        coeffs[v] = coeffs.get(v, 0) + sign * c
        if coeffs[v] == 0:
            del coeffs[v]
    return coeffs, a[1] + sign * b[1]


def _poly_scale(p: Poly, k: int) -> Poly:
    if k == 0:
        return ({}, 0)
    return {v: c * k for v, c in p[0].items()}, p[1] * k


def _poly_const(p: Poly) -> Optional[int]:
    return p[1] if not p[0] else None


def _poly_key(p: Poly) -> tuple:
    coeffs = sorted(((v.name, str(v.type)), c) for v, c in p[0].items())
    return (tuple(coeffs), p[1])


class _Premises:
    """Facts extracted from the antecedent's conjuncts."""

    def __init__(self, phi: Term):
        self.ge0: list[Poly] = []       # polynomials known to be >= 0
        self.ne0: list[Poly] = []       # polynomials known to be != 0
        self.literals: set[Term] = set()
        self.contradictory = False
        for c in _conjuncts(phi):
            self._absorb(c)

    def _absorb(self, atom: Term) -> None:
        if atom == TRUE:
            return
        if atom == FALSE:
            self.contradictory = True
            return
        head, args = atom.spine()
        if head in _CMP and len(args) == 2:
            left = _linearize(args[0])
            right = _linearize(args[1])
            if left is None or right is None:
                self.literals.add(atom)
                return
            d = _poly_add(left, right, -1)  # left - right
            if head is GE:
                self._add_ge0(d)
            elif head is GT:
                self._add_ge0(_shift(d, -1))
            elif head is LE:
                self._add_ge0(_poly_scale(d, -1))
            elif head is LT:
                self._add_ge0(_shift(_poly_scale(d, -1), -1))
            elif head is EQ:
                self._add_ge0(d)
                self._add_ge0(_poly_scale(d, -1))
            else:  # NE
                k = _poly_const(d)
                if k is not None and k == 0:
                    self.contradictory = True
                self.ne0.append(d)
            return
        self.literals.add(atom)

    def _add_ge0(self, p: Poly) -> None:
        k = _poly_const(p)
        if k is not None:
            if k < 0:
                self.contradictory = True
            return  # constant facts carry no information
        self.ge0.append(p)

    # goal checks ----------------------------------------------------------

    def derives_ge0(self, g: Poly) -> bool:
        k = _poly_const(g)
        if k is not None:
            return k >= 0
        for p in self.ge0:
            k = _poly_const(_poly_add(g, p, -1))
            if k is not None and k >= 0:
                return True
        for p, q in itertools.combinations(self.ge0, 2):
            k = _poly_const(_poly_add(_poly_add(g, p, -1), q, -1))
            if k is not None and k >= 0:
                return True
        return False

    def derives_ne0(self, g: Poly) -> bool:
        k = _poly_const(g)
        if k is not None:
            return k != 0
        key = _poly_key(g)
        neg = _poly_key(_poly_scale(g, -1))
        if any(_poly_key(p) in (key, neg) for p in self.ne0):
            return True
        # strictly positive or strictly negative implies nonzero
        return self.derives_ge0(_shift(g, -1)) or \
            self.derives_ge0(_shift(_poly_scale(g, -1), -1))

    def has_literal(self, atom: Term) -> bool:
        return atom in self.literals


def _shift(p: Poly, k: int) -> Poly:
    return p[0], p[1] + k


def _goal_holds(goal: Term, premises: _Premises) -> bool:
    if premises.contradictory or goal == TRUE:
        return True
    head, args = goal.spine()
    if head is AND and len(args) == 2:
        return _goal_holds(args[0], premises) and _goal_holds(args[1], premises)
    if head is OR and len(args) == 2:
        return _goal_holds(args[0], premises) or _goal_holds(args[1], premises)
    if head in _CMP and len(args) == 2:
        left = _linearize(args[0])
        right = _linearize(args[1])
        if left is None or right is None:
            return premises.has_literal(goal)
        d = _poly_add(left, right, -1)
        if head is GE:
            return premises.derives_ge0(d)
        if head is GT:
            return premises.derives_ge0(_shift(d, -1))
        if head is LE:
            return premises.derives_ge0(_poly_scale(d, -1))
        if head is LT:
            return premises.derives_ge0(_shift(_poly_scale(d, -1), -1))
        if head is EQ:
            return (premises.derives_ge0(d)
                    and premises.derives_ge0(_poly_scale(d, -1)))
        return premises.derives_ne0(d)
    return premises.has_literal(goal)


# ---------------------------------------------------------------------------
# SMT-LIB translation

_SMT_OPS = {ADD: "+", SUB: "-", MUL: "*", LE: "<=", LT: "<", GE: ">=",
            GT: ">", EQ: "=", NE: "distinct", AND: "and", OR: "or",
            NOT: "not"}

_SIMPLE_SYMBOL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _smt_name(name: str) -> str:
    return name if _SIMPLE_SYMBOL.match(name) else f"|{name}|"


def to_smtlib(constraint: Term, bound: int = 0) -> str:
    """Render a logical constraint as an SMT-LIB 2 term over QF_LIA.

    Ordering symbols are expanded into linear arithmetic first, so the
    output never contains uninterpreted functions.
    """
    _check_logical_constraint(constraint, "constraint")
    return _to_sexp(expand_orderings(constraint, bound))


def _to_sexp(term: Term) -> str:
    if isinstance(term, Variable):
        return _smt_name(term.name)
    if isinstance(term, FunctionSymbol):
        if term is TRUE:
            return "true"
        if term is FALSE:
            return "false"
        if term.is_value and term.type.sort == INT:
            n = theory.semantic_value(term)
            return str(n) if n >= 0 else f"(- {-n})"
        raise SolverError(f"unsupported symbol '{term.name}' in SMT translation")
    head, args = term.spine()
    op = _SMT_OPS.get(head)
    if op is None or len(args) != head.type.arity:
        raise SolverError(f"unsupported term in SMT translation: {term!r}")
    return "(" + " ".join([op] + [_to_sexp(a) for a in args]) + ")"


_SMT_SORTS = {INT: "Int", BOOL: "Bool"}

_MODEL_ENTRY = re.compile(
    r"\(define-fun\s+(\|[^|]*\||[^\s()]+)\s*\(\s*\)\s*(Int|Bool)\s+"
    r"(\(\s*-\s*[0-9]+\s*\)|-?[0-9]+|true|false)\s*\)")


def _parse_model(text: str, variables: dict[str, Variable]
                 ) -> dict[Variable, SemValue]:
    model: dict[Variable, SemValue] = {}
    for name, sort, value in _MODEL_ENTRY.findall(text):
        name = name.strip("|")
        var = variables.get(name)
        if var is None:
            continue
        if sort == "Bool":
            model[var] = value == "true"
        elif value.startswith("("):
            model[var] = -int(value.strip("()- \t"))
        else:
            model[var] = int(value)
    return model


# ---------------------------------------------------------------------------
# The solver


_SEARCH_INTS = (0, 1, -1, 2, -2, 3, -3, 5, -5, 7, 10, -10, 100)


@dataclass
class QueryRecord:
    phi: Term
    psi: Term
    variables: frozenset
    verdict: Verdict


class Solver:
    """Entailment engine with memoization and an optional SMT backend.

    `smt_command` is a full command line (e.g. "z3 -in") for a process
    that reads SMT-LIB 2 on stdin and reports sat/unsat plus a model on
    stdout. Without it, only the built-in fast paths and counterexample
    search run; inconclusive queries come back Unknown.
    """

    def __init__(self, smt_command: Optional[str] = None, timeout: float = 2.0,
                 bound: int = 0, search_limit: int = 4096):
        self.smt_command = smt_command
        self.timeout = timeout
        self.bound = bound
        self.search_limit = search_limit
        self.log: list[QueryRecord] = []
        self.queries = 0
        self._cache: dict[tuple, Verdict] = {}
        self._lock = threading.Lock()

    # -- public entry points -------------------------------------------

    def entails(self, phi: Term, psi: Term,
                variables: Optional[Iterable[Variable]] = None) -> Verdict:
        """Decide whether phi entails psi over the given variable set.

        `variables` defaults to the free variables of phi and must cover
        the free variables of both constraints.
        """
        _check_logical_constraint(phi, "antecedent")
        _check_logical_constraint(psi, "consequent")
        if variables is None:
            variables = phi.free_vars
        varset = frozenset(variables)
        if not (phi.free_vars | psi.free_vars) <= varset:
            raise SolverError(
                "entailment variables must cover both constraints' free variables")
        key = self._cache_key(phi, psi, varset)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            self.log.append(QueryRecord(phi, psi, varset, cached))
            return cached
        verdict = self._decide(phi, psi, varset)
        with self._lock:
            self._cache[key] = verdict
            self.queries += 1
        self.log.append(QueryRecord(phi, psi, varset, verdict))
        return verdict

    def smt_script(self, phi: Term, psi: Term,
                   variables: Optional[Iterable[Variable]] = None) -> str:
        """The SMT-LIB 2 script refuting `phi entails psi` (satisfiable
        exactly when a counterexample exists)."""
        varset = frozenset(phi.free_vars if variables is None else variables)
        lines = ["(set-option :produce-models true)", "(set-logic QF_LIA)"]
        for v in sorted(varset, key=lambda v: v.name):
            assert isinstance(v.type, BaseType)
            lines.append(
                f"(declare-const {_smt_name(v.name)} {_SMT_SORTS[v.type.sort]})")
        lines.append(f"(assert {to_smtlib(phi, self.bound)})")
        lines.append(f"(assert (not {to_smtlib(psi, self.bound)}))")
        lines.extend(["(check-sat)", "(get-model)", "(exit)"])
        return "\n".join(lines) + "\n"

    # -- pipeline stages -------------------------------------------------

    def _decide(self, phi: Term, psi: Term, varset: frozenset) -> Verdict:
        if not varset:
            if eval_ground_constraint(phi, self.bound):
                if eval_ground_constraint(psi, self.bound):
                    return YES
                return No({})
            return YES  # antecedent unsatisfiable
        if self._syntactic_yes(phi, psi):
            return YES
        expanded_phi = expand_orderings(phi, self.bound)
        expanded_psi = expand_orderings(psi, self.bound)
        if _goal_holds(expanded_psi, _Premises(expanded_phi)):
            return YES
        counterexample = self._search_counterexample(phi, psi, varset)
        if counterexample is not None:
            return No(counterexample)
        if self.smt_command:
            return self._ask_smt(phi, psi, varset)
        return Unknown("fast paths inconclusive and no SMT solver configured")

    def _syntactic_yes(self, phi: Term, psi: Term) -> bool:
        premises = _conjuncts(phi)
        for goal in _conjuncts(psi):
            if goal == TRUE or goal in premises:
                continue
            head, args = goal.spine()
            if head in (SUPEQ_INT, SUPEQ_BOOL) and len(args) == 2 \
                    and args[0] == args[1]:
                continue  # reflexive weak-ordering instance
            return False
        return True

    def _assignments(self, varset: frozenset):
        variables = sorted(varset, key=lambda v: v.name)
        pools = []
        ints = tuple(dict.fromkeys(
            _SEARCH_INTS + (self.bound, self.bound + 1, self.bound - 1)))
        for v in variables:
            pools.append((False, True) if v.type == BOOL_T else ints)
        total = 1
        for p in pools:
            total *= len(p)
        if total <= self.search_limit:
            for combo in itertools.product(*pools):
                yield dict(zip(variables, combo))
            return
        rng = random.Random(0)
        for _ in range(self.search_limit):
            yield {v: rng.choice(pool) for v, pool in zip(variables, pools)}

    def _search_counterexample(self, phi: Term, psi: Term, varset: frozenset
                               ) -> Optional[dict[Variable, SemValue]]:
        for assignment in self._assignments(varset):
            if self._is_counterexample(phi, psi, assignment):
                return assignment
        return None

    def _is_counterexample(self, phi: Term, psi: Term,
                           assignment: dict[Variable, SemValue]) -> bool:
        subst = _value_subst(assignment)
        return (interpret(subst.apply(phi), self.bound) is True
                and interpret(subst.apply(psi), self.bound) is False)

    def _ask_smt(self, phi: Term, psi: Term, varset: frozenset) -> Verdict:
        script = self.smt_script(phi, psi, varset)
        try:
            proc = subprocess.run(
                shlex.split(self.smt_command), input=script.encode(),
                capture_output=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired, ValueError) as e:
            return Unknown(f"SMT solver failed: {e.__class__.__name__}")
        output = proc.stdout.decode(errors="replace")
        status = next(
            (w for w in output.split() if w in ("sat", "unsat", "unknown")), None)
        if status == "unsat":
            return YES
        if status == "sat":
            names = {v.name: v for v in varset}
            model = _parse_model(output, names)
            assignment = {
                v: model.get(v, False if v.type == BOOL_T else 0) for v in varset}
            if self._is_counterexample(phi, psi, assignment):
                return No(assignment)
            return Unknown("SMT model did not verify")
        return Unknown(f"SMT solver answered {status or 'nothing'}")

    def _cache_key(self, phi: Term, psi: Term, varset: frozenset) -> tuple:
        from .syntax import print_term
        names = tuple(sorted((v.name, str(v.type)) for v in varset))
        return (print_term(phi), print_term(psi), names, self.bound)


def _value_subst(assignment: dict[Variable, SemValue]):
    from .core import Substitution
    return Substitution({v: value_symbol(val) for v, val in assignment.items()})


def entails(phi: Term, psi: Term,
            variables: Optional[Iterable[Variable]] = None,
            solver: Optional[Solver] = None) -> Verdict:
    """One-shot entailment check with a default solver configuration."""
    return (solver or Solver()).entails(phi, psi, variables)
