"""A constraint-indexed recursive path ordering on applicative terms.

Three mutually recursive relations drive everything, each indexed by a
logical constraint: a weak comparison `geq`, a strict comparison `gt`, and
a structural descent relation `rpo` that peels arguments off a
symbol-headed term. Theory terms of base sort are compared semantically,
through entailment of the built-in ordering symbols; everything else is
compared structurally using a precedence on function symbols and a
per-symbol status (lexicographic or k-ary multiset comparison of
arguments).

A rule is oriented by a strict comparison of its sides under the rule's
constraint, with the constraint's variable set enlarged by the variables
that are fresh on the right: respecting substitutions instantiate those by
values, which is exactly what the base case of the descent relation needs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from . import theory
from .core import (
    App, FunctionSymbol, LcstrsError, Rule, Term, Variable,
    is_theory_sort_type,
)
from .rewrite import joinable_calc
from .solver import Solver, Verdict
from .syntax import print_term


class Lex:
    """Lexicographic argument comparison."""

    def __repr__(self):
        return "lex"

    def __eq__(self, other):
        return isinstance(other, Lex)

    def __hash__(self):
        return hash(Lex)


@dataclass(frozen=True)
class Mul:
    """Multiset comparison of the first k arguments (k >= 2)."""
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise LcstrsError(f"multiset status needs k >= 2, got {self.k}")

    def __repr__(self):
        return f"mul({self.k})"


LEX = Lex()
Status = Union[Lex, Mul]


class HorpoParams:
    """Parameters of one ordering instance: precedence edges among
    non-theory symbols, status per symbol (default lexicographic), and the
    lower bound for the integer ordering symbol.

    The precedence implicitly puts every non-theory symbol above every
    theory symbol; theory symbols are mutually incomparable. Explicit
    edges must be acyclic.
    """

    def __init__(self, precedence: Iterable[tuple[FunctionSymbol, FunctionSymbol]] = (),
                 status: Optional[Mapping[FunctionSymbol, Status]] = None,
                 bound: int = 0):
        edges = frozenset(precedence)
        for f, g in edges:
            if f.is_theory or g.is_theory:
                raise LcstrsError(
                    "precedence edges may only relate non-theory symbols "
                    f"(got {f.name} > {g.name})")
            if f == g:
                raise LcstrsError(f"precedence edge {f.name} > {f.name} is a cycle")
        self.edges = edges
        self.status = dict(status or {})
        for f, st in self.status.items():
            if not isinstance(st, (Lex, Mul)):
                raise LcstrsError(f"bad status {st!r} for {f.name}")
        self.bound = bound
        self._closure = _transitive_closure(edges)
        for f, above in self._closure.items():
            if f in above:
                raise LcstrsError("precedence contains a cycle through "
                                  f"'{f.name}'")

    def prec_gt(self, f: FunctionSymbol, g: FunctionSymbol) -> bool:
        if f == g:
            return False
        if not f.is_theory and g.is_theory:
            return True
        return g in self._closure.get(f, ())

    def status_of(self, f: FunctionSymbol) -> Status:
        return self.status.get(f, LEX)

    def closure_pairs(self) -> frozenset:
        return frozenset((f, g) for f, above in self._closure.items()
                         for g in above)

    def hasse_pairs(self) -> tuple[tuple[FunctionSymbol, FunctionSymbol], ...]:
        """Direct edges minus those implied by transitivity, for display."""
        closure = self._closure
        out = []
        for f, g in self.edges:
            if any(g in closure.get(h, ()) for h in closure.get(f, ()) if h != g):
                continue
            out.append((f, g))
        return tuple(sorted(out, key=lambda e: (e[0].name, e[1].name)))


def _transitive_closure(edges: frozenset) -> dict:
    direct: dict = {}
    for f, g in edges:
        direct.setdefault(f, set()).add(g)
    closure: dict = {}
    for f in direct:
        seen: set = set()
        stack = list(direct.get(f, ()))
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            stack.extend(direct.get(g, ()))
        closure[f] = seen
    return closure


# ---------------------------------------------------------------------------
# Judgments


@dataclass(frozen=True)
class Judgment:
    """A successful comparison with its full derivation tree.

    `case` names the rule of the definition that applied; `verdict` is
    present on entailment-backed leaves; `data` carries case-specific
    payload (the strict position for lexicographic comparisons, the
    mapping and strict set for multiset comparisons).
    """
    relation: str   # geq | gt | rpo | lex | mul
    case: str
    lhs: object     # Term, or tuple of Terms for lex/mul
    rhs: object
    constraint: Term
    cvars: frozenset = frozenset()
    children: tuple = ()
    verdict: Optional[Verdict] = None
    data: object = None

    def to_dict(self) -> dict:
        d = {
            "relation": self.relation,
            "case": self.case,
            "lhs": _render(self.lhs),
            "rhs": _render(self.rhs),
            "constraint": print_term(self.constraint),
        }
        if self.verdict is not None:
            d["entailment"] = repr(self.verdict)
        detail = self._detail()
        if detail is not None:
            d["detail"] = detail
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    def to_text(self, indent: int = 0) -> str:
        rel = {"geq": ">=", "gt": ">", "rpo": ">>", "lex": ">lex", "mul": ">mul"}
        line = (" " * indent
                + f"{self.case}: {_render(self.lhs)} {rel[self.relation]} "
                + f"{_render(self.rhs)} [{print_term(self.constraint)}]")
        detail = self._detail()
        if detail is not None:
            line += f" ({detail})"
        parts = [line]
        parts.extend(c.to_text(indent + 2) for c in self.children)
        return "\n".join(parts)

    def _detail(self) -> Optional[str]:
        if self.data is None:
            return None
        if self.case == "rpo:subterm":
            return f"argument {self.data + 1}"
        if isinstance(self.data, int):
            return f"strict at position {self.data + 1}"
        if isinstance(self.data, tuple) and len(self.data) == 2:
            pi, strict = self.data
            pairs = ", ".join(f"t{j + 1}<-s{i + 1}" for j, i in enumerate(pi))
            strict_s = ", ".join(f"s{i + 1}" for i in sorted(strict)) or "none"
            return f"map {pairs}; strict {strict_s}"
        return str(self.data)


def _render(side) -> str:
    if isinstance(side, Term):
        return print_term(side)
    return "(" + ", ".join(print_term(t) for t in side) + ")"


# ---------------------------------------------------------------------------
# Generalized multiset extension search


def multiset_extension_search(m: int, n: int,
                              gt_ok: Callable[[int, int], bool],
                              geq_ok: Callable[[int, int], bool]
                              ) -> Optional[tuple[tuple[int, ...], frozenset]]:
    """Search for a cover of n targets by m sources.

    Looks for a map pi from target indices to source indices and a set S of
    source indices such that strict sources (those in S) dominate all their
    targets, non-strict sources cover exactly one target weakly, and either
    S is nonempty or there are more sources than targets. Returns (pi, S)
    or None.
    """
    if m == 0:
        return None
    for pi in itertools.product(range(m), repeat=n):
        groups: dict[int, list[int]] = {}
        for j, i in enumerate(pi):
            groups.setdefault(i, []).append(j)
        strict = set()
        ok = True
        for i, js in groups.items():
            if all(gt_ok(i, j) for j in js):
                strict.add(i)
            elif len(js) == 1 and geq_ok(i, js[0]):
                continue
            else:
                ok = False
                break
        if not ok:
            continue
        if strict or m > n:
            return pi, frozenset(strict)
    return None


# ---------------------------------------------------------------------------
# The ordering engine


class Horpo:
    """One proof context: parameters, a solver, and memoized judgments.

    Also records, per orientation attempt, which precedence queries failed
    (useful to drive a parameter search), which entailment checks came back
    Unknown, and the deepest point where a derivation attempt failed.
    """

    def __init__(self, params: HorpoParams, solver: Optional[Solver] = None):
        if solver is None:
            solver = Solver(bound=params.bound)
        elif solver.bound != params.bound:
            raise LcstrsError(
                f"solver bound {solver.bound} differs from ordering bound "
                f"{params.bound}")
        self.params = params
        self.solver = solver
        self._memo: dict = {}
        self._depth = 0
        self.prec_misses: set[tuple[FunctionSymbol, FunctionSymbol]] = set()
        self.unknowns: list[str] = []
        self.deepest_failure: Optional[tuple[int, str]] = None

    # -- public relations --------------------------------------------------

    def geq(self, s: Term, t: Term, phi: Term,
            cvars: Optional[frozenset] = None) -> Optional[Judgment]:
        if s.type != t.type:
            raise LcstrsError("weak comparison requires terms of equal type")
        return self._run("geq", s, t, phi, self._cvars(phi, cvars), self._geq)

    def gt(self, s: Term, t: Term, phi: Term,
           cvars: Optional[frozenset] = None) -> Optional[Judgment]:
        return self._run("gt", s, t, phi, self._cvars(phi, cvars), self._gt)

    def rpo(self, s: Term, t: Term, phi: Term,
            cvars: Optional[frozenset] = None) -> Optional[Judgment]:
        return self._run("rpo", s, t, phi, self._cvars(phi, cvars), self._rpo)

    def lex_ext(self, ss: Sequence[Term], ts: Sequence[Term], phi: Term,
                cvars: Optional[frozenset] = None) -> Optional[Judgment]:
        """Strict comparison at some position, weak on everything before it."""
        cvars = self._cvars(phi, cvars)
        prefix: list[Judgment] = []
        for i in range(min(len(ss), len(ts))):
            strict = self._gt_safe(ss[i], ts[i], phi, cvars)
            if strict is not None:
                return Judgment("lex", "lex:strict-prefix", tuple(ss), tuple(ts),
                                phi, cvars,
                                children=tuple(prefix) + (strict,), data=i)
            weak = self._geq_safe(ss[i], ts[i], phi, cvars)
            if weak is None:
                return None
            prefix.append(weak)
        return None

    def mul_ext(self, ss: Sequence[Term], ts: Sequence[Term], phi: Term,
                cvars: Optional[frozenset] = None) -> Optional[Judgment]:
        """Generalized multiset comparison of two argument lists."""
        cvars = self._cvars(phi, cvars)
        m, n = len(ss), len(ts)
        gt_memo: dict[tuple[int, int], Optional[Judgment]] = {}
        geq_memo: dict[tuple[int, int], Optional[Judgment]] = {}

        def gt_ok(i: int, j: int) -> bool:
            if (i, j) not in gt_memo:
                gt_memo[(i, j)] = self._gt_safe(ss[i], ts[j], phi, cvars)
            return gt_memo[(i, j)] is not None

        def geq_ok(i: int, j: int) -> bool:
            if (i, j) not in geq_memo:
                geq_memo[(i, j)] = self._geq_safe(ss[i], ts[j], phi, cvars)
            return geq_memo[(i, j)] is not None

        found = multiset_extension_search(m, n, gt_ok, geq_ok)
        if found is None:
            return None
        pi, strict = found
        children = tuple(
            gt_memo[(pi[j], j)] if pi[j] in strict else geq_memo[(pi[j], j)]
            for j in range(n))
        return Judgment("mul", "mul:cover", tuple(ss), tuple(ts), phi, cvars,
                        children=children, data=(pi, strict))

    def orient_rule(self, rule: Rule) -> Optional[Judgment]:
        """Strictly compare the rule's sides under its constraint, with the
        constraint's variable set extended by the fresh right-hand side
        variables (they are value-instantiated by respecting substitutions)."""
        cvars = rule.constraint.free_vars | (
            rule.rhs.free_vars - rule.lhs.free_vars)
        return self.gt(rule.lhs, rule.rhs, rule.constraint, cvars)

    # -- plumbing ------------------------------------------------------

    @staticmethod
    def _cvars(phi: Term, cvars: Optional[frozenset]) -> frozenset:
        return phi.free_vars if cvars is None else frozenset(cvars)

    def _run(self, rel: str, s: Term, t: Term, phi: Term, cvars: frozenset,
             body) -> Optional[Judgment]:
        key = (rel, s, t, phi, cvars)
        if key in self._memo:
            return self._memo[key]
        self._depth += 1
        try:
            result = body(s, t, phi, cvars)
        finally:
            self._depth -= 1
        self._memo[key] = result
        if result is None:
            self._note_failure(rel, s, t)
        return result

    def _note_failure(self, rel: str, s: Term, t: Term) -> None:
        if self.deepest_failure is None or self._depth + 1 > self.deepest_failure[0]:
            self.deepest_failure = (
                self._depth + 1,
                f"{rel}: {print_term(s)} vs {print_term(t)}")

    def _geq_safe(self, s: Term, t: Term, phi: Term,
                  cvars: frozenset) -> Optional[Judgment]:
        if s.type != t.type:
            return None
        return self._run("geq", s, t, phi, cvars, self._geq)

    def _gt_safe(self, s: Term, t: Term, phi: Term,
                 cvars: frozenset) -> Optional[Judgment]:
        return self._run("gt", s, t, phi, cvars, self._gt)

    def _entail_ordering(self, s: Term, t: Term, phi: Term, cvars: frozenset,
                         strict: bool) -> Optional[Verdict]:
        """Entailment of s !> t (or s !>= t) when both sides are theory
        terms of one theory sort covered by the constraint's variables."""
        if not (s.is_theory_term and t.is_theory_term):
            return None
        if not (is_theory_sort_type(s.type) and s.type == t.type):
            return None
        if not (s.free_vars | t.free_vars) <= cvars:
            return None
        goal = theory.sup_symbol(s.type.sort, strict).apply(s, t)
        verdict = self.solver.entails(phi, goal, cvars)
        if verdict.is_unknown:
            self.unknowns.append(
                f"{print_term(phi)} entails {print_term(goal)}: {verdict.reason}")
        return verdict

    # -- the three relations -------------------------------------------

    def _geq(self, s: Term, t: Term, phi: Term,
             cvars: frozenset) -> Optional[Judgment]:
        verdict = self._entail_ordering(s, t, phi, cvars, strict=False)
        if verdict is not None and verdict.is_yes:
            return Judgment("geq", "geq:theory", s, t, phi, cvars, verdict=verdict)
        strict = self._gt_safe(s, t, phi, cvars)
        if strict is not None:
            return Judgment("geq", "geq:strict", s, t, phi, cvars,
                            children=(strict,))
        if joinable_calc(s, t, self.params.bound):
            return Judgment("geq", "geq:calc-join", s, t, phi, cvars)
        if (not s.is_theory_term and isinstance(s, App) and isinstance(t, App)
                and s.head.type == t.head.type):
            head = self._geq_safe(s.head, t.head, phi, cvars)
            if head is not None:
                arg = self._geq_safe(s.arg, t.arg, phi, cvars)
                if arg is not None:
                    return Judgment("geq", "geq:app", s, t, phi, cvars,
                                    children=(head, arg))
        return None

    def _gt(self, s: Term, t: Term, phi: Term,
            cvars: frozenset) -> Optional[Judgment]:
        verdict = self._entail_ordering(s, t, phi, cvars, strict=True)
        if verdict is not None and verdict.is_yes:
            return Judgment("gt", "gt:theory", s, t, phi, cvars, verdict=verdict)
        if s.type == t.type:
            descent = self._run("rpo", s, t, phi, cvars, self._rpo)
            if descent is not None:
                return Judgment("gt", "gt:descent", s, t, phi, cvars,
                                children=(descent,))
        if not s.is_theory_term:
            s_head, s_args = s.spine()
            t_head, t_args = t.spine()
            if (s_head == t_head and s_args
                    and len(s_args) == len(t_args)):
                case = ("gt:args-fun" if isinstance(s_head, FunctionSymbol)
                        else "gt:args-var")
                weak = []
                for si, ti in zip(s_args, t_args):
                    w = self._geq_safe(si, ti, phi, cvars)
                    if w is None:
                        return None
                    weak.append(w)
                for i, (si, ti) in enumerate(zip(s_args, t_args)):
                    strict = self._gt_safe(si, ti, phi, cvars)
                    if strict is not None:
                        children = tuple(weak[:i]) + (strict,) + tuple(weak[i + 1:])
                        return Judgment("gt", case, s, t, phi, cvars,
                                        children=children, data=i)
        return None

    def _rpo(self, s: Term, t: Term, phi: Term,
             cvars: frozenset) -> Optional[Judgment]:
        if s.is_theory_term:
            return None
        s_head, s_args = s.spine()
        if not isinstance(s_head, FunctionSymbol):
            return None
        # (1) some argument already covers the whole of t
        for i, si in enumerate(s_args):
            if si.type == t.type:
                j = self._geq_safe(si, t, phi, cvars)
                if j is not None:
                    return Judgment("rpo", "rpo:subterm", s, t, phi, cvars,
                                    children=(j,), data=i)
        t_head, t_args = t.spine()
        # (2) descend into both parts of an application, head included.
        # Peeling one argument at a time subsumes every way of splitting
        # the application into a head and argument segments.
        if isinstance(t, App):
            left = self._run("rpo", s, t.head, phi, cvars, self._rpo)
            if left is not None:
                right = self._run("rpo", s, t.arg, phi, cvars, self._rpo)
                if right is not None:
                    return Judgment("rpo", "rpo:parts", s, t, phi, cvars,
                                    children=(left, right))
        # (3) smaller head symbol by precedence
        if isinstance(t_head, FunctionSymbol):
            if self.params.prec_gt(s_head, t_head):
                children = []
                for ti in t_args:
                    j = self._run("rpo", s, ti, phi, cvars, self._rpo)
                    if j is None:
                        children = None
                        break
                    children.append(j)
                if children is not None:
                    return Judgment("rpo", "rpo:precedence", s, t, phi, cvars,
                                    children=tuple(children))
            elif (s_head != t_head and not s_head.is_theory
                  and not t_head.is_theory):
                self.prec_misses.add((s_head, t_head))
        # (4)/(5) same head: compare argument lists by the head's status
        if isinstance(t_head, FunctionSymbol) and t_head == s_head and t_args:
            status = self.params.status_of(s_head)
            ext = None
            if isinstance(status, Lex):
                ext = self.lex_ext(s_args, t_args, phi, cvars)
                case = "rpo:lex"
            elif status.k <= len(t_args):
                ext = self.mul_ext(s_args[:min(len(s_args), status.k)],
                                   t_args[:status.k], phi, cvars)
                case = "rpo:mul"
            if ext is not None:
                children = [ext]
                for ti in t_args:
                    j = self._run("rpo", s, ti, phi, cvars, self._rpo)
                    if j is None:
                        children = None
                        break
                    children.append(j)
                if children is not None:
                    return Judgment("rpo", case, s, t, phi, cvars,
                                    children=tuple(children))
        # (6) values and constrained variables are minimal
        if t.is_value or (isinstance(t, Variable) and t in cvars):
            return Judgment("rpo", "rpo:base", s, t, phi, cvars)
        return None


# ---------------------------------------------------------------------------
# Module-level entry points matching the one-shot call shape


def geq(s: Term, t: Term, phi: Term, params: HorpoParams,
        solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).geq(s, t, phi)


def gt(s: Term, t: Term, phi: Term, params: HorpoParams,
       solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).gt(s, t, phi)


def rpo(s: Term, t: Term, phi: Term, params: HorpoParams,
        solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).rpo(s, t, phi)


def lex_ext(ss: Sequence[Term], ts: Sequence[Term], phi: Term,
            params: HorpoParams,
            solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).lex_ext(ss, ts, phi)


def mul_ext(ss: Sequence[Term], ts: Sequence[Term], phi: Term,
            params: HorpoParams,
            solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).mul_ext(ss, ts, phi)


def orient_rule(rule: Rule, params: HorpoParams,
                solver: Optional[Solver] = None) -> Optional[Judgment]:
    return Horpo(params, solver).orient_rule(rule)


def replay_judgment(judgment: Judgment, params: HorpoParams,
                    solver: Optional[Solver] = None) -> bool:
    """Re-derive every node of a judgment tree from scratch."""
    engine = Horpo(params, solver)
    relations = {"geq": engine.geq, "gt": engine.gt, "rpo": engine.rpo,
                 "lex": engine.lex_ext, "mul": engine.mul_ext}

    def node_ok(j: Judgment) -> bool:
        got = relations[j.relation](j.lhs, j.rhs, j.constraint, j.cvars)
        if got is None:
            return False
        return all(node_ok(c) for c in j.children)

    return node_ok(judgment)
