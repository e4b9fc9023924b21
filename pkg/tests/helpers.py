"""Shared test machinery: random term generators and independent oracles."""

from __future__ import annotations

import itertools
import random
from collections import Counter

from lcstrs.core import (
    App, ArrowType, BaseType, BOOL, BOOL_T, FunctionSymbol, INT, INT_T, Rule,
    Signature, Term, Variable,
)
from lcstrs import theory
from lcstrs.theory import (
    ADD, AND, EQ, GE, GT, LE, LT, MUL, NE, NOT, OR, SUB, SUP_BOOL, SUP_INT,
    SUPEQ_BOOL, SUPEQ_INT, bool_value, int_value,
)
from lcstrs.rewrite import Position
from lcstrs.theory import try_calculate

INT_BINOPS = (ADD, SUB, MUL)
CMP_OPS = (LE, LT, GE, GT, EQ, NE, SUP_INT, SUPEQ_INT)
BOOL_BINOPS = (AND, OR, SUP_BOOL, SUPEQ_BOOL)


# ---------------------------------------------------------------------------
# Random ground theory terms


def gen_theory_term(rng: random.Random, sort=None, budget: int = 12) -> Term:
    """A random ground theory term of the given sort within a node budget."""
    if sort is None:
        sort = rng.choice((INT, BOOL))
    if sort == INT:
        if budget < 5 or rng.random() < 0.25:
            return int_value(rng.randint(-9, 9))
        op = rng.choice(INT_BINOPS)
        left_budget = rng.randint(1, budget - 4)
        left = gen_theory_term(rng, INT, left_budget)
        right = gen_theory_term(rng, INT, budget - 3 - left.size)
        return op.apply(left, right)
    if budget < 5 or rng.random() < 0.25:
        return bool_value(rng.random() < 0.5)
    kind = rng.random()
    if kind < 0.5:
        op = rng.choice(CMP_OPS)
        left_budget = rng.randint(1, budget - 4)
        left = gen_theory_term(rng, INT, left_budget)
        right = gen_theory_term(rng, INT, budget - 3 - left.size)
        return op.apply(left, right)
    if kind < 0.8 or budget < 5:
        op = rng.choice(BOOL_BINOPS)
        left_budget = rng.randint(1, budget - 4)
        left = gen_theory_term(rng, BOOL, left_budget)
        right = gen_theory_term(rng, BOOL, budget - 3 - left.size)
        return op.apply(left, right)
    return NOT.apply(gen_theory_term(rng, BOOL, budget - 2))


# ---------------------------------------------------------------------------
# Random well-typed ground terms over an arbitrary signature


def _result_after(ty, k: int):
    for _ in range(k):
        if not isinstance(ty, ArrowType):
            return None
        ty = ty.result
    return ty


def gen_ground_term(rng: random.Random, signature: Signature, target,
                    depth: int, int_lo: int = -5, int_hi: int = 5) -> Term:
    """A random ground well-typed term of the target type.

    Depth bounds the recursion; at depth <= 0 the candidates that need the
    fewest arguments are preferred, which terminates for every type the
    fixture signatures can express.
    """
    if depth < -10:
        raise RuntimeError("generator recursed too deep")
    candidates = []
    for symbol in signature.symbols():
        for k in range(symbol.type.arity + 1):
            if _result_after(symbol.type, k) == target:
                candidates.append((symbol, k))
    if target == INT_T:
        candidates.append((None, 0))  # integer literal
    if isinstance(target, BaseType) and target.sort == BOOL:
        candidates.append((bool_value(rng.random() < 0.5), 0))
    if depth <= 0:
        min_k = min(k for _, k in candidates)
        candidates = [c for c in candidates if c[1] == min_k]
    symbol, k = rng.choice(candidates)
    if symbol is None:
        return int_value(rng.randint(int_lo, int_hi))
    term: Term = symbol
    for arg_type in symbol.type.argument_types()[:k]:
        term = App(term, gen_ground_term(rng, signature, arg_type, depth - 1,
                                         int_lo, int_hi))
    return term


# ---------------------------------------------------------------------------
# Independent oracles


def recursive_is_theory_term(t: Term) -> bool:
    """Direct recursion on the defining grammar (oracle for the cached flag)."""
    if isinstance(t, Variable):
        return True
    if isinstance(t, FunctionSymbol):
        return t.is_theory
    return recursive_is_theory_term(t.head) and recursive_is_theory_term(t.arg)


def recursive_free_vars(t: Term) -> frozenset:
    if isinstance(t, Variable):
        return frozenset((t,))
    if isinstance(t, FunctionSymbol):
        return frozenset()
    return recursive_free_vars(t.head) | recursive_free_vars(t.arg)


def calc_redexes(t: Term, bound: int = 0) -> list[tuple[Position, Term]]:
    """All positions where a calculation step applies, with the results."""
    out = []
    for pos, sub in t.subterms():
        calculated = try_calculate(sub, bound)
        if calculated is not None:
            out.append((pos, t.replace_at(pos, calculated)))
    return out


def random_calc_normalize(t: Term, rng: random.Random, bound: int = 0,
                          watch_size=None) -> Term:
    """Normalize under calculation steps in a random order."""
    current = t
    while True:
        redexes = calc_redexes(current, bound)
        if not redexes:
            return current
        _, successor = rng.choice(redexes)
        if watch_size is not None:
            watch_size(current, successor)
        current = successor


def calc_reachable(t: Term, bound: int = 0, cap: int = 10000) -> set[Term]:
    """Breadth-first closure of a term under single calculation steps."""
    seen = {t}
    queue = [t]
    while queue:
        current = queue.pop(0)
        for _, successor in calc_redexes(current, bound):
            if successor not in seen:
                seen.add(successor)
                queue.append(successor)
        if len(seen) > cap:
            raise RuntimeError("calculation graph unexpectedly large")
    return seen


def joinable_bfs(s: Term, t: Term, bound: int = 0) -> bool:
    """Joinability decided by exploring the full calculation графs."""
    return bool(calc_reachable(s, bound) & calc_reachable(t, bound))


def dershowitz_manna_gt(ms, ns, strict_gt) -> bool:
    """Classic multiset ordering, replayed from its definition: remove a
    nonempty submultiset X from M and add any Y whose members are each
    strictly below some member of X."""
    m_list = list(ms)
    n_count = Counter(ns)
    for r in range(1, len(m_list) + 1):
        for keep in itertools.combinations(range(len(m_list)), r):
            x = [m_list[i] for i in keep]
            rest = Counter(m_list[i] for i in range(len(m_list))
                           if i not in keep)
            if rest - n_count:
                continue  # M - X must be contained in N
            y = n_count - rest
            if all(any(strict_gt(xi, yi) for xi in x)
                   for yi in y.elements()):
                return True
    return False


def multisets_up_to(size: int, universe) -> list[tuple]:
    """All multisets (as sorted tuples) of size <= `size` over a universe."""
    out = []
    for k in range(size + 1):
        out.extend(itertools.combinations_with_replacement(universe, k))
    return out


# ---------------------------------------------------------------------------
# Random valid rewrite systems (for subject-reduction style properties)

_ARG_TYPES = (INT_T, BOOL_T, ArrowType(INT_T, INT_T))


def gen_system(rng: random.Random, n_symbols: int = 3, n_rules: int = 4):
    """A random valid system: symbol-headed linear left sides over fresh
    variables, right sides built from the left side's variables and ground
    material, constraints over the theory-sorted variables."""
    from lcstrs.syntax import System

    signature = theory.base_signature()
    defined = []
    for i in range(n_symbols):
        arity = rng.randint(1, 3)
        args = tuple(rng.choice(_ARG_TYPES) for _ in range(arity))
        result = rng.choice((INT_T, BOOL_T))
        symbol = FunctionSymbol(f"h{i}", ArrowType(args[0], _fold(args[1:], result)))
        signature.add(symbol)
        defined.append(symbol)

    rules = []
    for _ in range(n_rules):
        head = rng.choice(defined)
        arg_types = head.type.argument_types()
        variables = [Variable(f"v{i}", ty) for i, ty in enumerate(arg_types)]
        lhs = head.apply(*variables)
        rhs = _gen_rhs(rng, signature, lhs.type, variables, depth=3)
        constraint = _gen_constraint(rng, variables)
        rules.append(Rule(lhs, rhs, constraint))
    return System(signature=signature, rules=tuple(rules), options={},
                  declarations=tuple(defined))


def _fold(args, result):
    for ty in reversed(args):
        result = ArrowType(ty, result)
    return result


def _gen_rhs(rng, signature, target, variables, depth):
    usable = [v for v in variables if v.type == target]
    if usable and rng.random() < 0.4:
        return rng.choice(usable)
    return gen_ground_term(rng, signature, target, depth)


def _gen_constraint(rng, variables):
    int_vars = [v for v in variables if v.type == INT_T]
    if not int_vars or rng.random() < 0.3:
        return theory.TRUE
    v = rng.choice(int_vars)
    op = rng.choice((LE, LT, GE, GT))
    return op.apply(v, int_value(rng.randint(-3, 3)))
