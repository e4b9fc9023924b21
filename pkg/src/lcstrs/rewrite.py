"""The rewrite relation: matching, rule and calculation steps, normalization.

A step either instantiates a rule with a substitution that respects it, or
calculates a fully-applied theory redex; both may happen at any position.
Variables that matching cannot bind (fresh right-hand side or
constraint-only variables) are instantiated from a pluggable input source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from .core import (
    App, BaseType, BOOL, INT, LcstrsError, Rule, Substitution, Term, Variable,
)
from .syntax import System
from .theory import bool_value, int_value, interpret, try_calculate

Position = tuple[int, ...]


def match(pattern: Term, subject: Term) -> Optional[Substitution]:
    """First-order applicative matching: the unique substitution over the
    pattern's variables sending pattern to subject, if one exists.

    Subject variables act as constants. Pattern and subject must have the
    same type.
    """
    if pattern.type != subject.type:
        raise LcstrsError(
            f"match: pattern type {pattern.type} differs from subject type "
            f"{subject.type}")
    bindings: dict[Variable, Term] = {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Variable):
            if p.type != s.type:
                return None
            bound = bindings.get(p)
            if bound is None:
                bindings[p] = s
            elif bound != s:
                return None
        elif isinstance(p, App):
            if not isinstance(s, App):
                return None
            stack.append((p.head, s.head))
            stack.append((p.arg, s.arg))
        elif p != s:  # function symbol leaf
            return None
    return Substitution(bindings)


def respects(subst: Substitution, rule: Rule, bound: int = 0) -> bool:
    """Whether a substitution respects a rule: constraint variables and
    fresh right-hand side variables go to values, and the instantiated
    constraint is ground and evaluates to true."""
    for v in rule.constraint.free_vars | (rule.rhs.free_vars - rule.lhs.free_vars):
        if not subst.get(v).is_value:
            return False
    phi = subst.apply(rule.constraint)
    if not phi.is_ground:
        return False
    return interpret(phi, bound) is True


class InputSource:
    """Supplies value terms for rule variables left unbound by matching.

    Draws from a user-provided list first (in order of use), then falls
    back to deterministic defaults: 0 for Int, false for Bool.
    """

    def __init__(self, values: Sequence[Union[int, bool]] = ()):
        self._queue = list(values)

    def value_for(self, var: Variable) -> Term:
        if not isinstance(var.type, BaseType):
            raise LcstrsError(
                f"variable '{var.name}' of type {var.type} cannot take an input value")
        if self._queue:
            value = self._queue.pop(0)
            term = bool_value(value) if isinstance(value, bool) else int_value(value)
            if term.type != var.type:
                raise LcstrsError(
                    f"input value {value!r} does not fit variable "
                    f"'{var.name}' : {var.type}")
            return term
        if var.type.sort == INT:
            return int_value(0)
        if var.type.sort == BOOL:
            return bool_value(False)
        raise LcstrsError(f"no default input value for sort {var.type.sort}")


@dataclass(frozen=True)
class RewriteStep:
    """One rewrite step: where it happened, what kind, and the whole result."""
    position: Position
    rule_index: Optional[int]  # None marks a calculation step
    subst: Optional[Substitution]
    result: Term

    @property
    def kind(self) -> str:
        return "calc" if self.rule_index is None else f"rule#{self.rule_index + 1}"

    def replay(self, source: Term, system: System) -> bool:
        """Re-derive the step from its source term and compare results."""
        for step in step_at(source, self.position, system,
                            inputs=_ReplayInputs(self, source)):
            if step.rule_index == self.rule_index and step.result == self.result:
                return True
        return False


class _ReplayInputs:
    """Input source that reproduces a recorded step's fresh-variable values."""

    def __init__(self, step: RewriteStep, source: Term):
        self._subst = step.subst

    def value_for(self, var: Variable) -> Term:
        if self._subst is None:
            raise LcstrsError("calculation steps take no inputs")
        return self._subst.get(var)


def step_at(term: Term, position: Position, system: System,
            inputs: Optional[InputSource] = None) -> list[RewriteStep]:
    """All steps whose redex is exactly the subterm at `position`:
    rule steps in file order, then the calculation step if one applies."""
    redex = term.subterm_at(position)
    if inputs is None:
        inputs = InputSource()
    bound = system.bound
    steps: list[RewriteStep] = []
    for index, rule in enumerate(system.rules):
        if rule.lhs.type != redex.type:
            continue
        base = match(rule.lhs, redex)
        if base is None:
            continue
        unbound = sorted(
            (v for v in rule.fresh_vars if v not in base),
            key=lambda v: v.name)
        subst = base.extended({v: inputs.value_for(v) for v in unbound})
        if not respects(subst, rule, bound):
            continue
        result = term.replace_at(position, subst.apply(rule.rhs))
        steps.append(RewriteStep(position, index, subst, result))
    calculated = try_calculate(redex, bound)
    if calculated is not None:
        steps.append(
            RewriteStep(position, None, None, term.replace_at(position, calculated)))
    return steps


def innermost_positions(term: Term) -> Iterator[Position]:
    """Positions in leftmost-innermost order (head subtree, argument
    subtree, then the node itself)."""
    def rec(t: Term, prefix: Position) -> Iterator[Position]:
        if isinstance(t, App):
            yield from rec(t.head, prefix + (0,))
            yield from rec(t.arg, prefix + (1,))
        yield prefix
    return rec(term, ())


def outermost_positions(term: Term) -> Iterator[Position]:
    """Positions in leftmost-outermost order (node, then head, then arg)."""
    def rec(t: Term, prefix: Position) -> Iterator[Position]:
        yield prefix
        if isinstance(t, App):
            yield from rec(t.head, prefix + (0,))
            yield from rec(t.arg, prefix + (1,))
    return rec(term, ())


_STRATEGIES = {"innermost": innermost_positions, "outermost": outermost_positions}


@dataclass
class NormalizationResult:
    term: Term
    steps: list[RewriteStep] = field(default_factory=list)
    total_steps: int = 0
    exhausted: bool = False  # fuel ran out before a normal form was reached


def normalize(term: Term, system: System, strategy: str = "innermost",
              fuel: int = 10000, inputs: Optional[InputSource] = None,
              trace_cap: int = 10000) -> NormalizationResult:
    """Apply steps until no position admits one, or fuel runs out.

    The strategy fixes the search order for redexes only; both strategies
    explore every position. The trace keeps at most `trace_cap` steps.
    """
    if strategy not in _STRATEGIES:
        raise LcstrsError(f"unknown strategy {strategy!r}")
    if fuel < 0:
        raise LcstrsError("fuel must be non-negative")
    positions = _STRATEGIES[strategy]
    if inputs is None:
        inputs = InputSource()
    result = NormalizationResult(term)
    current = term
    while result.total_steps < fuel:
        step = None
        for pos in positions(current):
            found = step_at(current, pos, system, inputs)
            if found:
                step = found[0]
                break
        if step is None:
            result.term = current
            return result
        if len(result.steps) < trace_cap:
            result.steps.append(step)
        current = step.result
        result.total_steps += 1
    result.term = current
    for pos in positions(current):
        if step_at(current, pos, system, inputs):
            result.exhausted = True
            break
    return result


def calc_normal_form(term: Term, bound: int = 0) -> Term:
    """The unique normal form under calculation steps alone.

    One bottom-up pass suffices: calculation redexes take value arguments,
    so reducing subterms first leaves at most a root step.
    """
    if isinstance(term, App):
        reduced = App(calc_normal_form(term.head, bound),
                      calc_normal_form(term.arg, bound))
        calculated = try_calculate(reduced, bound)
        return calculated if calculated is not None else reduced
    return term


def joinable_calc(s: Term, t: Term, bound: int = 0) -> bool:
    """Whether two terms reach a common term via calculation steps alone.

    Calculation redexes never overlap, so comparing normal forms is sound
    and complete.
    """
    if s.type != t.type:
        raise LcstrsError(
            f"joinable_calc: types {s.type} and {t.type} differ")
    return calc_normal_form(s, bound) == calc_normal_form(t, bound)
