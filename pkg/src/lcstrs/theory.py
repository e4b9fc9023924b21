"""The built-in integer/boolean theory.

Houses the fixed theory signature (literals, arithmetic, comparisons,
connectives and the ordering symbols used by the termination checker), the
semantic domains, the interpretation of ground theory terms, and root-level
calculation.

Semantic values are plain Python objects: `int` for Int and `bool` for Bool
(exact, arbitrary-precision arithmetic). The ordering symbol on integers is
interpreted relative to a configurable lower bound b:

    x !> y   iff   x > b  and  x > y

which is well founded for any finite b. On booleans, true !> false is the
only strict pair. The weak versions are the reflexive closures.
"""

from __future__ import annotations

import operator
import re
from functools import lru_cache
from typing import Optional, Union

from .core import (
    App, BOOL, BOOL_T, FunctionSymbol, INT, INT_T, LcstrsError, Signature,
    Sort, Term, arrow, is_theory_sort_type,
)

SemValue = Union[int, bool]


class TheoryError(LcstrsError):
    pass


TRUE = FunctionSymbol("true", BOOL_T, is_theory=True)
FALSE = FunctionSymbol("false", BOOL_T, is_theory=True)

ADD = FunctionSymbol("+", arrow(INT_T, INT_T, INT_T), is_theory=True)
SUB = FunctionSymbol("-", arrow(INT_T, INT_T, INT_T), is_theory=True)
MUL = FunctionSymbol("*", arrow(INT_T, INT_T, INT_T), is_theory=True)

LE = FunctionSymbol("<=", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
LT = FunctionSymbol("<", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
GE = FunctionSymbol(">=", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
GT = FunctionSymbol(">", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
EQ = FunctionSymbol("=", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
NE = FunctionSymbol("!=", arrow(INT_T, INT_T, BOOL_T), is_theory=True)

AND = FunctionSymbol("/\\", arrow(BOOL_T, BOOL_T, BOOL_T), is_theory=True)
OR = FunctionSymbol("\\/", arrow(BOOL_T, BOOL_T, BOOL_T), is_theory=True)
NOT = FunctionSymbol("not", arrow(BOOL_T, BOOL_T), is_theory=True)

# ordering symbols, one strict/weak pair per theory sort
SUP_INT = FunctionSymbol("!>", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
SUPEQ_INT = FunctionSymbol("!>=", arrow(INT_T, INT_T, BOOL_T), is_theory=True)
SUP_BOOL = FunctionSymbol("!>", arrow(BOOL_T, BOOL_T, BOOL_T), is_theory=True)
SUPEQ_BOOL = FunctionSymbol("!>=", arrow(BOOL_T, BOOL_T, BOOL_T), is_theory=True)

_SUP = {(INT, True): SUP_INT, (INT, False): SUPEQ_INT,
        (BOOL, True): SUP_BOOL, (BOOL, False): SUPEQ_BOOL}


def sup_symbol(sort: Sort, strict: bool) -> FunctionSymbol:
    try:
        return _SUP[(sort, strict)]
    except KeyError:
        raise TheoryError(f"no ordering symbol for sort {sort}") from None


_INT_LITERAL = re.compile(r"-?[0-9]+\Z")


@lru_cache(maxsize=None)
def int_value(n: int) -> FunctionSymbol:
    return FunctionSymbol(str(n), INT_T, is_theory=True)


def bool_value(b: bool) -> FunctionSymbol:
    return TRUE if b else FALSE


def value_symbol(value: SemValue) -> FunctionSymbol:
    """The unique value symbol interpreting to `value`."""
    if isinstance(value, bool):
        return bool_value(value)
    if isinstance(value, int):
        return int_value(value)
    raise TheoryError(f"no value symbol for {value!r}")


def semantic_value(symbol: FunctionSymbol) -> SemValue:
    if symbol is TRUE:
        return True
    if symbol is FALSE:
        return False
    if symbol.is_value and symbol.type == INT_T and _INT_LITERAL.match(symbol.name):
        return int(symbol.name)
    raise TheoryError(f"'{symbol.name}' is not a value symbol")


def _literal_resolver(name: str) -> Optional[FunctionSymbol]:
    if _INT_LITERAL.match(name):
        return int_value(int(name))
    return None


_INT_BINOPS = {
    ADD: operator.add, SUB: operator.sub, MUL: operator.mul,
    LE: operator.le, LT: operator.lt, GE: operator.ge, GT: operator.gt,
    EQ: operator.eq, NE: operator.ne,
}
_BOOL_BINOPS = {
    AND: lambda a, b: a and b,
    OR: lambda a, b: a or b,
}


def _symbol_semantics(f: FunctionSymbol, bound: int):
    if f.is_value:
        return semantic_value(f)
    op = _INT_BINOPS.get(f) or _BOOL_BINOPS.get(f)
    if op is not None:
        return lambda x: lambda y: op(x, y)
    if f is NOT:
        return lambda x: not x
    if f is SUP_INT:
        return lambda x: lambda y: x > bound and x > y
    if f is SUPEQ_INT:
        return lambda x: lambda y: x == y or (x > bound and x > y)
    if f is SUP_BOOL:
        return lambda x: lambda y: x and not y
    if f is SUPEQ_BOOL:
        return lambda x: lambda y: x or not y
    raise TheoryError(f"no interpretation for symbol '{f.name}'")


def interpret(term: Term, bound: int = 0):
    """Interpret a ground theory term.

    For terms whose type is a theory sort the result is a SemValue; for
    higher theory types it is a curried Python callable (internal use).
    """
    if not term.is_theory_term:
        raise TheoryError(f"not a theory term: {term!r}")
    if not term.is_ground:
        raise TheoryError(f"not a ground term: {term!r}")
    return _eval(term, bound)


def _eval(term: Term, bound: int):
    if isinstance(term, FunctionSymbol):
        return _symbol_semantics(term, bound)
    assert isinstance(term, App)
    return _eval(term.head, bound)(_eval(term.arg, bound))


def try_calculate(term: Term, bound: int = 0) -> Optional[Term]:
    """The unique root-level calculation step, if the term admits one.

    Applies when the term is a non-value theory symbol fully applied to
    values and its type is a theory sort; the result is the value symbol
    with the same interpretation. Otherwise returns None.
    """
    head, args = term.spine()
    if not isinstance(head, FunctionSymbol) or not head.is_theory or head.is_value:
        return None
    if not all(a.is_value for a in args):
        return None
    if not is_theory_sort_type(term.type):
        return None
    return value_symbol(interpret(term, bound))


_BUILTINS = (
    TRUE, FALSE, ADD, SUB, MUL, LE, LT, GE, GT, EQ, NE, AND, OR, NOT,
)
_OVERLOADED = (SUP_INT, SUP_BOOL, SUPEQ_INT, SUPEQ_BOOL)

#: names of infix operators with their parse precedence level
INFIX_LEVELS = {
    "\\/": 1,
    "/\\": 2,
    "<=": 3, "<": 3, ">=": 3, ">": 3, "=": 3, "!=": 3, "!>": 3, "!>=": 3,
    "+": 4, "-": 4,
    "*": 5,
}


def base_signature() -> Signature:
    """A fresh signature containing exactly the built-in theory symbols."""
    sig = Signature(_BUILTINS, literal=_literal_resolver)
    for sym in _OVERLOADED:
        sig.add(sym, overload=True)
    return sig
