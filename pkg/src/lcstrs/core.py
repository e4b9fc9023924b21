"""Applicative simply-typed terms over a signature with built-in theory sorts.

Terms are immutable trees of function symbols, variables and applications.
Every node carries its type and a few derived facts (free variables, size,
whether the term is built from theory material only). Construction rejects
ill-typed applications, so any `Term` in circulation is well typed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union


class LcstrsError(Exception):
    """Base class for all errors raised by this package."""


class TypingError(LcstrsError):
    def __init__(self, message: str, pos: Optional[tuple[int, int]] = None):
        self.pos = pos
        if pos is not None:
            message = f"{pos[0]}:{pos[1]}: {message}"
        super().__init__(message)


class RuleError(LcstrsError):
    """A rewrite rule violates one of its four well-formedness conditions."""

    def __init__(self, condition: int, message: str):
        self.condition = condition
        super().__init__(f"rule condition ({condition}): {message}")


# ---------------------------------------------------------------------------
# Sorts and types


@dataclass(frozen=True)
class Sort:
    name: str
    is_theory: bool = False

    def __str__(self) -> str:
        return self.name


INT = Sort("Int", is_theory=True)
BOOL = Sort("Bool", is_theory=True)


class Type:
    """A simple type: either a base sort or an arrow between types."""

    is_theory_type: bool

    @property
    def arity(self) -> int:
        n, t = 0, self
        while isinstance(t, ArrowType):
            n, t = n + 1, t.result
        return n

    def argument_types(self) -> tuple["Type", ...]:
        out, t = [], self
        while isinstance(t, ArrowType):
            out.append(t.arg)
            t = t.result
        return tuple(out)


@dataclass(frozen=True)
class BaseType(Type):
    sort: Sort

    @property
    def is_theory_type(self) -> bool:
        return self.sort.is_theory

    def __str__(self) -> str:
        return self.sort.name


@dataclass(frozen=True)
class ArrowType(Type):
    arg: Type
    result: Type

    @property
    def is_theory_type(self) -> bool:
        # argument must be a theory sort, not just any theory type
        return (isinstance(self.arg, BaseType) and self.arg.sort.is_theory
                and self.result.is_theory_type)

    def __str__(self) -> str:
        left = f"({self.arg})" if isinstance(self.arg, ArrowType) else str(self.arg)
        return f"{left} -> {self.result}"


INT_T = BaseType(INT)
BOOL_T = BaseType(BOOL)


def arrow(*types: Type) -> Type:
    """Right-fold types into an arrow: arrow(A, B, C) is A -> (B -> C)."""
    if not types:
        raise ValueError("arrow() needs at least one type")
    result = types[-1]
    for t in reversed(types[:-1]):
        result = ArrowType(t, result)
    return result


def is_theory_sort_type(t: Type) -> bool:
    return isinstance(t, BaseType) and t.sort.is_theory


# ---------------------------------------------------------------------------
# Terms


class Term:
    """Base class for terms. Symbols and variables are themselves terms."""

    type: Type
    free_vars: frozenset
    size: int
    is_theory_term: bool

    @property
    def is_ground(self) -> bool:
        return not self.free_vars

    @property
    def is_value(self) -> bool:
        return False

    def spine(self) -> tuple["Term", tuple["Term", ...]]:
        """Decompose into the head leaf and the argument list."""
        t, args = self, []
        while isinstance(t, App):
            args.append(t.arg)
            t = t.head
        return t, tuple(reversed(args))

    def apply(self, *args: "Term") -> "Term":
        t = self
        for a in args:
            t = App(t, a)
        return t

    def subterms(self) -> Iterator[tuple[tuple[int, ...], "Term"]]:
        """All (position, subterm) pairs, root first."""
        stack = [((), self)]
        while stack:
            pos, t = stack.pop()
            yield pos, t
            if isinstance(t, App):
                stack.append((pos + (1,), t.arg))
                stack.append((pos + (0,), t.head))

    def subterm_at(self, position: tuple[int, ...]) -> "Term":
        t = self
        for step in position:
            if not isinstance(t, App) or step not in (0, 1):
                raise LcstrsError(f"invalid position {list(position)}")
            t = t.head if step == 0 else t.arg
        return t

    def replace_at(self, position: tuple[int, ...], replacement: "Term") -> "Term":
        if not position:
            if replacement.type != self.type:
                raise TypingError(
                    f"replacement has type {replacement.type}, expected {self.type}")
            return replacement
        if not isinstance(self, App) or position[0] not in (0, 1):
            raise LcstrsError(f"invalid position {list(position)}")
        if position[0] == 0:
            return App(self.head.replace_at(position[1:], replacement), self.arg)
        return App(self.head, self.arg.replace_at(position[1:], replacement))


@dataclass(frozen=True)
class FunctionSymbol(Term):
    name: str
    type: Type
    is_theory: bool = False

    def __post_init__(self):
        if self.is_theory and not self.type.is_theory_type:
            raise TypingError(
                f"theory symbol '{self.name}' must have a theory type, got {self.type}")
        object.__setattr__(self, "free_vars", frozenset())
        object.__setattr__(self, "size", 1)
        object.__setattr__(self, "is_theory_term", self.is_theory)

    @property
    def is_value(self) -> bool:
        return self.is_theory and isinstance(self.type, BaseType)

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable(Term):
    name: str
    type: Type

    def __post_init__(self):
        object.__setattr__(self, "free_vars", frozenset((self,)))
        object.__setattr__(self, "size", 1)
        object.__setattr__(self, "is_theory_term", True)

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App(Term):
    head: Term
    arg: Term

    def __post_init__(self):
        ht = self.head.type
        if not isinstance(ht, ArrowType):
            raise TypingError(
                f"cannot apply a term of base type {ht} to an argument")
        if ht.arg != self.arg.type:
            raise TypingError(
                f"argument has type {self.arg.type}, expected {ht.arg}")
        object.__setattr__(self, "type", ht.result)
        object.__setattr__(self, "free_vars", self.head.free_vars | self.arg.free_vars)
        object.__setattr__(self, "size", self.head.size + self.arg.size + 1)
        object.__setattr__(
            self, "is_theory_term",
            self.head.is_theory_term and self.arg.is_theory_term)

    def __repr__(self) -> str:
        return f"({self.head!r} {self.arg!r})"


def free_vars(term: Term) -> frozenset:
    """The set of variables occurring in a term."""
    return term.free_vars


# ---------------------------------------------------------------------------
# Substitutions


class Substitution:
    """A type-preserving finite map from variables to terms.

    Variables outside the domain are fixed points, so applying a
    substitution never fails.
    """

    def __init__(self, mapping: Mapping[Variable, Term] = ()):
        m = dict(mapping)
        for v, t in m.items():
            if not isinstance(v, Variable):
                raise TypingError(f"substitution key {v!r} is not a variable")
            if v.type != t.type:
                raise TypingError(
                    f"substitution maps '{v.name}' : {v.type} to a term of type {t.type}")
        self._map = m

    def get(self, var: Variable, default: Optional[Term] = None) -> Term:
        if default is None:
            default = var
        return self._map.get(var, default)

    def __getitem__(self, var: Variable) -> Term:
        return self._map.get(var, var)

    def __contains__(self, var: Variable) -> bool:
        return var in self._map

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def items(self):
        return self._map.items()

    @property
    def domain(self) -> frozenset:
        return frozenset(self._map)

    def apply(self, term: Term) -> Term:
        if isinstance(term, Variable):
            return self._map.get(term, term)
        if isinstance(term, FunctionSymbol):
            return term
        return App(self.apply(term.head), self.apply(term.arg))

    def extended(self, mapping: Mapping[Variable, Term]) -> "Substitution":
        merged = dict(self._map)
        merged.update(mapping)
        return Substitution(merged)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __repr__(self) -> str:
        inner = ", ".join(f"{v.name} := {t!r}" for v, t in sorted(
            self._map.items(), key=lambda it: it[0].name))
        return "{" + inner + "}"


def apply_subst(term: Term, subst: Substitution) -> Term:
    return subst.apply(term)


# ---------------------------------------------------------------------------
# Signatures and typechecking

LiteralResolver = Callable[[str], Optional[FunctionSymbol]]


class Signature:
    """Maps names to declared function symbols.

    A resolver hook turns literal spellings (integer tokens) into value
    symbols on demand. Only built-in symbols may be overloaded.
    """

    def __init__(self, symbols: Iterable[FunctionSymbol] = (),
                 literal: Optional[LiteralResolver] = None):
        self._by_name: dict[str, tuple[FunctionSymbol, ...]] = {}
        self._literal = literal
        for s in symbols:
            self.add(s)

    def add(self, symbol: FunctionSymbol, overload: bool = False) -> None:
        have = self._by_name.get(symbol.name)
        if have is not None and not overload:
            raise LcstrsError(f"symbol '{symbol.name}' is already declared")
        self._by_name[symbol.name] = (have or ()) + (symbol,)

    def lookup(self, name: str) -> tuple[FunctionSymbol, ...]:
        found = self._by_name.get(name)
        if found:
            return found
        if self._literal is not None:
            lit = self._literal(name)
            if lit is not None:
                return (lit,)
        return ()

    def __contains__(self, name: str) -> bool:
        return bool(self.lookup(name))

    def symbols(self) -> Iterator[FunctionSymbol]:
        for group in self._by_name.values():
            yield from group

    def copy(self) -> "Signature":
        sig = Signature(literal=self._literal)
        sig._by_name = dict(self._by_name)
        return sig


@dataclass(frozen=True)
class PreLeaf:
    """An unresolved name in a pre-term, with its source position."""
    name: str
    pos: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class PreApp:
    head: Union["PreApp", PreLeaf]
    arg: Union["PreApp", PreLeaf]
    pos: Optional[tuple[int, int]] = None


PreTerm = Union[PreLeaf, PreApp]


def _pre_spine(pre: PreTerm) -> tuple[PreLeaf, list[PreTerm]]:
    args: list[PreTerm] = []
    while isinstance(pre, PreApp):
        args.append(pre.arg)
        pre = pre.head
    assert isinstance(pre, PreLeaf)
    args.reverse()
    return pre, args


def typecheck(pre: PreTerm, signature: Signature,
              context: Optional[dict[str, Variable]] = None,
              expected: Optional[Type] = None) -> Term:
    """Resolve and type a pre-term bottom-up.

    Names found in the signature become symbols; everything else is a
    variable. Variable types come from `context` or are inferred from the
    position in which the variable first appears; conflicting uses are
    errors. `context` is updated in place with inferred variables.
    """
    ctx = {} if context is None else context
    return _check(pre, signature, ctx, expected)


def _check(pre: PreTerm, sig: Signature, ctx: dict[str, Variable],
           expected: Optional[Type]) -> Term:
    leaf, args = _pre_spine(pre)
    candidates = sig.lookup(leaf.name)
    if len(candidates) > 1:
        first_error = None
        for cand in candidates:
            scratch = dict(ctx)
            try:
                t = _check_spine(cand, args, sig, scratch, expected, leaf.pos)
            except TypingError as e:
                if first_error is None:
                    first_error = e
                continue
            ctx.clear()
            ctx.update(scratch)
            return t
        raise first_error
    if candidates:
        return _check_spine(candidates[0], args, sig, ctx, expected, leaf.pos)
    # a variable
    var = ctx.get(leaf.name)
    if var is None:
        if args or expected is None:
            raise TypingError(
                f"cannot infer the type of variable '{leaf.name}'", leaf.pos)
        var = Variable(leaf.name, expected)
        ctx[leaf.name] = var
    elif not args and expected is not None and var.type != expected:
        raise TypingError(
            f"variable '{leaf.name}' has type {var.type} but is used at {expected}",
            leaf.pos)
    return _check_spine(var, args, sig, ctx, expected, leaf.pos)


def _check_spine(head: Term, args: list[PreTerm], sig: Signature,
                 ctx: dict[str, Variable], expected: Optional[Type],
                 pos: Optional[tuple[int, int]]) -> Term:
    t = head
    for a in args:
        if not isinstance(t.type, ArrowType):
            raise TypingError(
                f"cannot apply a term of base type {t.type} to an argument", pos)
        t = App(t, _check(a, sig, ctx, t.type.arg))
    if expected is not None and t.type != expected:
        raise TypingError(f"term has type {t.type}, expected {expected}", pos)
    return t


# ---------------------------------------------------------------------------
# Rewrite rules


@dataclass(frozen=True)
class Rule:
    """A constrained rewrite rule lhs -> rhs [constraint].

    Construction enforces the four well-formedness conditions:
      (1) both sides have the same type,
      (2) the left side is not a theory term,
      (3) the constraint is a logical constraint (a boolean theory term
          whose free variables all have theory sorts),
      (4) variables fresh on the right have theory sorts.
    """

    lhs: Term
    rhs: Term
    constraint: Term

    def __post_init__(self):
        if self.lhs.type != self.rhs.type:
            raise RuleError(
                1, f"sides have different types {self.lhs.type} and {self.rhs.type}")
        if self.lhs.is_theory_term:
            raise RuleError(2, "left-hand side is a theory term")
        phi = self.constraint
        if not phi.is_theory_term:
            raise RuleError(3, "constraint is not a theory term")
        if phi.type != BOOL_T:
            raise RuleError(3, f"constraint has type {phi.type}, expected Bool")
        for v in sorted(phi.free_vars, key=lambda v: v.name):
            if not is_theory_sort_type(v.type):
                raise RuleError(
                    3, f"constraint variable '{v.name}' has non-theory type {v.type}")
        for v in sorted(self.rhs.free_vars - self.lhs.free_vars,
                        key=lambda v: v.name):
            if not is_theory_sort_type(v.type):
                raise RuleError(
                    4, f"variable '{v.name}' is fresh on the right but has "
                       f"non-theory type {v.type}")

    @property
    def fresh_vars(self) -> frozenset:
        """Variables a respecting substitution must send to values and that
        matching against the left side cannot bind."""
        return (self.constraint.free_vars | self.rhs.free_vars) - self.lhs.free_vars

    def __repr__(self) -> str:
        return f"{self.lhs!r} -> {self.rhs!r} [{self.constraint!r}]"


def validate_rule(lhs: Term, rhs: Term, constraint: Term) -> Rule:
    """Build a rule, raising RuleError naming the violated condition."""
    return Rule(lhs, rhs, constraint)
