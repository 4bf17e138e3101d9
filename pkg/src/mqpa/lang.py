"""Abstract and concrete syntax of measure-quantified arithmetic.

Terms are built from variables, ``0``, successor, ``+`` and ``*``.  Formulas
add the coin predicate ``flip``, the first-order connectives and
quantifiers, bounded-quantifier sugar and the two measure quantifiers
``C`` and ``D``.  The concrete syntax is a plain s-expression language::

    term    := ident | 0 | decimal | (s t) | (+ t t) | (* t t)
    formula := (flip t) | (= t t) | (not f) | (or f f) | (and f f)
             | (implies f f) | (exists x f) | (forall x f)
             | (exists-below x t f) | (forall-below x t f)
             | (C t t f) | (D t t f)

``(exists-below x t f)`` reads "there is an x < t with f".
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .errors import EvaluationError, SyntaxError_
from .sexpr import Atom, SList, position, read_one

Env = Mapping[str, int]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Succ(Term):
    arg: Term


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


ZERO = Zero()


def numeral(n: int) -> Term:
    if n < 0:
        raise ValueError("numerals are natural numbers")
    t: Term = ZERO
    for _ in range(n):
        t = Succ(t)
    return t


def power_term(base: int, exponent: int) -> Term:
    """``base ** exponent`` as a product of small numerals (keeps trees shallow)."""
    t: Term = numeral(1)
    b = numeral(base)
    for _ in range(exponent):
        t = Mul(b, t)
    return t


def eval_term(t: Term, env: Env) -> int:
    bump = 0
    while isinstance(t, Succ):
        bump += 1
        t = t.arg
    if isinstance(t, Zero):
        return bump
    if isinstance(t, Var):
        try:
            return env[t.name] + bump
        except KeyError:
            raise EvaluationError(f"unbound variable {t.name!r}") from None
    if isinstance(t, Add):
        return eval_term(t.left, env) + eval_term(t.right, env) + bump
    if isinstance(t, Mul):
        return eval_term(t.left, env) * eval_term(t.right, env) + bump
    raise TypeError(f"not a term: {t!r}")


def term_vars(t: Term) -> frozenset[str]:
    while isinstance(t, Succ):
        t = t.arg
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, (Add, Mul)):
        return term_vars(t.left) | term_vars(t.right)
    return frozenset()


def subst_in_term(t: Term, var: str, replacement: Term) -> Term:
    if isinstance(t, Var):
        return replacement if t.name == var else t
    if isinstance(t, Succ):
        return Succ(subst_in_term(t.arg, var, replacement))
    if isinstance(t, Add):
        return Add(subst_in_term(t.left, var, replacement), subst_in_term(t.right, var, replacement))
    if isinstance(t, Mul):
        return Mul(subst_in_term(t.left, var, replacement), subst_in_term(t.right, var, replacement))
    return t


# ------------------------------------------------------------- formulas


class Formula:
    """Base class; every node caches whether it is oracle-free (``pure``).

    A pure formula mentions neither ``flip`` nor a measure quantifier, so
    its denotation is always the full or the empty event.
    """

    __slots__ = ()

    def __post_init__(self):
        object.__setattr__(self, "pure", all(getattr(c, "pure", True) for c in self.children()))

    def children(self) -> tuple["Formula", ...]:
        return ()


@dataclass(frozen=True)
class Flip(Formula):
    index: Term

    def __post_init__(self):
        object.__setattr__(self, "pure", False)


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class ExistsBelow(Formula):
    var: str
    bound: Term
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class ForallBelow(Formula):
    var: str
    bound: Term
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class CQuant(Formula):
    num: Term
    den: Term
    body: Formula

    def __post_init__(self):
        object.__setattr__(self, "pure", False)

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class DQuant(Formula):
    num: Term
    den: Term
    body: Formula

    def __post_init__(self):
        object.__setattr__(self, "pure", False)

    def children(self):
        return (self.body,)


Ast = Union[Term, Formula]

FALSUM = Eq(ZERO, Succ(ZERO))
VERUM = Eq(ZERO, ZERO)

_BINDERS = (Exists, Forall, ExistsBelow, ForallBelow)
_BINARY = (Or, And, Implies)
_MEASURE = (CQuant, DQuant)


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def conj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return VERUM
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSUM
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def less_than(a: Term, b: Term, fresh: str = "d") -> Formula:
    """``a < b`` as a bounded formula."""
    name = fresh_name(fresh, term_vars(a) | term_vars(b))
    return ExistsBelow(name, b, Eq(Var(name), a))


def free_vars(f: Ast) -> frozenset[str]:
    if isinstance(f, Term):
        return term_vars(f)
    cached = getattr(f, "_fv", None)
    if cached is not None:
        return cached
    if isinstance(f, Flip):
        out = term_vars(f.index)
    elif isinstance(f, Eq):
        out = term_vars(f.left) | term_vars(f.right)
    elif isinstance(f, Not):
        out = free_vars(f.body)
    elif isinstance(f, _BINARY):
        out = free_vars(f.left) | free_vars(f.right)
    elif isinstance(f, (Exists, Forall)):
        out = free_vars(f.body) - {f.var}
    elif isinstance(f, (ExistsBelow, ForallBelow)):
        out = term_vars(f.bound) | (free_vars(f.body) - {f.var})
    elif isinstance(f, _MEASURE):
        out = term_vars(f.num) | term_vars(f.den) | free_vars(f.body)
    else:
        raise TypeError(f"not a formula: {f!r}")
    object.__setattr__(f, "_fv", out)
    return out


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    if base not in avoid:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand


def subst(f: Formula, var: str, replacement: Term) -> Formula:
    """Capture-avoiding substitution of ``replacement`` for free ``var``."""
    if var not in free_vars(f):
        return f
    if isinstance(f, Flip):
        return Flip(subst_in_term(f.index, var, replacement))
    if isinstance(f, Eq):
        return Eq(subst_in_term(f.left, var, replacement), subst_in_term(f.right, var, replacement))
    if isinstance(f, Not):
        return Not(subst(f.body, var, replacement))
    if isinstance(f, _BINARY):
        return type(f)(subst(f.left, var, replacement), subst(f.right, var, replacement))
    if isinstance(f, _MEASURE):
        return type(f)(
            subst_in_term(f.num, var, replacement),
            subst_in_term(f.den, var, replacement),
            subst(f.body, var, replacement),
        )
    if isinstance(f, _BINDERS):
        bound_var, body = f.var, f.body
        if bound_var == var:
            # only a bounded binder's bound can still mention var
            return type(f)(bound_var, subst_in_term(f.bound, var, replacement), body)
        rvars = term_vars(replacement)
        if bound_var in rvars:
            new = fresh_name(bound_var, rvars | free_vars(body) | {var})
            body = subst(body, bound_var, Var(new))
            bound_var = new
        body = subst(body, var, replacement)
        if isinstance(f, (Exists, Forall)):
            return type(f)(bound_var, body)
        return type(f)(bound_var, subst_in_term(f.bound, var, replacement), body)
    raise TypeError(f"not a formula: {f!r}")


def substitute(f: Formula, var: str, value: int) -> Formula:
    """Instantiate free ``var`` with the numeral for ``value``."""
    return subst(f, var, numeral(value))


def expand_bounded(f: Formula) -> Formula:
    """Replace bounded-quantifier sugar by its first-order definition.

    ``x < t`` is spelled ``exists w. (s x) + w = t``.
    """
    if isinstance(f, (Flip, Eq)):
        return f
    if isinstance(f, Not):
        return Not(expand_bounded(f.body))
    if isinstance(f, _BINARY):
        return type(f)(expand_bounded(f.left), expand_bounded(f.right))
    if isinstance(f, _MEASURE):
        return type(f)(f.num, f.den, expand_bounded(f.body))
    if isinstance(f, (Exists, Forall)):
        return type(f)(f.var, expand_bounded(f.body))
    if isinstance(f, (ExistsBelow, ForallBelow)):
        body = expand_bounded(f.body)
        w = fresh_name("w", term_vars(f.bound) | free_vars(body) | {f.var})
        guard = Exists(w, Eq(Add(Succ(Var(f.var)), Var(w)), f.bound))
        if isinstance(f, ExistsBelow):
            return Exists(f.var, And(guard, body))
        return Forall(f.var, Implies(guard, body))
    raise TypeError(f"not a formula: {f!r}")


def size(f: Ast) -> int:
    if isinstance(f, Term):
        return 1 + sum(size(getattr(f, n)) for n in ("arg", "left", "right") if hasattr(f, n))
    return 1 + sum(size(c) for c in f.children())


# ------------------------------------------------------------- printing


def print_term(t: Term) -> str:
    depth = 0
    while isinstance(t, Succ):
        depth += 1
        t = t.arg
    if isinstance(t, Var):
        core = t.name
    elif isinstance(t, Zero):
        core = "0"
    elif isinstance(t, Add):
        core = f"(+ {print_term(t.left)} {print_term(t.right)})"
    elif isinstance(t, Mul):
        core = f"(* {print_term(t.left)} {print_term(t.right)})"
    else:
        raise TypeError(f"not a term: {t!r}")
    return "(s " * depth + core + ")" * depth


_KEYWORD = {Or: "or", And: "and", Implies: "implies", Exists: "exists", Forall: "forall",
            ExistsBelow: "exists-below", ForallBelow: "forall-below", CQuant: "C", DQuant: "D"}


def print_formula(f: Formula, expand: bool = False) -> str:
    if expand:
        f = expand_bounded(f)
    if isinstance(f, Flip):
        return f"(flip {print_term(f.index)})"
    if isinstance(f, Eq):
        return f"(= {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, Not):
        return f"(not {print_formula(f.body)})"
    if isinstance(f, _BINARY):
        return f"({_KEYWORD[type(f)]} {print_formula(f.left)} {print_formula(f.right)})"
    if isinstance(f, (Exists, Forall)):
        return f"({_KEYWORD[type(f)]} {f.var} {print_formula(f.body)})"
    if isinstance(f, (ExistsBelow, ForallBelow)):
        return f"({_KEYWORD[type(f)]} {f.var} {print_term(f.bound)} {print_formula(f.body)})"
    if isinstance(f, _MEASURE):
        return f"({_KEYWORD[type(f)]} {print_term(f.num)} {print_term(f.den)} {print_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def to_text(ast: Ast, expand: bool = False) -> str:
    return print_term(ast) if isinstance(ast, Term) else print_formula(ast, expand)


# -------------------------------------------------------------- parsing


def _fail(msg, datum):
    raise SyntaxError_(msg, *position(datum))


def _ident(datum) -> str:
    if not isinstance(datum, Atom) or not _IDENT.match(datum):
        _fail(f"expected an identifier, got {datum!r}", datum)
    return str(datum)


def term_from_sexpr(d) -> Term:
    if isinstance(d, Atom):
        if d.isdigit():
            return numeral(int(d))
        return Var(_ident(d))
    if not d:
        _fail("empty list is not a term", d)
    head, args = d[0], d[1:]
    shapes = {"s": 1, "+": 2, "*": 2}
    if not isinstance(head, Atom) or head not in shapes:
        _fail(f"unknown term constructor {head!r}", head)
    if len(args) != shapes[head]:
        _fail(f"({head} ...) takes {shapes[head]} argument(s), got {len(args)}", d)
    parts = [term_from_sexpr(a) for a in args]
    if head == "s":
        return Succ(parts[0])
    return (Add if head == "+" else Mul)(*parts)


_FORMULA_SHAPES = {
    "flip": "t", "=": "tt", "not": "f", "or": "ff", "and": "ff", "implies": "ff",
    "exists": "xf", "forall": "xf", "exists-below": "xtf", "forall-below": "xtf",
    "C": "ttf", "D": "ttf",
}


def formula_from_sexpr(d) -> Formula:
    if isinstance(d, Atom) or not d:
        _fail("expected a formula", d)
    head, args = d[0], d[1:]
    if not isinstance(head, Atom) or head not in _FORMULA_SHAPES:
        _fail(f"unknown formula constructor {head!r}", head)
    shape = _FORMULA_SHAPES[head]
    if len(args) != len(shape):
        _fail(f"({head} ...) takes {len(shape)} argument(s), got {len(args)}", d)
    parts = []
    for kind, a in zip(shape, args):
        if kind == "t":
            parts.append(term_from_sexpr(a))
        elif kind == "f":
            parts.append(formula_from_sexpr(a))
        else:
            parts.append(_ident(a))
    ctor = {"flip": Flip, "=": Eq, "not": Not, "or": Or, "and": And, "implies": Implies,
            "exists": Exists, "forall": Forall, "exists-below": ExistsBelow,
            "forall-below": ForallBelow, "C": CQuant, "D": DQuant}[head]
    return ctor(*parts)


def parse(text: str, kind: str = "formula") -> Ast:
    datum = read_one(text)
    if kind == "term":
        return term_from_sexpr(datum)
    if kind == "formula":
        return formula_from_sexpr(datum)
    raise ValueError("kind must be 'term' or 'formula'")


def parse_formula(text: str) -> Formula:
    return parse(text, "formula")


def parse_term(text: str) -> Term:
    return parse(text, "term")
