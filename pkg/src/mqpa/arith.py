"""Arithmetization of OR programs.

:func:`arithmetize` turns an OR program ``p`` of arity ``m`` into a formula
``F(x1, ..., xm, y)`` whose denotation is the set of oracles on which
``p(x1, ..., xm)`` returns ``y``; its measure is therefore the flat random
function of ``p``.  Clauses:

* zero ``y = 0``, successor ``S x1 = y``, projection ``xi = y``
* query ``(y = S0 ∧ FLIP x1) ∨ (y = 0 ∧ ¬FLIP x1)``
* composition ``∃v1..vn (F_g1(x, v1) ∧ ... ∧ F_gn(x, vn) ∧ F_h(v, y))``
* primitive recursion and minimization quantify a computation history
  coded by Gödel's β-function; inner witnesses are bounded by one extra
  collection variable so the result stays Σ⁰₁.

Exact evaluation of these formulas is generate-and-test over every
existential witness.  :func:`normalize` applies logically valid rewrites
(one-point rule, miniscoping, constant folding) that make it tractable
without changing the denotation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import coding
from . import lang as L
from .events import rational_to_json
from .orfun import (
    Comp,
    Minim,
    Native,
    ORProgram,
    PrimRec,
    Proj,
    Query,
    Succ,
    Zero,
    aux_event,
    flatten,
    print_or,
)
from .semantics import Budget, eval_exact

V = L.Var
ONE = L.numeral(1)


class _Names:
    def __init__(self, reserved: Iterable[str]):
        self.used = set(reserved)
        self.counter = itertools.count(1)

    def fresh(self, base: str) -> str:
        while True:
            name = f"{base}{next(self.counter)}"
            if name not in self.used:
                self.used.add(name)
                return name


def _native_graph(name: str, xs: Sequence[L.Term], y: L.Term) -> L.Formula:
    if name == "add":
        return L.Eq(L.Add(xs[0], xs[1]), y)
    if name == "pair":
        return coding.pair_graph(xs[0], xs[1], y)
    if name == "fst":
        return coding.fst_graph(xs[0], y)
    if name == "snd":
        return coding.snd_graph(xs[0], y)
    raise ValueError(f"no graph formula for native {name!r}")


def _bound_all(f: L.Formula, bound: L.Term) -> L.Formula:
    """Replace each unbounded ∃ (all positive here) by ∃ below ``bound``."""
    if isinstance(f, L.Exists):
        return L.ExistsBelow(f.var, bound, _bound_all(f.body, bound))
    if isinstance(f, (L.And, L.Or)):
        return type(f)(_bound_all(f.left, bound), _bound_all(f.right, bound))
    if isinstance(f, L.ExistsBelow):
        return L.ExistsBelow(f.var, f.bound, _bound_all(f.body, bound))
    if isinstance(f, L.ForallBelow):
        return L.ForallBelow(f.var, f.bound, _bound_all(f.body, bound))
    return f


def _has_unbounded(f: L.Formula) -> bool:
    if isinstance(f, (L.Exists, L.Forall)):
        return True
    return any(_has_unbounded(c) for c in f.children())


def _collect(inner: L.Formula, names: _Names, build) -> L.Formula:
    """``∃B. build(inner with witnesses below B)`` when ``inner`` needs it."""
    if not _has_unbounded(inner):
        return build(lambda g: g)
    b = names.fresh("B")
    return L.Exists(b, build(lambda g: _bound_all(g, V(b))))


class _Arithmetizer:
    def __init__(self, names: _Names):
        self.names = names

    def __call__(self, p: ORProgram, xs: Sequence[L.Term], y: L.Term) -> L.Formula:
        if isinstance(p, Zero):
            return L.Eq(y, L.ZERO)
        if isinstance(p, Succ):
            return L.Eq(L.Succ(xs[0]), y)
        if isinstance(p, Proj):
            return L.Eq(xs[p.i - 1], y)
        if isinstance(p, Query):
            x = xs[0]
            return L.Or(
                L.And(L.Eq(y, ONE), L.Flip(x)),
                L.And(L.Eq(y, L.ZERO), L.Not(L.Flip(x))),
            )
        if isinstance(p, Native):
            return _native_graph(p.name, xs, y)
        if isinstance(p, Comp):
            vs = [self.names.fresh("v") for _ in p.gs]
            parts = [self(g, xs, V(v)) for g, v in zip(p.gs, vs)]
            parts.append(self(p.h, [V(v) for v in vs], y))
            out = L.conj(parts)
            for v in reversed(vs):
                out = L.Exists(v, out)
            return out
        if isinstance(p, PrimRec):
            return self._primrec(p, xs, y)
        if isinstance(p, Minim):
            return self._minim(p, xs, y)
        raise TypeError(f"not an OR program: {p!r}")

    def _primrec(self, p: PrimRec, xs, y) -> L.Formula:
        # f(0, rest) = h(rest); f(n+1, rest) = g(f(n, rest), n, rest)
        n, rest = xs[0], list(xs[1:])
        c, d = self.names.fresh("c"), self.names.fresh("d")
        i, r0, a, b = (self.names.fresh(s) for s in ("i", "r", "a", "b"))
        C, D = V(c), V(d)
        start = self(p.h, rest, V(r0))
        step = self(p.g, [V(a), V(i)] + rest, V(b))

        def build(bounded):
            base = L.ExistsBelow(r0, L.Succ(C), L.And(coding.beta_graph(C, D, L.ZERO, V(r0)), bounded(start)))
            body = L.conj([
                coding.beta_graph(C, D, V(i), V(a)),
                coding.beta_graph(C, D, L.Succ(V(i)), V(b)),
                bounded(step),
            ])
            steps = L.ForallBelow(i, n, L.ExistsBelow(a, L.Succ(C), L.ExistsBelow(b, L.Succ(C), body)))
            return L.conj([coding.beta_graph(C, D, n, y), base, steps])

        return L.Exists(c, L.Exists(d, _collect(L.And(start, step), self.names, build)))

    def _minim(self, p: Minim, xs, y) -> L.Formula:
        # least z with g(xs, z) = 0; every earlier candidate yields some S(v)
        z, v = self.names.fresh("z"), self.names.fresh("v")
        hit = self(p.g, list(xs) + [y], L.ZERO)
        miss = self(p.g, list(xs) + [V(z)], L.Succ(V(v)))
        # v sits under the bounded ∀, so it always needs the collection bound
        bname = self.names.fresh("B")
        B = V(bname)
        return L.Exists(
            bname,
            L.And(hit, L.ForallBelow(z, y, L.ExistsBelow(v, B, _bound_all(miss, B)))),
        )


@dataclass(frozen=True)
class ArithResult:
    formula: L.Formula
    program: ORProgram
    inputs: tuple[str, ...]
    output: str = "y"
    sigma01: bool = False
    _normal: list = field(default_factory=list, repr=False, compare=False)

    @property
    def arity(self) -> int:
        return len(self.inputs)

    @property
    def normalized(self) -> L.Formula:
        if not self._normal:
            self._normal.append(normalize(self.formula))
        return self._normal[0]

    def env(self, args: Sequence[int], y: int) -> dict:
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} argument(s), got {len(args)}")
        return {**dict(zip(self.inputs, args)), self.output: y}

    def instantiate(self, args: Sequence[int], y: int) -> L.Formula:
        f = self.formula
        for var, value in self.env(args, y).items():
            f = L.substitute(f, var, value)
        return f


def arithmetize(p: ORProgram, arity: Optional[int] = None) -> ArithResult:
    """The formula ``F_p(x1, ..., xm, y)``.

    ``arity`` is only needed for arity-polymorphic programs such as a bare
    ``(zero)``.
    """
    m = p.arity if p.arity is not None else arity
    if m is None:
        raise ValueError("program is arity-polymorphic; pass arity=")
    if p.arity is not None and arity is not None and arity != p.arity:
        raise ValueError(f"program has arity {p.arity}, not {arity}")
    inputs = tuple(f"x{i}" for i in range(1, m + 1))
    names = _Names(inputs + ("y",))
    f = _Arithmetizer(names)(p, [V(x) for x in inputs], V("y"))
    return ArithResult(f, p, inputs, "y", is_sigma01(f))


# ------------------------------------------------------------ Σ⁰₁ shape


def is_sigma01(f: L.Formula) -> bool:
    """Does ``f`` prenex to an ∃-block over a bounded, measure-free matrix?

    Unbounded quantifiers must be existential after accounting for polarity,
    and may not sit under a bounded universal (that would need collection).
    """

    def ok(g: L.Formula, positive: bool, under_forall: bool) -> bool:
        if isinstance(g, (L.Flip, L.Eq)):
            return True
        if isinstance(g, (L.CQuant, L.DQuant)):
            return False
        if isinstance(g, L.Not):
            return ok(g.body, not positive, under_forall)
        if isinstance(g, (L.And, L.Or)):
            return ok(g.left, positive, under_forall) and ok(g.right, positive, under_forall)
        if isinstance(g, L.Implies):
            return ok(g.left, not positive, under_forall) and ok(g.right, positive, under_forall)
        if isinstance(g, (L.Exists, L.Forall)):
            existential = isinstance(g, L.Exists) == positive
            return existential and not under_forall and ok(g.body, positive, under_forall)
        if isinstance(g, (L.ExistsBelow, L.ForallBelow)):
            universal = isinstance(g, L.ForallBelow) == positive
            return ok(g.body, positive, under_forall or universal)
        raise TypeError(f"not a formula: {g!r}")

    return ok(f, True, False)


# ------------------------------------------------------------ normalization


def _closed(t: L.Term) -> bool:
    return not L.term_vars(t)


def _conjuncts(f: L.Formula) -> list[L.Formula]:
    if isinstance(f, L.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _disjuncts(f: L.Formula) -> list[L.Formula]:
    if isinstance(f, L.Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    return [f]


def _definition(part: L.Formula, var: str) -> Optional[L.Term]:
    """``t`` when ``part`` reads ``var = t`` (either way round) with var ∉ t."""
    if not isinstance(part, L.Eq):
        return None
    for lhs, rhs in ((part.left, part.right), (part.right, part.left)):
        if lhs == V(var) and var not in L.term_vars(rhs):
            return rhs
    return None


def _mk_and(parts: list[L.Formula]) -> L.Formula:
    flat = []
    for p in parts:
        for q in _conjuncts(p):
            if q == L.FALSUM:
                return L.FALSUM
            if q != L.VERUM:
                flat.append(q)
    return L.conj(flat)


def _mk_or(parts: list[L.Formula]) -> L.Formula:
    flat = []
    for p in parts:
        for q in _disjuncts(p):
            if q == L.VERUM:
                return L.VERUM
            if q != L.FALSUM:
                flat.append(q)
    return L.disj(flat)


def _fold_eq(f: L.Eq) -> L.Formula:
    if _closed(f.left) and _closed(f.right):
        return L.VERUM if L.eval_term(f.left, {}) == L.eval_term(f.right, {}) else L.FALSUM
    if f.left == f.right:
        return L.VERUM
    return f


def _exists_block(vars_: list[str], parts: list[L.Formula]) -> L.Formula:
    """Normalize ``∃vars (∧ parts)``: eliminate defined variables, then miniscope."""
    vars_ = list(vars_)
    parts = list(parts)
    # lift nested unbounded existentials into this block
    changed = True
    while changed:
        changed = False
        for k, part in enumerate(parts):
            if isinstance(part, L.Exists):
                var, body = part.var, part.body
                others = parts[:k] + parts[k + 1:]
                taken = set(vars_) | set().union(*(L.free_vars(o) for o in others)) if others else set(vars_)
                if var in taken:
                    new = L.fresh_name(var, taken | L.free_vars(body))
                    body = L.subst(body, var, V(new))
                    var = new
                vars_.append(var)
                parts = parts[:k] + _conjuncts(body) + parts[k + 1:]
                changed = True
                break
    # one-point rule
    progress = True
    while progress:
        progress = False
        for var in vars_:
            for k, part in enumerate(parts):
                t = _definition(part, var)
                if t is None:
                    continue
                rest = parts[:k] + parts[k + 1:]
                parts = [_normalize(L.subst(q, var, t)) for q in rest]
                parts = _conjuncts(_mk_and(parts))
                vars_.remove(var)
                progress = True
                break
            if progress:
                break
    if L.FALSUM in parts:
        return L.FALSUM
    vars_ = [v for v in vars_ if any(v in L.free_vars(q) for q in parts)]
    return _miniscope(vars_, parts)


def _miniscope(vars_: list[str], parts: list[L.Formula]) -> L.Formula:
    """Introduce each ∃ just before the first conjunct that mentions it."""
    if not vars_:
        return _mk_and(parts)
    for k, part in enumerate(parts):
        here = [v for v in vars_ if v in L.free_vars(part)]
        if here:
            later = [v for v in vars_ if v not in here]
            inner = _mk_and([part, _miniscope(later, parts[k + 1:])])
            for v in reversed(here):
                inner = L.Exists(v, inner)
            return _mk_and(parts[:k] + [inner])
    return _mk_and(parts)


def _normalize(f: L.Formula) -> L.Formula:
    if isinstance(f, L.Flip):
        return f
    if isinstance(f, L.Eq):
        return _fold_eq(f)
    if isinstance(f, L.Not):
        b = _normalize(f.body)
        if b == L.VERUM:
            return L.FALSUM
        if b == L.FALSUM:
            return L.VERUM
        if isinstance(b, L.Not):
            return b.body
        return L.Not(b)
    if isinstance(f, L.And):
        return _mk_and([_normalize(q) for q in _conjuncts(f)])
    if isinstance(f, L.Or):
        return _mk_or([_normalize(q) for q in _disjuncts(f)])
    if isinstance(f, L.Implies):
        a, b = _normalize(f.left), _normalize(f.right)
        if a == L.FALSUM or b == L.VERUM:
            return L.VERUM
        if a == L.VERUM:
            return b
        return L.Implies(a, b)
    if isinstance(f, L.Exists):
        return _exists_block([f.var], _conjuncts(_normalize(f.body)))
    if isinstance(f, L.ExistsBelow):
        body = _normalize(f.body)
        parts = _conjuncts(body)
        for k, part in enumerate(parts):
            t = _definition(part, f.var)
            if t is not None and len(parts) == 1:
                # already the canonical ``t < bound``
                if _closed(t) and _closed(f.bound):
                    return L.VERUM if L.eval_term(t, {}) < L.eval_term(f.bound, {}) else L.FALSUM
                return L.ExistsBelow(f.var, f.bound, body)
            if t is not None:
                rest = [L.subst(q, f.var, t) for q in parts[:k] + parts[k + 1:]]
                return _normalize(_mk_and([L.less_than(t, f.bound)] + rest))
        if body == L.FALSUM:
            return L.FALSUM
        return L.ExistsBelow(f.var, f.bound, body)
    if isinstance(f, L.ForallBelow):
        body = _normalize(f.body)
        if body == L.VERUM:
            return L.VERUM
        return L.ForallBelow(f.var, f.bound, body)
    if isinstance(f, L.Forall):
        return L.Forall(f.var, _normalize(f.body))
    if isinstance(f, (L.CQuant, L.DQuant)):
        return type(f)(f.num, f.den, _normalize(f.body))
    raise TypeError(f"not a formula: {f!r}")


def normalize(f: L.Formula) -> L.Formula:
    """An equivalent formula that exact evaluation handles efficiently.

    Rewrites used: ``∃v (v = t ∧ φ) ≡ φ[t/v]`` (and its bounded form),
    pulling existentials out of and pushing them into conjunctions, and
    evaluation of closed equations.  Every rewrite is a first-order
    equivalence, so ``[[normalize(f)]] = [[f]]``.
    """
    return _normalize(f)


# ------------------------------------------------------------ verification

EXACT_MATCH = "Exact-Match"
BRACKETED = "Bracketed"
MISMATCH = "Mismatch"


@dataclass(frozen=True)
class ArithReport:
    args: tuple[int, ...]
    y: int
    fuel: int
    weight: Fraction
    residual: Fraction
    lo: Fraction
    hi: Fraction
    events_equal: bool
    verdict: str

    @property
    def gap(self) -> Fraction:
        """Width of the range both sides allow for the true probability."""
        lower = max(self.weight, self.lo)
        upper = min(self.weight + self.residual, self.hi)
        return max(upper - lower, Fraction(0))

    def to_json(self) -> dict:
        return {
            "args": list(self.args),
            "y": self.y,
            "fuel": self.fuel,
            "flatten": {"weight": rational_to_json(self.weight), "residual": rational_to_json(self.residual)},
            "formula": {"lo_measure": rational_to_json(self.lo), "hi_measure": rational_to_json(self.hi)},
            "events_equal": self.events_equal,
            "verdict": self.verdict,
            "gap": rational_to_json(self.gap),
        }


def _verdict(weight, residual, lo, hi, events_equal) -> str:
    if lo > weight + residual or hi < weight:
        return MISMATCH
    if residual == 0 and lo == weight and events_equal:
        return EXACT_MATCH
    return BRACKETED


def verify_arithmetization(
    p: ORProgram | ArithResult,
    args: Sequence[int],
    y: int,
    fuel: int = 1000,
    budget: Budget | None = None,
) -> ArithReport:
    """Compare ``[[F_p(args, y)]]`` with the flattened program at ``(args, y)``.

    Exact-Match needs a fuel-complete program side, and the formula's lower
    event equal to the program's event for ``y``; Mismatch means the two
    intervals of admissible probabilities are disjoint.
    """
    budget = budget or Budget()
    result = p if isinstance(p, ArithResult) else arithmetize(p, len(args))
    program = result.program
    dist = flatten(program, args, fuel)
    weight = dist[y]
    iv = eval_exact(result.normalized, result.env(args, y), budget)
    program_event = aux_event(program, args, y, fuel, budget.max_bits).lo
    events_equal = iv.lo == program_event
    verdict = _verdict(weight, dist.residual, iv.lo_measure, iv.hi_measure, events_equal)
    return ArithReport(tuple(args), y, fuel, weight, dist.residual, iv.lo_measure, iv.hi_measure, events_equal, verdict)


def verify_table(
    p: ORProgram,
    arg_range: Iterable[int],
    y_range: Iterable[int],
    fuel: int = 1000,
    budget: Budget | None = None,
    arity: Optional[int] = None,
) -> list[ArithReport]:
    """Verify every ``(args, y)`` with each argument and ``y`` drawn from the ranges."""
    result = arithmetize(p, arity)
    arg_values = list(arg_range)
    ys = list(y_range)
    return [
        verify_arithmetization(result, list(args), y, fuel, budget)
        for args in itertools.product(arg_values, repeat=result.arity)
        for y in ys
    ]


def table_to_json(p: ORProgram, reports: Sequence[ArithReport]) -> dict:
    counts = {v: sum(r.verdict == v for r in reports) for v in (EXACT_MATCH, BRACKETED, MISMATCH)}
    return {
        "program": print_or(p),
        "instances": [r.to_json() for r in reports],
        "verdicts": counts,
        "ok": counts[MISMATCH] == 0,
    }
