"""Modified realizability for measure-quantified formulas.

A realizer is a :mod:`~mqpa.pcf` term whose type is the formula's
translation ``A*``.  :func:`realizes` decides ``M, omega |- A`` clause by
clause with three-valued answers.  Atomic clauses, conjunction, witnesses
and bounded quantifiers are decided exactly.  Unbounded universals are only
refuted, never confirmed.  Implication is tested against a finite list of
candidate realizers of the antecedent.  For the measure quantifiers the set
``{omega' | M o, omega' |- A}`` is computed symbolically over its query tree
when that tree is small enough, and by seeded sampling otherwise.

Negation and disjunction are not primitive here; :func:`desugar` rewrites
them into implication and a tagged existential.  Bounded quantifiers keep
their sugar but are typed and checked as their first-order expansion
``exists w. S(x) + w = t`` used by :func:`mqpa.lang.expand_bounded`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import lang as L
from .errors import FragmentError, FuelExhausted, PCFTypeError
from .events import rational_to_json
from .oracles import NeedBit, Oracle, PartialOracle, SeededOracle
from .pcf import (
    BOOL,
    FALSE,
    NAT,
    O,
    ORACLE,
    TRUE,
    App,
    Arrow,
    BoolConst,
    If,
    IsZero,
    Lam,
    Numeral,
    Pair,
    PCFTerm,
    PCFType,
    PredT,
    Prod,
    Proj1,
    Proj2,
    Var,
    _Machine,
    apply,
    parse_pcf,
    print_pcf,
    query,
    typecheck,
)
from .semantics import Budget, ThreeValued, eval_exact, eval_on_oracle, hoeffding_halfwidth

# ------------------------------------------------------------ types


def desugar(f: L.Formula) -> L.Formula:
    """Rewrite negation and disjunction as defined connectives.

    ``not A`` becomes ``A -> 0 = S0`` and ``A or B`` becomes
    ``exists x. (x = 0 -> A) and (not x = 0 -> B)``.  Testing ``x = S0`` in
    the second conjunct instead would let any ``x >= 2`` satisfy both
    implications vacuously, making every disjunction valid.
    """
    if isinstance(f, (L.Flip, L.Eq)):
        return f
    if isinstance(f, L.Not):
        return L.Implies(desugar(f.body), L.FALSUM)
    if isinstance(f, L.Or):
        a, b = desugar(f.left), desugar(f.right)
        x = L.fresh_name("x", L.free_vars(a) | L.free_vars(b))
        is_zero = L.Eq(L.Var(x), L.ZERO)
        return L.Exists(x, L.And(L.Implies(is_zero, a), L.Implies(L.Implies(is_zero, L.FALSUM), b)))
    if isinstance(f, (L.And, L.Implies)):
        return type(f)(desugar(f.left), desugar(f.right))
    if isinstance(f, (L.Exists, L.Forall)):
        return type(f)(f.var, desugar(f.body))
    if isinstance(f, (L.ExistsBelow, L.ForallBelow)):
        return type(f)(f.var, f.bound, desugar(f.body))
    if isinstance(f, (L.CQuant, L.DQuant)):
        return type(f)(f.num, f.den, desugar(f.body))
    raise TypeError(f"not a formula: {f!r}")


def resugar(f: L.Formula) -> L.Formula:
    """Inverse of :func:`desugar` on its own output, up to logical equivalence.

    Semantic side conditions are evaluated on the resugared formula: the
    defined disjunction hides ``A or B`` under an unbounded existential that
    interval evaluation could only truncate.
    """
    if isinstance(f, L.Exists) and isinstance(f.body, L.And):
        first, second = f.body.left, f.body.right
        is_zero = L.Eq(L.Var(f.var), L.ZERO)
        if (
            isinstance(first, L.Implies)
            and first.left == is_zero
            and isinstance(second, L.Implies)
            and second.left == L.Implies(is_zero, L.FALSUM)
            and f.var not in L.free_vars(first.right) | L.free_vars(second.right)
        ):
            return L.Or(resugar(first.right), resugar(second.right))
    if isinstance(f, L.Implies) and f.right == L.FALSUM:
        return L.Not(resugar(f.left))
    if isinstance(f, (L.Flip, L.Eq)):
        return f
    if isinstance(f, (L.And, L.Implies, L.Or)):
        return type(f)(resugar(f.left), resugar(f.right))
    if isinstance(f, L.Not):
        return L.Not(resugar(f.body))
    if isinstance(f, (L.Exists, L.Forall)):
        return type(f)(f.var, resugar(f.body))
    if isinstance(f, (L.ExistsBelow, L.ForallBelow)):
        return type(f)(f.var, f.bound, resugar(f.body))
    return type(f)(f.num, f.den, resugar(f.body))


GUARD = Prod(NAT, BOOL)  # (exists w. S(x) + w = t)*


def translate_type(f: L.Formula) -> PCFType:
    """The realizer type ``A*``."""
    if isinstance(f, L.Flip):
        return NAT
    if isinstance(f, L.Eq):
        return BOOL
    if isinstance(f, L.And):
        return Prod(translate_type(f.left), translate_type(f.right))
    if isinstance(f, L.Implies):
        return Arrow(translate_type(f.left), translate_type(f.right))
    if isinstance(f, L.Forall):
        return Arrow(NAT, translate_type(f.body))
    if isinstance(f, L.Exists):
        return Prod(NAT, translate_type(f.body))
    if isinstance(f, L.ForallBelow):
        return Arrow(NAT, Arrow(GUARD, translate_type(f.body)))
    if isinstance(f, L.ExistsBelow):
        return Prod(NAT, Prod(GUARD, translate_type(f.body)))
    if isinstance(f, (L.CQuant, L.DQuant)):
        return Arrow(O, translate_type(f.body))
    if isinstance(f, (L.Not, L.Or)):
        raise FragmentError(f"{type(f).__name__.lower()} is a defined connective here; desugar first")
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------------ verdicts


@dataclass(frozen=True)
class Verdict:
    value: ThreeValued
    witness: tuple = ()
    reason: Optional[str] = None

    def to_json(self) -> dict:
        out = {"verdict": self.value.value, "witness": list(self.witness)}
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass(frozen=True)
class SetMeasure:
    """Bounds on the measure of a realizability set."""

    lo: Fraction
    hi: Fraction
    method: str  # "exact" or "sampled"

    def to_json(self) -> dict:
        return {"lo": rational_to_json(self.lo), "hi": rational_to_json(self.hi), "method": self.method}


def _and3(a: Optional[bool], b: Optional[bool]) -> Optional[bool]:
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def default_candidates(t: PCFType, width: int = 2) -> list[PCFTerm]:
    """A few closed normal forms of type ``t`` for testing implications."""
    if t == NAT:
        return [Numeral(i) for i in range(width + 1)]
    if t == BOOL:
        return [TRUE, FALSE]
    if isinstance(t, Prod):
        lefts, rights = default_candidates(t.left, width), default_candidates(t.right, width)
        return [Pair(a, b) for a, b in itertools.islice(itertools.product(lefts, rights), 2 * width)]
    return [Lam("_", t.arg, body) for body in default_candidates(t.result, width)[:width]]


def inhabitant(t: PCFType) -> PCFTerm:
    if t == NAT:
        return Numeral(0)
    if t == BOOL:
        return TRUE
    if isinstance(t, Prod):
        return Pair(inhabitant(t.left), inhabitant(t.right))
    return Lam("_", t.arg, inhabitant(t.result))


class _Checker:
    def __init__(self, fuel, budget, candidates, samples, seed, max_leaves):
        self.fuel = fuel
        self.budget = budget
        self.candidates = candidates
        self.samples = samples
        self.seed = seed
        self.max_leaves = max_leaves
        self.reasons: set[str] = set()

    # -- helpers

    def _nat(self, m: PCFTerm, omega: Oracle, log) -> Optional[int]:
        machine = _Machine(omega, self.fuel)
        try:
            value = machine.nat(m, {})
        except FuelExhausted:
            self.reasons.add("fuel")
            return None
        if log is not None:
            log.extend({"query": i, "bit": omega.get(i)} for i in machine.trace)
        return value

    def _candidates(self, t: PCFType) -> list[PCFTerm]:
        if callable(self.candidates):
            return list(self.candidates(t))
        if self.candidates is None:
            return default_candidates(t)
        return [p for p in self.candidates if typecheck(p) == t]

    def _side(self, f, env, omega) -> Optional[bool]:
        v = eval_on_oracle(resugar(f), env, omega, self.budget)
        return True if v is ThreeValued.TRUE else False if v is ThreeValued.FALSE else None

    # -- clauses

    def check(self, m: PCFTerm, omega: Oracle, f: L.Formula, env: dict, log) -> Optional[bool]:
        if isinstance(f, L.Flip):
            i = L.eval_term(f.index, env)
            bit = omega.get(i)
            if log is not None:
                log.append({"atom": i, "bit": bit})
            return bit == 1
        if isinstance(f, L.Eq):
            return L.eval_term(f.left, env) == L.eval_term(f.right, env)
        if isinstance(f, L.And):
            a = self.check(Proj1(m), omega, f.left, env, log)
            if a is False:
                return False
            return _and3(a, self.check(Proj2(m), omega, f.right, env, log))
        if isinstance(f, L.Implies):
            return self._implies(m, omega, f, env, log)
        if isinstance(f, L.Exists):
            k = self._nat(Proj1(m), omega, log)
            if k is None:
                return None
            if log is not None:
                log.append({"exists": f.var, "value": k})
            return self.check(Proj2(m), omega, f.body, {**env, f.var: k}, log)
        if isinstance(f, L.ExistsBelow):
            k = self._nat(Proj1(m), omega, log)
            if k is None:
                return None
            if log is not None:
                log.append({"exists": f.var, "value": k})
            if k >= L.eval_term(f.bound, env):
                return False
            # the guard exists w. S(k) + w = t
            w = self._nat(Proj1(Proj1(Proj2(m))), omega, log)
            if w is None:
                return None
            if k + 1 + w != L.eval_term(f.bound, env):
                return False
            return self.check(Proj2(Proj2(m)), omega, f.body, {**env, f.var: k}, log)
        if isinstance(f, L.Forall):
            for k in range(self.budget.quantifier_cap):
                r = self.check(App(m, Numeral(k)), omega, f.body, {**env, f.var: k}, log)
                if r is False:
                    if log is not None:
                        log.append({"counterexample": f.var, "value": k})
                    return False
            self.reasons.add("quantifier_cap")
            return None
        if isinstance(f, L.ForallBelow):
            return self._forall_below(m, omega, f, env, log)
        if isinstance(f, L.CQuant):
            return self._measure_clause(m, f, env, log, counting=True)
        if isinstance(f, L.DQuant):
            side = self._side(f, env, omega)
            if side is False:
                return False
            return _and3(side, self._measure_clause(m, f, env, log, counting=False))
        if isinstance(f, (L.Not, L.Or)):
            raise FragmentError(f"{type(f).__name__.lower()} is a defined connective here; desugar first")
        raise TypeError(f"not a formula: {f!r}")

    def _implies(self, m, omega, f, env, log):
        side = self._side(f, env, omega)
        if side is False:
            return False
        result = side
        for p in self._candidates(translate_type(f.left)):
            a = self.check(p, omega, f.left, env, None)
            if a is False:
                continue
            b = self.check(App(m, p), omega, f.right, env, None)
            if a is True and b is False:
                if log is not None:
                    log.append({"refuted_by": print_pcf(p)})
                return False
            if b is not True:
                result = None
        if log is not None and result is True:
            log.append({"implication": "not refuted by candidates"})
        return result

    def _forall_below(self, m, omega, f, env, log):
        n = L.eval_term(f.bound, env)
        result: Optional[bool] = True
        for k in range(n):
            inner = {**env, f.var: k}
            side = self._side(f.body, inner, omega)
            if side is False:
                return False
            result = _and3(result, side)
            # every realizer of the guard S(k) + w = n has w = n - k - 1
            for tag in (TRUE, FALSE):
                guard = Pair(Numeral(n - k - 1), tag)
                r = self.check(apply(m, Numeral(k), guard), omega, f.body, inner, log if tag is TRUE else None)
                if r is False:
                    if log is not None:
                        log.append({"counterexample": f.var, "value": k})
                    return False
                result = _and3(result, r)
        return result

    def _measure_clause(self, m, f, env, log, counting: bool):
        num, den = L.eval_term(f.num, env), L.eval_term(f.den, env)
        if den == 0:
            return False if counting else True
        threshold = Fraction(num, den)
        sm = self.measure(App(m, ORACLE), f.body, env)
        if log is not None:
            log.append({"measure": sm.to_json(), "threshold": rational_to_json(threshold)})
        if counting:
            if sm.lo >= threshold:
                return True
            if sm.hi < threshold:
                return False
        else:
            if sm.hi < threshold:
                return True
            if sm.lo >= threshold:
                return False
        self.reasons.add(f"measure undecided at {sm.method} bounds")
        return None

    def measure(self, m: PCFTerm, f: L.Formula, env: dict) -> SetMeasure:
        """Bounds on the measure of ``{omega' | m, omega' |- f}``."""
        lo, unresolved = Fraction(0), Fraction(0)
        stack = [PartialOracle()]
        leaves = 0
        while stack:
            omega = stack.pop()
            try:
                r = self.check(m, omega, f, env, None)
            except NeedBit as need:
                if need.oracle is not omega:
                    raise
                if need.index >= self.budget.max_bits or leaves + len(stack) >= self.max_leaves:
                    return self._sampled(m, f, env)
                stack.extend((omega.extended(need.index, 1), omega.extended(need.index, 0)))
                continue
            leaves += 1
            weight = Fraction(1, 2 ** len(omega.assignment))
            if r is True:
                lo += weight
            elif r is None:
                unresolved += weight
        return SetMeasure(lo, lo + unresolved, "exact")

    def _sampled(self, m, f, env) -> SetMeasure:
        counts = [0, 0, 0]
        for stream in range(self.samples):
            r = self.check(m, SeededOracle(self.seed, stream), f, env, None)
            counts[0 if r is True else 1 if r is False else 2] += 1
        h = hoeffding_halfwidth(self.samples)
        p_true = Fraction(counts[0], self.samples)
        p_unknown = Fraction(counts[2], self.samples)
        return SetMeasure(max(Fraction(0), p_true - h), min(Fraction(1), p_true + p_unknown + h), "sampled")


def _shrinks_to_one(checker: _Checker, m: PCFTerm, f: L.CQuant) -> bool:
    """Whether the unresolved part of a C^{1/1} set at least halves from half the fuel to the full fuel."""
    if L.eval_term(f.num, {}) != L.eval_term(f.den, {}) or L.eval_term(f.den, {}) == 0:
        return False
    widths = []
    for fuel in (checker.fuel // 2, checker.fuel):
        if fuel < 1:
            return False
        c = _Checker(fuel, checker.budget, checker.candidates, checker.samples, checker.seed, checker.max_leaves)
        sm = c.measure(App(m, ORACLE), f.body, {})
        if sm.method != "exact" or sm.hi != 1:
            return False
        widths.append(1 - sm.lo)
    return 0 < widths[1] <= widths[0] / 2


def realizes(
    m: PCFTerm,
    omega: Oracle,
    f: L.Formula,
    fuel: int = 2_000,
    budget: Budget | None = None,
    candidates: Sequence[PCFTerm] | None = None,
    exact_limit: bool = False,
    samples: int = 2_000,
    seed: int = 0x5EED,
    max_leaves: int = 4_096,
) -> Verdict:
    """Decide ``m, omega |- f`` for a closed formula ``f``.

    ``candidates`` are the antecedent realizers tried by implication
    clauses (default: a few small normal forms per type).  With
    ``exact_limit`` a top-level ``C^{1/1}`` whose unresolved set keeps
    halving as the fuel doubles is reported True.
    """
    budget = budget or Budget()
    if L.free_vars(f):
        raise ValueError(f"formula has free variables {sorted(L.free_vars(f))}")
    want = translate_type(f)
    got = typecheck(m)
    if got != want:
        raise PCFTypeError(f"realizer has type {got}, formula needs {want}")
    checker = _Checker(fuel, budget, candidates, samples, seed, max_leaves)
    log: list = []
    r = checker.check(m, omega, f, {}, log)
    if r is None and exact_limit and isinstance(f, L.CQuant) and _shrinks_to_one(checker, m, f):
        log.append({"exact_limit": "unresolved mass halves as the fuel doubles"})
        return Verdict(ThreeValued.TRUE, tuple(log))
    reason = None
    if r is None:
        reason = ", ".join(sorted(checker.reasons)) + f" (fuel={fuel}, quantifier_cap={budget.quantifier_cap})"
    return Verdict(ThreeValued.of(r), tuple(log), reason)


def realizability_measure(m: PCFTerm, f: L.Formula, fuel: int = 2_000, budget: Budget | None = None, **kw) -> SetMeasure:
    """Bounds on ``mu{omega' | m o, omega' |- f}`` for a realizer ``m : O -> f*``."""
    checker = _Checker(fuel, budget or Budget(), kw.get("candidates"), kw.get("samples", 2_000), kw.get("seed", 0x5EED), kw.get("max_leaves", 4_096))
    return checker.measure(App(m, ORACLE), f, {})


# ------------------------------------------------------------ synthesis


def _case(var: str, branches: list[PCFTerm]) -> PCFTerm:
    """``branches[var]`` by repeated zero tests; the last branch is the default."""
    out = branches[-1]
    for k in reversed(range(len(branches) - 1)):
        probe: PCFTerm = Var(var)
        for _ in range(k):
            probe = PredT(probe)
        out = If(IsZero(probe), branches[k], out)
    return out


def _decide(f: L.Formula, env: dict, budget: Budget) -> PCFTerm:
    """A boolean PCF term that is true exactly on the oracles in ``[[f]]``."""
    if isinstance(f, L.Flip):
        return query(L.eval_term(f.index, env))
    if isinstance(f, L.Eq):
        return BoolConst(L.eval_term(f.left, env) == L.eval_term(f.right, env))
    if isinstance(f, L.Not):
        return If(_decide(f.body, env, budget), FALSE, TRUE)
    if isinstance(f, L.And):
        return If(_decide(f.left, env, budget), _decide(f.right, env, budget), FALSE)
    if isinstance(f, L.Or):
        return If(_decide(f.left, env, budget), TRUE, _decide(f.right, env, budget))
    if isinstance(f, L.Implies):
        return If(_decide(f.left, env, budget), _decide(f.right, env, budget), TRUE)
    if isinstance(f, (L.ExistsBelow, L.ForallBelow)):
        n = L.eval_term(f.bound, env)
        parts = [_decide(f.body, {**env, f.var: k}, budget) for k in range(n)]
        exists = isinstance(f, L.ExistsBelow)
        out: PCFTerm = FALSE if exists else TRUE
        for p in reversed(parts):
            out = If(p, TRUE, out) if exists else If(p, out, FALSE)
        return out
    if isinstance(f, (L.CQuant, L.DQuant)):
        iv = eval_exact(f, env, budget)
        if not iv.is_exact:
            raise FragmentError("measure quantifier not decidable within budget")
        return BoolConst(iv.lo.is_full)
    raise FragmentError(f"cannot synthesize for {type(f).__name__}")


def synthesize(f: L.Formula, budget: Budget | None = None) -> PCFTerm:
    """A realizer of ``desugar(f)`` valid on every oracle in ``[[f]]``.

    ``f`` must be closed with only bounded quantifiers (possibly under
    negation and disjunction, which are desugared on the fly).
    """
    return _Synth(budget or Budget(quantifier_cap=64)).build(f, {})


class _Synth:
    def __init__(self, budget: Budget):
        self.budget = budget
        self.names = itertools.count()

    def fresh(self, base: str) -> str:
        return f"{base}{next(self.names)}"

    def build(self, f: L.Formula, env: dict) -> PCFTerm:
        if isinstance(f, L.Flip):
            return Numeral(0)
        if isinstance(f, L.Eq):
            return TRUE
        if isinstance(f, L.And):
            return Pair(self.build(f.left, env), self.build(f.right, env))
        if isinstance(f, L.Implies):
            return Lam(self.fresh("p"), translate_type(desugar(f.left)), self.build(f.right, env))
        if isinstance(f, L.Not):
            return Lam(self.fresh("p"), translate_type(desugar(f.body)), TRUE)
        if isinstance(f, L.Or):
            left = Lam(self.fresh("p"), BOOL, self.build(f.left, env))
            right = Lam(self.fresh("p"), Arrow(BOOL, BOOL), self.build(f.right, env))
            body = Pair(left, right)
            return If(_decide(f.left, env, self.budget), Pair(Numeral(0), body), Pair(Numeral(1), body))
        if isinstance(f, L.ExistsBelow):
            n = L.eval_term(f.bound, env)
            out = inhabitant(translate_type(desugar(f)))
            for k in reversed(range(n)):
                inner = {**env, f.var: k}
                wit = Pair(Numeral(k), Pair(Pair(Numeral(n - k - 1), TRUE), self.build(f.body, inner)))
                out = If(_decide(f.body, inner, self.budget), wit, out)
            return out
        if isinstance(f, L.ForallBelow):
            n = L.eval_term(f.bound, env)
            body_type = translate_type(desugar(f.body))
            branches = [self.build(f.body, {**env, f.var: k}) for k in range(n)] or [inhabitant(body_type)]
            x = self.fresh("x")
            return Lam(x, NAT, Lam(self.fresh("g"), GUARD, _case(x, branches)))
        if isinstance(f, (L.CQuant, L.DQuant)):
            return Lam("o", O, self.build(f.body, env))
        raise FragmentError(f"cannot synthesize for {type(f).__name__}")


# ------------------------------------------------------------ reference realizers

#: searches for the first true bit k and returns <k, k>
FIRST_TRUE_BIT = parse_pcf(
    "(lam o O (app (fix (lam f (-> nat (* nat nat)) (lam x nat"
    " (if (iszero (o x)) (app f (succ x)) (pair x x))))) 0))"
)
ALMOST_SURELY_A_TRUE_BIT = L.CQuant(L.numeral(1), L.numeral(1), L.Exists("x", L.Flip(L.Var("x"))))

#: lam x o y z. o(y), as written; its result is a boolean
PREFIX_BITS_LITERAL = parse_pcf("(lam x nat (lam o O (lam y nat (lam z (* nat bool) (o y)))))")
#: the same realizer with the bit read as a numeral, matching FLIP* = nat
PREFIX_BITS = parse_pcf("(lam x nat (lam o O (lam y nat (lam z (* nat bool) (if (o y) 1 0)))))")


def prefix_bits_formula(x: int) -> L.Formula:
    """``C^{1/2^x} forall y < x. FLIP(y)``: the first x bits are all true."""
    return L.CQuant(L.numeral(1), L.power_term(2, x), L.ForallBelow("y", L.numeral(x), L.Flip(L.Var("y"))))
