"""Evaluation of formulas: exact interval semantics, per-oracle truth, sampling.

``eval_exact`` maps a formula to an :class:`EventInterval` bracketing its
denotation in the cylinder algebra.  Unbounded quantifiers are cut off at
``Budget.quantifier_cap`` instances, which is the only source of
imprecision: a formula whose quantifiers are all bounded evaluates to an
exact interval (or raises :class:`CapacityError`).

``eval_on_oracle`` decides membership of a single oracle in a formula with
Kleene three-valued logic.  Measure quantifiers do not depend on the oracle
and are resolved through ``eval_exact``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import lang as L
from .events import (
    EMPTY,
    EXACT_EMPTY,
    EXACT_FULL,
    FULL,
    UNKNOWN,
    DyadicEvent,
    EventInterval,
    _of,
    default_max_bits,
    rational_to_json,
)
from .oracles import Oracle, SeededOracle

Env = L.Env


@dataclass(frozen=True)
class Budget:
    quantifier_cap: int = 8
    max_bits: int = field(default_factory=default_max_bits)

    def __post_init__(self):
        if self.quantifier_cap < 1:
            raise ValueError("quantifier_cap must be at least 1")
        if self.max_bits < 0:
            raise ValueError("max_bits must be non-negative")


class ThreeValued(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @classmethod
    def of(cls, value: Optional[bool]) -> "ThreeValued":
        if value is None:
            return cls.UNKNOWN
        return cls.TRUE if value else cls.FALSE

    def __bool__(self):
        raise TypeError("ThreeValued has no implicit truth value; compare against a member")


# ------------------------------------------------------ Kleene evaluation


def _kleene(f: L.Formula, env: dict, cap: int, flip: Callable[[int], int], measure) -> Optional[bool]:
    """True/False/None (unknown) under Kleene's strong three-valued logic."""
    ev = L.eval_term
    if isinstance(f, L.Eq):
        return ev(f.left, env) == ev(f.right, env)
    if isinstance(f, L.Flip):
        return flip(ev(f.index, env)) == 1
    if isinstance(f, L.And):
        a = _kleene(f.left, env, cap, flip, measure)
        if a is False:
            return False
        b = _kleene(f.right, env, cap, flip, measure)
        if b is False:
            return False
        return True if a and b else None
    if isinstance(f, L.Or):
        a = _kleene(f.left, env, cap, flip, measure)
        if a is True:
            return True
        b = _kleene(f.right, env, cap, flip, measure)
        if b is True:
            return True
        return False if a is False and b is False else None
    if isinstance(f, L.Implies):
        a = _kleene(f.left, env, cap, flip, measure)
        if a is False:
            return True
        b = _kleene(f.right, env, cap, flip, measure)
        if b is True:
            return True
        return False if a is True and b is False else None
    if isinstance(f, L.Not):
        a = _kleene(f.body, env, cap, flip, measure)
        return None if a is None else not a
    if isinstance(f, (L.ExistsBelow, L.Exists)):
        bounded = isinstance(f, L.ExistsBelow)
        n = ev(f.bound, env) if bounded else cap
        saw_unknown = not bounded
        inner = dict(env)
        for i in range(n):
            inner[f.var] = i
            r = _kleene(f.body, inner, cap, flip, measure)
            if r is True:
                return True
            if r is None:
                saw_unknown = True
        return None if saw_unknown else False
    if isinstance(f, (L.ForallBelow, L.Forall)):
        bounded = isinstance(f, L.ForallBelow)
        n = ev(f.bound, env) if bounded else cap
        saw_unknown = not bounded
        inner = dict(env)
        for i in range(n):
            inner[f.var] = i
            r = _kleene(f.body, inner, cap, flip, measure)
            if r is False:
                return False
            if r is None:
                saw_unknown = True
        return None if saw_unknown else True
    if isinstance(f, (L.CQuant, L.DQuant)):
        return measure(f, env)
    raise TypeError(f"not a formula: {f!r}")


def _no_flip(index: int) -> int:
    raise AssertionError("pure formula queried the oracle")


_FROM_KLEENE = {True: EXACT_FULL, False: EXACT_EMPTY, None: UNKNOWN}


# ------------------------------------------------------ exact semantics


def _threshold(f, env, body: EventInterval) -> EventInterval:
    """Resolve C / D given the interval of the body."""
    t = L.eval_term(f.num, env)
    s = L.eval_term(f.den, env)
    is_c = isinstance(f, L.CQuant)
    if s == 0:
        return EXACT_EMPTY if is_c else EXACT_FULL
    # mu >= t/s  <=>  mu * s >= t, with mu = count / 2**n
    lo, hi = body.lo, body.hi
    lo_reaches = lo.mask.bit_count() * s >= t << lo.prefix_length
    hi_reaches = hi.mask.bit_count() * s >= t << hi.prefix_length
    if lo_reaches:
        return EXACT_FULL if is_c else EXACT_EMPTY
    if not hi_reaches:
        return EXACT_EMPTY if is_c else EXACT_FULL
    return UNKNOWN


def _exact(f: L.Formula, env: dict, budget: Budget) -> EventInterval:
    if f.pure:
        return _FROM_KLEENE[_kleene(f, env, budget.quantifier_cap, _no_flip, None)]
    if isinstance(f, L.Flip):
        return EventInterval.exact(DyadicEvent.bit(L.eval_term(f.index, env), 1, budget.max_bits))
    if isinstance(f, L.And):
        a = _exact(f.left, env, budget)
        if a.hi.is_empty:
            return EXACT_EMPTY
        return a & _exact(f.right, env, budget)
    if isinstance(f, L.Or):
        a = _exact(f.left, env, budget)
        if a.lo.is_full:
            return EXACT_FULL
        return a | _exact(f.right, env, budget)
    if isinstance(f, L.Implies):
        a = _exact(f.left, env, budget)
        if a.hi.is_empty:
            return EXACT_FULL
        return ~a | _exact(f.right, env, budget)
    if isinstance(f, L.Not):
        return ~_exact(f.body, env, budget)
    if isinstance(f, (L.ExistsBelow, L.Exists)):
        bounded = isinstance(f, L.ExistsBelow)
        n = L.eval_term(f.bound, env) if bounded else budget.quantifier_cap
        lo, hi = EMPTY, EMPTY
        inner = dict(env)
        for i in range(n):
            inner[f.var] = i
            r = _exact(f.body, inner, budget)
            lo = lo | r.lo
            hi = hi | r.hi
            if lo.is_full:
                return EXACT_FULL
        return _of(lo, hi) if bounded else _of(lo, FULL)
    if isinstance(f, (L.ForallBelow, L.Forall)):
        bounded = isinstance(f, L.ForallBelow)
        n = L.eval_term(f.bound, env) if bounded else budget.quantifier_cap
        lo, hi = FULL, FULL
        inner = dict(env)
        for i in range(n):
            inner[f.var] = i
            r = _exact(f.body, inner, budget)
            lo = lo & r.lo
            hi = hi & r.hi
            if hi.is_empty:
                return EXACT_EMPTY
        return _of(lo, hi) if bounded else _of(EMPTY, hi)
    if isinstance(f, (L.CQuant, L.DQuant)):
        s = L.eval_term(f.den, env)
        if s == 0:
            return EXACT_EMPTY if isinstance(f, L.CQuant) else EXACT_FULL
        return _threshold(f, env, _exact(f.body, env, budget))
    raise TypeError(f"not a formula: {f!r}")


def eval_exact(f: L.Formula, env: Env | None = None, budget: Budget | None = None) -> EventInterval:
    """An interval ``(lo, hi)`` with ``lo ⊆ [[f]]_env ⊆ hi``."""
    return _exact(f, dict(env or {}), budget or Budget())


def interval_to_json(iv: EventInterval) -> dict:
    return {
        "lo_measure": rational_to_json(iv.lo_measure),
        "hi_measure": rational_to_json(iv.hi_measure),
        "exact": iv.is_exact,
        "lo": iv.lo.to_json(),
        "hi": iv.hi.to_json(),
    }


# ------------------------------------------------------ single oracle


class _MeasureCache:
    """Memoizes measure-quantified subformulas, which ignore the oracle."""

    def __init__(self, budget: Budget):
        self.budget = budget
        self.table: dict = {}

    def __call__(self, f: L.Formula, env: dict) -> Optional[bool]:
        key = (id(f), tuple(sorted((v, env[v]) for v in L.free_vars(f))))
        hit = self.table.get(key, self)
        if hit is self:
            iv = _exact(f, env, self.budget)
            hit = True if iv.lo.is_full else False if iv.hi.is_empty else None
            self.table[key] = (hit, f)  # keep f alive so id() stays unique
            return hit
        return hit[0]


def _truth(f, env, oracle: Oracle, budget: Budget, cache: _MeasureCache) -> Optional[bool]:
    return _kleene(f, env, budget.quantifier_cap, oracle.get, cache)


def eval_on_oracle(f: L.Formula, env: Env | None, oracle: Oracle, budget: Budget | None = None) -> ThreeValued:
    budget = budget or Budget()
    return ThreeValued.of(_truth(f, dict(env or {}), oracle, budget, _MeasureCache(budget)))


# ------------------------------------------------------ estimation

DEFAULT_DELTA = Fraction(1, 20)


def hoeffding_halfwidth(samples: int, delta=DEFAULT_DELTA) -> Fraction:
    """A rational upper bound on sqrt(ln(2/delta) / (2 n))."""
    if samples < 1:
        raise ValueError("need at least one sample")
    value = math.sqrt(math.log(2 / float(delta)) / (2 * samples))
    # float error is far below the added slack
    return Fraction(value) + Fraction(1, 10**12)


@dataclass(frozen=True)
class MeasureEstimate:
    p_true: Fraction
    p_false: Fraction
    p_unknown: Fraction
    samples: int
    ci_halfwidth: Fraction
    seed: int

    def to_json(self) -> dict:
        return {
            "p_true": rational_to_json(self.p_true),
            "p_false": rational_to_json(self.p_false),
            "p_unknown": rational_to_json(self.p_unknown),
            "samples": self.samples,
            "ci_halfwidth": rational_to_json(self.ci_halfwidth),
            "seed": self.seed,
        }


def _tally(f, env, seed: int, start: int, stop: int, budget: Budget) -> tuple[int, int, int]:
    cache = _MeasureCache(budget)
    counts = [0, 0, 0]
    for stream in range(start, stop):
        r = _truth(f, dict(env), SeededOracle(seed, stream), budget, cache)
        counts[0 if r is True else 1 if r is False else 2] += 1
    return counts[0], counts[1], counts[2]


def estimate_measure(
    f: L.Formula,
    env: Env | None = None,
    samples: int = 10_000,
    seed: int = 0xDA1A,
    budget: Budget | None = None,
    delta=DEFAULT_DELTA,
    workers: int = 1,
) -> MeasureEstimate:
    """Monte Carlo estimate of ``[[f]]``; sample ``i`` uses ``SeededOracle(seed, i)``.

    The result depends only on ``(f, env, samples, seed, budget)``; the
    number of worker processes affects speed alone.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    budget = budget or Budget()
    env = dict(env or {})
    if workers <= 1 or samples < 2 * workers:
        t, fl, u = _tally(f, env, seed, 0, samples, budget)
    else:
        step = -(-samples // workers)
        bounds = [(a, min(a + step, samples)) for a in range(0, samples, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_tally, *zip(*[(f, env, seed, a, b, budget) for a, b in bounds])))
        t, fl, u = (sum(p[i] for p in parts) for i in range(3))
    return MeasureEstimate(
        Fraction(t, samples),
        Fraction(fl, samples),
        Fraction(u, samples),
        samples,
        hoeffding_halfwidth(samples, delta),
        seed,
    )
