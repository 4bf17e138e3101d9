import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mqpa import lang as L
from mqpa.errors import CapacityError
from mqpa.events import DyadicEvent
from mqpa.oracles import ExplicitOracle
from mqpa.semantics import Budget, ThreeValued, estimate_measure, eval_exact, eval_on_oracle
from strategies import bounded_formulas, small_numeral

P = L.parse


# -- independent reference: direct evaluation on an explicit bit string ---


def naive_truth(f, env, bits):
    """Two-valued truth on a finite bit string; no budget, bounded formulas only."""
    ev = lambda t: L.eval_term(t, env)
    if isinstance(f, L.Flip):
        return bits[ev(f.index)] == "1"
    if isinstance(f, L.Eq):
        return ev(f.left) == ev(f.right)
    if isinstance(f, L.Not):
        return not naive_truth(f.body, env, bits)
    if isinstance(f, L.And):
        return naive_truth(f.left, env, bits) and naive_truth(f.right, env, bits)
    if isinstance(f, L.Or):
        return naive_truth(f.left, env, bits) or naive_truth(f.right, env, bits)
    if isinstance(f, L.Implies):
        return (not naive_truth(f.left, env, bits)) or naive_truth(f.right, env, bits)
    if isinstance(f, L.ExistsBelow):
        return any(naive_truth(f.body, {**env, f.var: i}, bits) for i in range(ev(f.bound)))
    if isinstance(f, L.ForallBelow):
        return all(naive_truth(f.body, {**env, f.var: i}, bits) for i in range(ev(f.bound)))
    if isinstance(f, (L.CQuant, L.DQuant)):
        mu = naive_measure(f.body, env, len(bits))
        t, s = ev(f.num), ev(f.den)
        if isinstance(f, L.CQuant):
            return s > 0 and mu >= Fraction(t, s)
        return s == 0 or mu < Fraction(t, s)
    raise TypeError(f)


def naive_measure(f, env, n):
    hits = sum(naive_truth(f, env, "".join(p)) for p in itertools.product("01", repeat=n))
    return Fraction(hits, 2**n)


NBITS = 7  # strategies keep flip indices below 3 + 3 + 1


# -- examples ------------------------------------------------------------


def test_flip_zero():
    iv = eval_exact(P("(flip 0)"), {}, Budget(4))
    assert iv.is_exact and iv.lo_measure == Fraction(1, 2)


def test_exists_below_three():
    f = P("(exists-below x 3 (flip x))")
    iv = eval_exact(f)
    assert iv.is_exact and iv.lo_measure == Fraction(7, 8) == naive_measure(f, {}, 3)


@pytest.mark.parametrize("k", [1, 3, 8, 12])
def test_example_one_body_bounds(k):
    body = P("(exists x (flip x))")
    iv = eval_exact(body, {}, Budget(k))
    assert iv.lo_measure == 1 - Fraction(1, 2**k) and iv.hi_measure == 1
    outer = eval_exact(L.CQuant(L.numeral(1), L.numeral(1), body), {}, Budget(k))
    assert outer.lo.is_empty and outer.hi.is_full


def test_d_with_zero_denominator():
    iv = eval_exact(P("(D 1 0 (flip 0))"))
    assert iv.is_exact and iv.lo.is_full


def test_c_thresholds():
    assert eval_exact(P("(C 1 2 (flip 0))")).lo.is_full
    assert eval_exact(P("(C 3 4 (flip 0))")).hi.is_empty
    assert eval_exact(P("(C 1 0 (= 0 0))")).hi.is_empty
    assert eval_exact(P("(C 0 1 (= 0 1))")).lo.is_full


def test_capacity_error():
    with pytest.raises(CapacityError):
        eval_exact(P("(flip 30)"), {}, Budget(2, max_bits=24))


def test_oracle_examples():
    assert eval_on_oracle(P("(flip 2)"), {}, ExplicitOracle("001")) is ThreeValued.TRUE
    assert eval_on_oracle(P("(exists x (flip x))"), {}, ExplicitOracle(""), Budget(6)) is ThreeValued.UNKNOWN
    assert eval_on_oracle(P("(forall-below y 2 (flip y))"), {}, ExplicitOracle("11")) is ThreeValued.TRUE
    assert eval_on_oracle(P("(forall x (flip x))"), {}, ExplicitOracle("1101")) is ThreeValued.FALSE


def test_measure_quantifier_on_oracle_ignores_bits():
    f = P("(C 1 2 (flip 0))")
    for bits in ["0", "1"]:
        assert eval_on_oracle(f, {}, ExplicitOracle(bits)) is ThreeValued.TRUE


# -- properties ------------------------------------------------------------


@settings(max_examples=250, deadline=None)
@given(bounded_formulas(), small_numeral(4), small_numeral(4))
def test_c_d_duality(f, t, s):
    c = eval_exact(L.CQuant(t, s, f))
    d = eval_exact(L.DQuant(t, s, f))
    assert c == ~d


@settings(max_examples=200, deadline=None)
@given(bounded_formulas())
def test_bounded_completeness_and_agreement(f):
    iv = eval_exact(f)
    assert iv.is_exact
    assert iv.lo_measure == naive_measure(f, {}, NBITS)
    for i in range(2**NBITS):
        bits = format(i, f"0{NBITS}b")
        verdict = eval_on_oracle(f, {}, ExplicitOracle(bits, tail="error"))
        assert verdict is not ThreeValued.UNKNOWN
        assert (verdict is ThreeValued.TRUE) == iv.lo.contains(bits)


unbounded_samples = st.sampled_from([
    "(exists x (flip x))",
    "(forall x (flip x))",
    "(exists x (and (flip x) (flip (s x))))",
    "(or (flip 0) (forall y (not (flip (+ y 1)))))",
    "(not (exists x (and (= x 3) (flip x))))",
    "(forall x (exists y (flip (+ x y))))",
    "(C 1 2 (exists x (flip (* x 2))))",
])


@settings(max_examples=60, deadline=None)
@given(unbounded_samples, st.integers(1, 6), st.integers(0, 3))
def test_budget_monotonicity(text, k, extra):
    f = P(text)
    small = eval_exact(f, {}, Budget(k))
    large = eval_exact(f, {}, Budget(k + extra))
    assert small.lo.issubset(large.lo)
    assert large.hi.issubset(small.hi)


def test_example_one_tends_to_one():
    body = P("(exists x (flip x))")
    gaps = [1 - eval_exact(body, {}, Budget(k)).lo_measure for k in range(1, 16)]
    assert gaps == [Fraction(1, 2**k) for k in range(1, 16)]


# -- estimation ------------------------------------------------------------


def test_estimate_flip_zero():
    est = estimate_measure(P("(flip 0)"), {}, 100_000, seed=7)
    assert abs(est.p_true - Fraction(1, 2)) <= Fraction(1, 100)
    assert est.p_unknown == 0
    assert est.p_true + est.p_false + est.p_unknown == 1


def test_estimate_tautology():
    est = estimate_measure(P("(= 0 0)"), {}, 50)
    assert est.p_true == 1


def test_estimate_unbounded_tail():
    est = estimate_measure(P("(exists x (flip x))"), {}, 20_000, seed=3, budget=Budget(20))
    assert est.p_true >= 1 - Fraction(1, 2**20) - Fraction(1, 100)
    assert est.p_false == 0


def test_estimate_is_deterministic_and_worker_independent():
    f = P("(and (flip 0) (exists-below x 3 (flip (+ x 1))))")
    a = estimate_measure(f, {}, 3000, seed=11)
    b = estimate_measure(f, {}, 3000, seed=11, workers=3)
    assert a == b


def test_estimator_coverage_across_seeds():
    f = P("(exists-below x 2 (and (flip x) (flip (+ x 2))))")
    exact = eval_exact(f).lo_measure
    misses = 0
    for seed in range(50):
        est = estimate_measure(f, {}, 400, seed=seed)
        misses += abs(est.p_true - exact) > est.ci_halfwidth
    # delta = 0.05, so about 2.5 misses are expected; 8 would be very unlikely
    assert misses <= 8


def test_estimate_json():
    data = estimate_measure(P("(flip 0)"), {}, 10, seed=1).to_json()
    assert set(data) == {"p_true", "p_false", "p_unknown", "samples", "ci_halfwidth", "seed"}
    assert isinstance(data["p_true"], str) and "/" in data["p_true"]
