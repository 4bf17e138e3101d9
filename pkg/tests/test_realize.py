import itertools
from fractions import Fraction as Q

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from mqpa import lang as L
from mqpa.errors import EvaluationError, FragmentError, FuelExhausted, PCFTypeError, SyntaxError_
from mqpa.lang import parse
from mqpa.oracles import ExplicitOracle, SeededOracle
from mqpa.pcf import (
    BOOL,
    NAT,
    O,
    ORACLE,
    TRUE,
    App,
    Arrow,
    Fix,
    Lam,
    Numeral,
    Pair,
    Prod,
    Var,
    eval_pcf,
    parse_pcf,
    parse_type,
    print_pcf,
    query,
    trace_event,
    trace_leaves,
    traced_eval,
    typecheck,
)
from mqpa.realize import (
    ALMOST_SURELY_A_TRUE_BIT,
    FIRST_TRUE_BIT,
    PREFIX_BITS,
    PREFIX_BITS_LITERAL,
    _decide,
    desugar,
    prefix_bits_formula,
    realizability_measure,
    realizes,
    resugar,
    synthesize,
    translate_type,
)
from mqpa.semantics import Budget, ThreeValued, eval_exact, eval_on_oracle
from strategies import bounded_formulas, formulas

T, F, U = ThreeValued.TRUE, ThreeValued.FALSE, ThreeValued.UNKNOWN
SLOW = settings(max_examples=100, deadline=None, suppress_health_check=list(HealthCheck))


def prefixes(n):
    return ("".join(bits) for bits in itertools.product("01", repeat=n))


# -- typing --------------------------------------------------------------------


def test_typecheck_examples():
    assert typecheck(parse_pcf("(lam o O (lam x nat (o x)))")) == Arrow(O, Arrow(NAT, BOOL))
    assert typecheck(FIRST_TRUE_BIT) == Arrow(O, Prod(NAT, NAT)) == translate_type(ALMOST_SURELY_A_TRUE_BIT)
    with pytest.raises(PCFTypeError):
        typecheck(App(Numeral(3), Numeral(4)))


def test_type_errors_carry_a_path():
    with pytest.raises(PCFTypeError) as info:
        typecheck(parse_pcf("(lam x nat (if x 1 2))"))
    assert info.value.path == ("lam", "if")
    for bad in ["(p1 3)", "(succ true)", "(if true 1 false)", "(fix (lam x nat true))", "y"]:
        with pytest.raises(PCFTypeError):
            typecheck(parse_pcf(bad))


def test_translate_type_examples():
    assert translate_type(parse("(flip 0)")) == NAT
    assert translate_type(ALMOST_SURELY_A_TRUE_BIT) == Arrow(O, Prod(NAT, NAT))
    assert translate_type(parse("(forall x (= x x))")) == Arrow(NAT, BOOL)
    with pytest.raises(FragmentError):
        translate_type(parse("(not (flip 0))"))
    with pytest.raises(FragmentError):
        translate_type(parse("(or (flip 0) (flip 1))"))


def _table(f):
    # the translation rows, applied to the fully expanded formula
    if isinstance(f, L.Flip):
        return "nat"
    if isinstance(f, L.Eq):
        return "bool"
    if isinstance(f, L.And):
        return f"(* {_table(f.left)} {_table(f.right)})"
    if isinstance(f, L.Implies):
        return f"(-> {_table(f.left)} {_table(f.right)})"
    if isinstance(f, L.Forall):
        return f"(-> nat {_table(f.body)})"
    if isinstance(f, L.Exists):
        return f"(* nat {_table(f.body)})"
    if isinstance(f, (L.CQuant, L.DQuant)):
        return f"(-> (-> nat bool) {_table(f.body)})"
    raise AssertionError(f)


@SLOW
@given(formulas())
def test_type_table_matches_independent_translation(f):
    a = desugar(f)
    assert translate_type(a) == parse_type(_table(L.expand_bounded(a)))


# -- evaluation ------------------------------------------------------------------


def test_eval_examples():
    value, trace = traced_eval(App(FIRST_TRUE_BIT, ORACLE), ExplicitOracle("001"))
    assert value == Pair(Numeral(2), Numeral(2)) and trace == [0, 1, 2]
    assert eval_pcf(App(Lam("x", NAT, Var("x")), Numeral(5)), ExplicitOracle()) == Numeral(5)
    with pytest.raises(FuelExhausted):
        eval_pcf(Fix(Lam("f", NAT, Var("f"))), ExplicitOracle(), fuel=500)


def test_call_by_name_skips_unused_arguments():
    loop = Fix(Lam("f", NAT, Var("f")))
    const = Lam("x", NAT, Numeral(7))
    assert eval_pcf(App(const, loop), ExplicitOracle(), fuel=50) == Numeral(7)
    assert eval_pcf(parse_pcf("(p1 (pair 1 (o 9)))"), ExplicitOracle("", tail="error")) == Numeral(1)


def test_iszero_of_a_bit():
    assert eval_pcf(parse_pcf("(iszero (o 0))"), ExplicitOracle("0")) == TRUE
    assert eval_pcf(parse_pcf("(pred 0)"), ExplicitOracle()) == Numeral(0)


def test_ill_typed_terms_get_stuck():
    with pytest.raises(EvaluationError):
        eval_pcf(App(Numeral(1), Numeral(2)), ExplicitOracle())


def test_syntax_round_trip_and_errors():
    assert parse_pcf(print_pcf(FIRST_TRUE_BIT)) == FIRST_TRUE_BIT
    assert parse_pcf(print_pcf(PREFIX_BITS)) == PREFIX_BITS
    assert parse_pcf("(app (lam x nat x) 1 )") == App(Lam("x", NAT, Var("x")), Numeral(1))
    for bad in ["(lam x nat)", "(pair 1)", "(if 1 2)", "(foo 1)", "(lam x int x)", "()", "(o 1 2)"]:
        with pytest.raises(SyntaxError_):
            parse_pcf(bad)


# -- trace events -------------------------------------------------------------------

TRACED = {
    "bit0": query(0),
    "search": App(FIRST_TRUE_BIT, ORACLE),
    "branch": parse_pcf("(if (o 0) (o 2) (iszero (o 1)))"),
    "count": parse_pcf("(if (o 0) (if (o 1) 2 1) (if (o 1) 1 0))"),
}


def test_trace_event_examples():
    iv = trace_event(query(0), TRUE)
    assert iv.is_exact and iv.lo_measure == Q(1, 2) and iv.lo.contains("1")
    assert trace_event(Numeral(7), Numeral(7)).lo.is_full
    assert trace_event(Numeral(7), Numeral(8)).hi.is_empty


def test_trace_event_brackets_divergence():
    iv = trace_event(TRACED["search"], Pair(Numeral(1), Numeral(1)), fuel=30)
    assert iv.lo_measure == Q(1, 4)
    assert iv.hi_measure > iv.lo_measure  # the all-zero prefix is still running


@pytest.mark.parametrize("name", sorted(TRACED))
def test_trace_event_lo_converges_on_every_prefix(name):
    m = TRACED[name]
    leaves = list(trace_leaves(m, fuel=30))
    depth = max((max(a, default=-1) + 1 for a, _ in leaves), default=0)
    outputs = {v for _, v in leaves if v is not None}
    for n in outputs:
        iv = trace_event(m, n, fuel=30)
        for p in prefixes(depth):
            if iv.lo.contains(p):
                assert eval_pcf(m, ExplicitOracle(p, tail="error"), fuel=30) == n
            elif not iv.hi.contains(p):
                assert eval_pcf(m, ExplicitOracle(p, tail="error"), fuel=30) != n


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(TRACED)), st.integers(0, 2**32))
def test_result_depends_only_on_the_trace(name, seed):
    m = TRACED[name]
    omega = SeededOracle(seed)
    try:
        value, trace = traced_eval(m, omega, fuel=60)
    except FuelExhausted:
        return
    width = max(trace, default=-1) + 1
    replay = "".join(str(omega.get(i)) if i in trace else str(1 - omega.get(i)) for i in range(width))
    assert traced_eval(m, ExplicitOracle(replay, tail="error"), fuel=60) == (value, trace)
    assert traced_eval(m, omega, fuel=60) == (value, trace)


# -- reference realizers ---------------------------------------------------------------


def test_search_realizer_tends_to_true():
    v = realizes(FIRST_TRUE_BIT, ExplicitOracle(), ALMOST_SURELY_A_TRUE_BIT, fuel=60)
    assert v.value is U and "fuel" in v.reason
    m = v.witness[0]["measure"]
    lo = Q(*map(int, m["lo"].split("/")))
    assert m["hi"] == "1/1" and 1 - lo == Q(1, 2**14)
    assert realizes(FIRST_TRUE_BIT, ExplicitOracle(), ALMOST_SURELY_A_TRUE_BIT, fuel=60, exact_limit=True).value is T


def test_search_realizer_residual_shrinks_with_fuel():
    gaps = [1 - realizability_measure(FIRST_TRUE_BIT, ALMOST_SURELY_A_TRUE_BIT.body, fuel=f).lo for f in (15, 30, 45)]
    assert gaps[0] > gaps[1] > gaps[2] > 0


@pytest.mark.parametrize("x", range(7))
def test_prefix_realizer(x):
    f = prefix_bits_formula(x)
    for seed in range(3):
        v = realizes(App(PREFIX_BITS, Numeral(x)), SeededOracle(seed), f)
        assert v.value is T
        assert v.witness[0]["measure"] == {"lo": f"1/{2**x}", "hi": f"1/{2**x}", "method": "exact"}
        assert eval_on_oracle(f, {}, SeededOracle(seed)) is T


def test_prefix_realizer_as_written_returns_a_boolean():
    with pytest.raises(PCFTypeError):
        realizes(App(PREFIX_BITS_LITERAL, Numeral(2)), ExplicitOracle(), prefix_bits_formula(2))


@pytest.mark.parametrize("x", range(4))
def test_inclusive_bound_fails(x):
    # covering x + 1 bits halves the measure below the threshold
    f = L.CQuant(L.numeral(1), L.power_term(2, x), L.ForallBelow("y", L.numeral(x + 1), L.Flip(L.Var("y"))))
    assert realizes(App(PREFIX_BITS, Numeral(x)), ExplicitOracle(), f).value is F
    assert eval_on_oracle(f, {}, ExplicitOracle()) is F


def test_false_equation_has_no_realizer():
    falsum = parse("(= 0 (s 0))")
    for m in [TRUE, parse_pcf("false"), parse_pcf("(iszero (o 3))")]:
        assert realizes(m, SeededOracle(4), falsum).value is F


# -- clauses ------------------------------------------------------------------------


def test_atomic_and_conjunction():
    f = parse("(and (flip 0) (= 1 1))")
    m = Pair(Numeral(0), TRUE)
    assert realizes(m, ExplicitOracle("1"), f).value is T
    assert realizes(m, ExplicitOracle("0"), f).value is F


def test_implication_uses_candidates_and_the_side_condition():
    f = parse("(implies (flip 0) (flip 0))")
    ident = parse_pcf("(lam p nat p)")
    assert realizes(ident, ExplicitOracle("0"), f).value is T
    assert realizes(ident, ExplicitOracle("1"), f).value is T
    g = parse("(implies (= 0 0) (flip 0))")
    assert realizes(parse_pcf("(lam p bool 0)"), ExplicitOracle("0"), g).value is F
    assert realizes(parse_pcf("(lam p bool 0)"), ExplicitOracle("1"), g, candidates=[TRUE]).value is T


def test_existential_witness():
    f = parse("(exists x (flip x))")
    v = realizes(Pair(Numeral(3), Numeral(0)), ExplicitOracle("0001"), f)
    assert v.value is T and {"exists": "x", "value": 3} in v.witness
    assert realizes(Pair(Numeral(2), Numeral(0)), ExplicitOracle("0001"), f).value is F
    diverge = Pair(Fix(Lam("n", NAT, Var("n"))), Numeral(0))
    assert realizes(diverge, ExplicitOracle("1"), f, fuel=50).value is U


def test_unbounded_universal_is_only_refuted():
    f = parse("(forall x (flip x))")
    m = Lam("x", NAT, Numeral(0))
    v = realizes(m, ExplicitOracle("", tail="ones"), f)
    assert v.value is U and "quantifier_cap" in v.reason
    v = realizes(m, ExplicitOracle("110"), f)
    assert v.value is F and {"counterexample": "x", "value": 2} in v.witness


def test_doubt_clause():
    f = parse("(D 1 1 (flip 0))")
    m = Lam("o", O, Numeral(0))
    assert realizes(m, SeededOracle(0), f).value is T
    assert realizes(m, SeededOracle(0), parse("(D 1 2 (flip 0))")).value is F
    assert realizes(m, SeededOracle(0), parse("(D 1 0 (flip 0))")).value is T
    assert realizes(m, SeededOracle(0), parse("(C 1 0 (flip 0))")).value is F


def test_sampling_fallback():
    f = prefix_bits_formula(4)
    m = App(PREFIX_BITS, Numeral(4))
    sm = realizability_measure(m, f.body, budget=Budget(max_bits=2), samples=4000, seed=3)
    assert sm.method == "sampled" and sm.lo <= Q(1, 16) <= sm.hi
    again = realizability_measure(m, f.body, budget=Budget(max_bits=2), samples=4000, seed=3)
    assert again == sm


def test_verdict_json():
    data = realizes(App(PREFIX_BITS, Numeral(1)), ExplicitOracle("1"), prefix_bits_formula(1)).to_json()
    assert data["verdict"] == "true" and data["witness"][0]["threshold"] == "1/2"


# -- soundness ------------------------------------------------------------------


def test_resugar_inverts_desugar():
    f = parse("(not (or (flip 0) (exists-below a 2 (flip a))))")
    assert resugar(desugar(f)) == f


@settings(max_examples=120, deadline=None, suppress_health_check=list(HealthCheck))
@given(bounded_formulas())
def test_synthesized_realizers_are_sound(f):
    m = synthesize(f)
    a = desugar(f)
    assert typecheck(m) == translate_type(a)
    for p in prefixes(6):
        omega = ExplicitOracle(p)
        verdict = realizes(m, omega, a).value
        truth = eval_on_oracle(f, {}, omega)
        if verdict is T:
            assert truth is T
        # synthesized realizers are also complete on bounded formulas
        assert (verdict is T) == (truth is T)


@settings(max_examples=60, deadline=None, suppress_health_check=list(HealthCheck))
@given(bounded_formulas())
def test_decision_terms_agree_with_semantics(f):
    d = _decide(f, {}, Budget(64))
    assert typecheck(d) == BOOL
    for p in prefixes(6):
        omega = ExplicitOracle(p)
        assert (eval_pcf(d, omega) == TRUE) == (eval_on_oracle(f, {}, omega) is T)


@settings(max_examples=60, deadline=None, suppress_health_check=list(HealthCheck))
@given(bounded_formulas())
def test_measure_clause_consistency(f):
    a = desugar(f)
    m = Lam("o", O, synthesize(f))
    sm = realizability_measure(m, a)
    iv = eval_exact(f)
    assert iv.lo_measure <= sm.lo <= sm.hi <= iv.hi_measure


def test_measure_within_semantic_interval_for_the_search():
    sm = realizability_measure(FIRST_TRUE_BIT, ALMOST_SURELY_A_TRUE_BIT.body, fuel=40)
    iv = eval_exact(ALMOST_SURELY_A_TRUE_BIT.body, budget=Budget(quantifier_cap=20))
    assert iv.lo_measure <= 1 and sm.lo <= iv.hi_measure
    trace = trace_event(App(FIRST_TRUE_BIT, ORACLE), Pair(Numeral(0), Numeral(0)), fuel=40)
    assert trace.lo_measure == Q(1, 2)
