import pytest
from hypothesis import given, settings, strategies as st

from mqpa import lang as L
from mqpa.errors import EvaluationError, SyntaxError_
from strategies import formulas, terms


def test_parse_examples():
    assert L.parse("(flip 0)") == L.Flip(L.ZERO)
    one = L.Succ(L.ZERO)
    assert L.parse("(C 1 1 (exists x (flip x)))") == L.CQuant(one, one, L.Exists("x", L.Flip(L.Var("x"))))
    assert L.parse("(+ x 2)", "term") == L.Add(L.Var("x"), L.numeral(2))


@pytest.mark.parametrize("text", ["(and", "(and (flip 0))", "(flip 0) (flip 1)", "(frob 0)", ")", ""])
def test_parse_errors(text):
    with pytest.raises(SyntaxError_):
        L.parse(text)


def test_syntax_error_position():
    with pytest.raises(SyntaxError_) as info:
        L.parse("(and (flip 0)\n  (wat 1))")
    assert info.value.line == 2 and info.value.column == 4


def test_print_examples():
    assert L.print_formula(L.Flip(L.ZERO)) == "(flip 0)"
    f = L.ExistsBelow("y", L.Var("x"), L.Flip(L.Var("y")))
    assert L.print_formula(f) == "(exists-below y x (flip y))"
    expanded = L.print_formula(f, expand=True)
    assert expanded == "(exists y (and (exists w (= (+ (s y) w) x)) (flip y)))"


@settings(max_examples=500)
@given(formulas())
def test_round_trip(f):
    assert L.parse(L.print_formula(f)) == f


@settings(max_examples=200)
@given(terms())
def test_term_round_trip(t):
    assert L.parse(L.print_term(t), "term") == t


def test_eval_term_examples():
    two = L.Add(L.Succ(L.ZERO), L.Succ(L.ZERO))
    assert L.eval_term(two, {}) == 2
    assert L.eval_term(L.Mul(L.Var("x"), L.numeral(2)), {"x": 3}) == 6
    with pytest.raises(EvaluationError):
        L.eval_term(L.Var("x"), {})


env_values = st.fixed_dictionaries({n: st.integers(0, 20) for n in ["x", "y", "z", "w", "v1"]})


@settings(max_examples=200)
@given(terms(), terms(), env_values)
def test_eval_is_homomorphic(a, b, env):
    assert L.eval_term(L.Add(a, b), env) == L.eval_term(a, env) + L.eval_term(b, env)
    assert L.eval_term(L.Mul(a, b), env) == L.eval_term(a, env) * L.eval_term(b, env)


@settings(max_examples=200)
@given(terms(), env_values, st.integers(0, 9))
def test_substitution_commutes_with_eval(t, env, k):
    substituted = L.subst_in_term(t, "x", L.numeral(k))
    assert L.eval_term(substituted, env) == L.eval_term(t, {**env, "x": k})


def test_substitute_examples():
    x = L.Var("x")
    assert L.print_formula(L.substitute(L.Flip(x), "x", 2)) == "(flip (s (s 0)))"
    shadowed = L.Exists("x", L.Flip(x))
    assert L.substitute(shadowed, "x", 2) == shadowed
    mixed = L.And(L.Flip(x), shadowed)
    assert L.print_formula(L.substitute(mixed, "x", 1)) == "(and (flip (s 0)) (exists x (flip x)))"


def test_substitution_avoids_capture():
    f = L.Exists("y", L.Eq(L.Var("x"), L.Var("y")))
    out = L.subst(f, "x", L.Var("y"))
    assert isinstance(out, L.Exists) and out.var != "y"
    assert L.free_vars(out) == {"y"}


def test_bounded_binder_scopes():
    f = L.ExistsBelow("x", L.Var("x"), L.Flip(L.Var("x")))
    # the bound is outside the binder's scope
    assert L.substitute(f, "x", 3) == L.ExistsBelow("x", L.numeral(3), L.Flip(L.Var("x")))
    assert L.free_vars(f) == {"x"}


def test_pure_flag():
    assert L.parse("(exists x (= x 0))").pure
    assert not L.parse("(exists x (flip x))").pure
    assert not L.parse("(C 1 2 (= 0 0))").pure
