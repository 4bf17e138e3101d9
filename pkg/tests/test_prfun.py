import itertools
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from mqpa.errors import ArityError, SyntaxError_
from mqpa.prfun import (
    PD,
    Comp,
    Minim,
    PrimRec,
    Proj,
    PseudoDistribution,
    Rand,
    S,
    Z,
    eval_pr,
    has_minim,
    kleisli_total,
    pad,
    parse_pr,
    print_pr,
)
from pr_corpus import CORPUS, GEOMETRIC, RARE_STOP, STOP_AT_START, programs


def brute_minim(body, xs, depth):
    """Minimization by enumerating every outcome sequence of the body.

    Each step z draws an outcome from ``body(xs, z)``; the search stops at
    the first 0.  Sequences are enumerated up to length ``depth``.
    """
    steps = [eval_pr(body, list(xs) + [z], depth) for z in range(depth)]
    weights = {}
    for n in range(1, depth + 1):
        for seq in itertools.product(*(steps[z].weights for z in range(n))):
            *prefix, last = seq
            if any(v == 0 for v, _ in prefix) or last[0] != 0:
                continue
            p = Q(1)
            for _, w in seq:
                p *= w
            weights[n - 1] = weights.get(n - 1, Q(0)) + p
    return {y: w for y, w in weights.items() if w}


# -- basic functions ------------------------------------------------------


@pytest.mark.parametrize("x", [0, 3, 7])
def test_basic_clauses(x):
    assert eval_pr(Z(), [x]) == PD.point(0)
    assert eval_pr(S(), [x]) == PD.point(x + 1)
    assert eval_pr(Rand(), [x]) == PD.of({x: Q(1, 2), x + 1: Q(1, 2)})
    assert eval_pr(Proj(3, 2), [x, x + 1, x + 2]) == PD.point(x + 1)


def test_two_coin_convolution():
    assert eval_pr(Comp(Rand(), (Rand(),)), [0]) == PD.of({0: Q(1, 4), 1: Q(1, 2), 2: Q(1, 4)})


@pytest.mark.parametrize("depth", [1, 4, 12])
def test_geometric_minimization(depth):
    d = eval_pr(GEOMETRIC, [5], depth)
    assert d.as_dict() == {y: Q(1, 2 ** (y + 1)) for y in range(depth)}
    assert d.residual == Q(1, 2**depth)


def test_kleisli_examples():
    d = PD.of({3: Q(1, 2), 5: Q(1, 2)})
    assert kleisli_total(S(), [d]) == PD.of({4: Q(1, 2), 6: Q(1, 2)})
    assert kleisli_total(Z(), [d]) == PD.point(0)
    assert kleisli_total(Rand(), [PD.point(0)]) == PD.of({0: Q(1, 2), 1: Q(1, 2)})


def test_kleisli_tracks_input_residual():
    d = PD.of({1: Q(1, 2)}, Q(1, 2))
    out = kleisli_total(S(), [d])
    assert out == PD.of({2: Q(1, 2)}, Q(1, 2))


def test_arity_errors():
    with pytest.raises(ArityError):
        eval_pr(Z(), [1, 2])
    with pytest.raises(ArityError):
        Comp(Proj(2, 1), (Z(),))
    with pytest.raises(ArityError):
        PrimRec(Z(), Z())
    with pytest.raises(ArityError):
        Proj(2, 3)
    with pytest.raises(ArityError):
        kleisli_total(S(), [])


def test_distribution_invariants():
    with pytest.raises(ValueError):
        PD.of({0: Q(3, 4), 1: Q(1, 2)})
    with pytest.raises(ValueError):
        PD.of({0: Q(1, 2)}, Q(-1, 4))
    assert PD.of({0: Q(0), 1: Q(1)}) == PD.point(1)
    assert PD.from_json(PD.of({2: Q(1, 3)}, Q(1, 6)).to_json()) == PD.of({2: Q(1, 3)}, Q(1, 6))


# -- minimization against the sequence oracle ------------------------------

TWO_POINT_BODIES = [
    Comp(Rand(), (pad(Z(), 2),)),  # {0, 1} at every step
    Comp(Rand(), (Proj(2, 2),)),  # {z, z+1}
    Comp(Rand(), (Comp(Z(), (Proj(2, 1),)),)),
]


@pytest.mark.parametrize("body", TWO_POINT_BODIES)
@pytest.mark.parametrize("depth", [1, 2, 5, 9, 12])
def test_minimization_matches_sequence_enumeration(body, depth):
    got = eval_pr(Minim(body), [1], depth)
    assert got.as_dict() == brute_minim(body, [1], depth)
    assert got.mass == 1


def test_minimization_with_three_point_body():
    body = Comp(Rand(), (Comp(Rand(), (pad(Z(), 2),)),))
    for depth in (3, 7):
        assert eval_pr(Minim(body), [0], depth).as_dict() == brute_minim(body, [0], depth)


def test_never_stopping_search_keeps_residual():
    d = eval_pr(STOP_AT_START, [0], 10)
    assert d == PD.of({0: Q(1, 2)}, Q(1, 2))
    assert eval_pr(RARE_STOP, [4], 6) == PD.of({0: Q(1, 8)}, Q(7, 8))


# -- properties over random programs --------------------------------------

args1 = st.integers(0, 4).map(lambda x: [x])
args2 = st.tuples(st.integers(0, 3), st.integers(0, 3)).map(list)


@settings(max_examples=150, deadline=None)
@given(st.one_of(st.tuples(programs(1), args1), st.tuples(programs(2), args2)), st.integers(1, 6))
def test_mass_accounting_and_depth_monotonicity(case, depth):
    p, args = case
    shallow = eval_pr(p, args, depth)
    deep = eval_pr(p, args, depth + 2)
    assert shallow.mass == 1 == deep.mass
    for y, w in shallow.weights:
        assert deep[y] >= w
    assert deep.residual <= shallow.residual
    if not has_minim(p):
        assert shallow.residual == 0


@settings(max_examples=100, deadline=None)
@given(programs(2), st.integers(0, 3), st.integers(0, 3))
def test_kleisli_unit(p, a, b):
    assert kleisli_total(p, [PD.point(a), PD.point(b)]) == eval_pr(p, [a, b])


@settings(max_examples=100, deadline=None)
@given(programs(1, 1), programs(1, 1), programs(1, 1), st.integers(0, 4))
def test_composition_reassociates(f, g, h, x):
    left = Comp(f, (Comp(g, (h,)),))
    right = Comp(Comp(f, (g,)), (h,))
    assert eval_pr(left, [x], 6) == eval_pr(right, [x], 6)


# -- syntax ----------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_print_parse_round_trip(name):
    p = CORPUS[name]
    assert parse_pr(print_pr(p)) == p


def test_parse_errors():
    for bad in ["(proj 1 2)", "(comp (succ))", "(frob)", "(minim)", "(comp (proj 2 1) (z))"]:
        with pytest.raises(SyntaxError_):
            parse_pr(bad)
