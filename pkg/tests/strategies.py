"""Hypothesis strategies for random terms and formulas."""
from hypothesis import strategies as st

from mqpa import lang as L

NAMES = st.sampled_from(["x", "y", "z", "w", "v1"])


def terms(max_leaves=6, names=NAMES):
    leaves = st.one_of(names.map(L.Var), st.just(L.ZERO))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            sub.map(L.Succ),
            st.builds(L.Add, sub, sub),
            st.builds(L.Mul, sub, sub),
        ),
        max_leaves=max_leaves,
    )


def formulas(max_leaves=8):
    t = terms(4)
    atoms = st.one_of(t.map(L.Flip), st.builds(L.Eq, t, t))
    return st.recursive(
        atoms,
        lambda sub: st.one_of(
            sub.map(L.Not),
            st.builds(L.Or, sub, sub),
            st.builds(L.And, sub, sub),
            st.builds(L.Implies, sub, sub),
            st.builds(L.Exists, NAMES, sub),
            st.builds(L.Forall, NAMES, sub),
            st.builds(L.ExistsBelow, NAMES, t, sub),
            st.builds(L.ForallBelow, NAMES, t, sub),
            st.builds(L.CQuant, t, t, sub),
            st.builds(L.DQuant, t, t, sub),
        ),
        max_leaves=max_leaves,
    )


def small_numeral(max_value=3):
    return st.integers(0, max_value).map(L.numeral)


def bounded_formulas(max_leaves=6, max_index=3, max_bound=3):
    """Closed formulas with only bounded quantifiers over a tiny bit footprint.

    Bound variables are drawn from a fixed pool and every bound is a small
    numeral, so every Flip index stays below ``max_index + max_bound``.
    """
    pool = ["a", "b"]
    idx = st.one_of(
        small_numeral(max_index),
        st.sampled_from(pool).map(L.Var),
        st.builds(lambda v, k: L.Add(L.Var(v), L.numeral(k)), st.sampled_from(pool), st.integers(0, 1)),
    )
    atoms = st.one_of(idx.map(L.Flip), st.builds(L.Eq, idx, idx))
    bound = small_numeral(max_bound)

    def extend(sub):
        return st.one_of(
            sub.map(L.Not),
            st.builds(L.Or, sub, sub),
            st.builds(L.And, sub, sub),
            st.builds(L.Implies, sub, sub),
            st.builds(L.ExistsBelow, st.sampled_from(pool), bound, sub),
            st.builds(L.ForallBelow, st.sampled_from(pool), bound, sub),
            st.builds(L.CQuant, small_numeral(4), small_numeral(4), sub),
            st.builds(L.DQuant, small_numeral(4), small_numeral(4), sub),
        )

    def close(f):
        # bind any leftover pool variables at the top
        for v in sorted(L.free_vars(f)):
            f = L.ExistsBelow(v, L.numeral(2), f)
        return f

    return st.recursive(atoms, extend, max_leaves=max_leaves).map(close)
