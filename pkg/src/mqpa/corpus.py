"""Formulas for the infinite-monkey and random-walk statements.

Both statements are valid (denote the full event), but only through a
limit over infinitely many oracle bits.  Alongside each full formula there
is a bounded variant whose exact measure the evaluator can compute; raising
the bounds moves that measure towards 1.

Strings are coded with :func:`mqpa.coding.string_code`.
"""
from __future__ import annotations

from . import lang as L
from .coding import is_string_code, leq, pair_graph, seq_graph, string_decode

V = L.Var
ONE = L.numeral(1)


# ------------------------------------------------------------ monkey


def imt_length_formula(x: L.Term, w: L.Term) -> L.Formula:
    """``w`` is below the length of the string coded by ``x``."""
    a, b = "la", "lb"
    return L.ExistsBelow(
        a, L.Succ(x), L.ExistsBelow(b, L.Succ(x), L.And(pair_graph(V(a), V(b), x), L.less_than(w, V(a))))
    )


def imt_bit_formula(bits: str, w: L.Term) -> L.Formula:
    """Bit ``w`` (0-based, left to right) of ``bits`` is 1, as a case split."""
    return L.disj(L.Eq(w, L.numeral(i)) for i, c in enumerate(bits) if c == "1")


def _imt_matrix(n: int, y: L.Term, z: L.Term) -> L.Formula:
    if not is_string_code(n):
        raise ValueError(f"{n} does not code a bit string")
    bits = string_decode(n)
    w = V("w")
    x = L.numeral(n)
    phi = L.Implies(imt_length_formula(x, w), L.iff(imt_bit_formula(bits, w), L.Flip(L.Add(L.Add(y, z), w))))
    return L.ForallBelow("w", L.numeral(len(bits)), phi)


def build_imt(n: int) -> L.Formula:
    """C^{1/1} ∀y ∃z ∀w<len. F(n,w) → (G(n,w) ↔ FLIP(y+z+w))."""
    return L.CQuant(ONE, ONE, L.Forall("y", L.Exists("z", _imt_matrix(n, V("y"), V("z")))))


def build_imt_bounded(n: int, y: int, zcap: int) -> L.Formula:
    """∃z<zcap ∀w<len. F(n,w) → (G(n,w) ↔ FLIP(y+z+w)) at a fixed start ``y``."""
    return L.ExistsBelow("z", L.numeral(zcap), _imt_matrix(n, L.numeral(y), V("z")))


# ------------------------------------------------------------ random walk


def rw_half(y: L.Term, body, h: str = "h") -> L.Formula:
    """∃h ≤ y. y = h + h ∧ body(h)."""
    return L.ExistsBelow(h, L.Succ(y), L.And(L.Eq(y, L.Add(V(h), V(h))), body(V(h))))


def rw_h_formula(y: L.Term, z: L.Term) -> L.Formula:
    """y is even and z codes y/2 distinct entries below y."""

    def body(h):
        entries_small = L.ForallBelow("i", h, L.ExistsBelow("r", y, seq_graph(z, V("i"), V("r"))))
        distinct = L.ForallBelow(
            "i",
            h,
            L.ForallBelow(
                "j",
                h,
                L.ForallBelow(
                    "r",
                    y,
                    L.Implies(
                        L.And(seq_graph(z, V("i"), V("r")), seq_graph(z, V("j"), V("r"))),
                        L.Eq(V("i"), V("j")),
                    ),
                ),
            ),
        )
        return L.And(entries_small, distinct)

    return rw_half(y, body)


def rw_k_formula(y: L.Term, z: L.Term, v: L.Term) -> L.Formula:
    """H(y, z) and v is one of the y/2 coded entries."""
    member = L.ExistsBelow("i", y, L.And(L.less_than(L.Add(V("i"), V("i")), y), seq_graph(z, V("i"), v)))
    return L.And(rw_h_formula(y, z), member)


def build_rw() -> L.Formula:
    """C^{1/1} ∀x ∃y ∃z. y ≥ x ∧ H(y,z) ∧ ∀v. v<y → (K(y,z,v) ↔ FLIP v)."""
    x, y, z, v = V("x"), V("y"), V("z"), V("v")
    matched = L.Forall("v", L.Implies(L.less_than(v, y), L.iff(rw_k_formula(y, z, v), L.Flip(v))))
    body = L.conj([leq(x, y), rw_h_formula(y, z), matched])
    return L.CQuant(ONE, ONE, L.Forall("x", L.Exists("y", L.Exists("z", body))))


def rw_return_event(steps: int) -> L.Formula:
    """The first ``steps`` moves contain equally many 1s and 0s.

    The witnessing subset is a block of ``steps/2`` existentials taken in
    increasing order, which is the same set as "a code of distinct entries"
    but without sequence coding and with one witness per subset.
    """
    if steps % 2:
        return L.FALSUM
    half = steps // 2
    names = [f"z{i}" for i in range(half)]
    Y = L.numeral(steps)
    v = V("v")
    hit = L.disj(L.Eq(v, V(n)) for n in names)
    f: L.Formula = L.ForallBelow("v", Y, L.iff(hit, L.Flip(v)))
    for i in reversed(range(half)):
        if i > 0:
            f = L.And(L.less_than(V(names[i - 1]), V(names[i])), f)
        f = L.ExistsBelow(names[i], Y, f)
    return f


def build_rw_bounded(xcap: int, ycap: int) -> L.Formula:
    """∀x ≤ xcap ∃y ≤ ycap. x ≤ y ∧ (the walk is back at 1 after y moves)."""
    x, y = V("x"), V("y")
    returns = L.disj(L.And(L.Eq(y, L.numeral(k)), rw_return_event(k)) for k in range(0, ycap + 1, 2))
    return L.ForallBelow("x", L.numeral(xcap + 1), L.ExistsBelow("y", L.numeral(ycap + 1), L.And(leq(x, y), returns)))


# ---------------------------------------------------------------- OR programs


def or_basics() -> dict:
    """The base OR programs at fixed arities (natives included)."""
    from .orfun import NATIVES, Native, Proj, Query, Succ, Zero

    out = {"zero": Zero(1), "zero2": Zero(2), "succ": Succ(), "proj1": Proj(2, 1), "proj2": Proj(2, 2), "query": Query()}
    out.update({f"native_{name}": Native(name) for name in NATIVES})
    return out


def or_compositions() -> dict:
    """Query-bearing compositions over the base programs."""
    from .orfun import Comp, Native, Proj, Query, Succ, Zero

    q, add, pair = Query(), Native("add"), Native("pair")
    next_bit = Comp(q, (Succ(),))
    return {
        "query_of_query": Comp(q, (q,)),
        "query_of_query_of_query": Comp(q, (Comp(q, (q,)),)),
        "next_bit": next_bit,
        "succ_of_query": Comp(Succ(), (q,)),
        "zero_of_query": Comp(Zero(1), (q,)),
        "two_bit_sum": Comp(add, (q, next_bit)),
        "pair_of_bits": Comp(pair, (q, next_bit)),
        "fst_of_pair": Comp(Native("fst"), (Comp(pair, (q, Proj(1, 1))),)),
        "query_at_code": Comp(q, (Native("snd"),)),
        "query_at_sum": Comp(q, (add,)),
        "shifted_bit": Comp(add, (Proj(2, 1), Comp(q, (Proj(2, 2),)))),
        "second_query": Comp(q, (Proj(2, 2),)),
    }
