"""Number-theoretic codings shared by the corpus builders and the compilers.

* Cantor pairing ``pair(a, b) = (a+b)(a+b+1)/2 + b`` and its inverses.
* Binary strings coded as ``pair(len(s), val(s))``, ``val`` read most
  significant bit first (so ``"10"`` has value 2).
* Gödel's β-function ``beta(c, d, i) = c mod (1 + (i+1) d)`` with a
  Chinese-remainder encoder for finite sequences.

Each function has a matching formula builder whose integer graph agrees
with it; those builders only use the bounded quantifier sugar so the
formulas stay decidable by exact evaluation.
"""
from __future__ import annotations

import math
from typing import Sequence

from . import lang as L


def pair(a: int, b: int) -> int:
    s = a + b
    return s * (s + 1) // 2 + b


def unpair(n: int) -> tuple[int, int]:
    if n < 0:
        raise ValueError("codes are natural numbers")
    s = (math.isqrt(8 * n + 1) - 1) // 2
    b = n - s * (s + 1) // 2
    return s - b, b


def fst(n: int) -> int:
    return unpair(n)[0]


def snd(n: int) -> int:
    return unpair(n)[1]


def string_code(bits: str) -> int:
    if any(c not in "01" for c in bits):
        raise ValueError(f"not a bit string: {bits!r}")
    return pair(len(bits), int(bits, 2) if bits else 0)


def string_decode(n: int) -> str:
    length, value = unpair(n)
    if value >= 1 << length:
        raise ValueError(f"{n} does not code a bit string")
    return format(value, f"0{length}b") if length else ""


def is_string_code(n: int) -> bool:
    length, value = unpair(n)
    return value < 1 << length


def beta(c: int, d: int, i: int) -> int:
    return c % (1 + (i + 1) * d)


def beta_encode(seq: Sequence[int]) -> tuple[int, int]:
    """Some ``(c, d)`` with ``beta(c, d, i) == seq[i]`` for every index."""
    if not seq:
        return 0, 0
    d = math.factorial(max(len(seq), *seq) + 1)
    c, modulus = 0, 1
    for i, value in enumerate(seq):
        m = 1 + (i + 1) * d
        # solve c' = c (mod modulus), c' = value (mod m)
        t = ((value - c) * pow(modulus, -1, m)) % m
        c += modulus * t
        modulus *= m
    return c, d


# ------------------------------------------------------------ formulas


def _sum(*ts: L.Term) -> L.Term:
    out = ts[0]
    for t in ts[1:]:
        out = L.Add(out, t)
    return out


def pair_graph(a: L.Term, b: L.Term, y: L.Term) -> L.Formula:
    """``pair(a, b) = y`` as a single equation: (a+b)(a+b+1) + 2b = 2y."""
    s = L.Add(a, b)
    return L.Eq(L.Add(L.Mul(s, L.Succ(s)), L.Add(b, b)), L.Add(y, y))


def fst_graph(z: L.Term, y: L.Term, b: str = "b") -> L.Formula:
    """``fst(z) = y``; the second component is found below S(z)."""
    b = L.fresh_name(b, L.term_vars(z) | L.term_vars(y))
    return L.ExistsBelow(b, L.Succ(z), pair_graph(y, L.Var(b), z))


def snd_graph(z: L.Term, y: L.Term, a: str = "a") -> L.Formula:
    a = L.fresh_name(a, L.term_vars(z) | L.term_vars(y))
    return L.ExistsBelow(a, L.Succ(z), pair_graph(L.Var(a), y, z))


def beta_graph(c: L.Term, d: L.Term, i: L.Term, r: L.Term, q: str = "q") -> L.Formula:
    """``beta(c, d, i) = r``: c = q * m + r with r < m, m = 1 + (i+1) d."""
    q = L.fresh_name(q, L.term_vars(c) | L.term_vars(d) | L.term_vars(i) | L.term_vars(r))
    m = L.Succ(L.Mul(L.Succ(i), d))
    return L.And(
        L.less_than(r, m),
        L.ExistsBelow(q, L.Succ(c), L.Eq(c, L.Add(L.Mul(L.Var(q), m), r))),
    )


def seq_graph(z: L.Term, i: L.Term, r: L.Term) -> L.Formula:
    """Entry ``i`` of the sequence coded by ``z = pair(c, d)`` equals ``r``."""
    avoid = L.term_vars(z) | L.term_vars(i) | L.term_vars(r)
    c = L.fresh_name("c", avoid)
    d = L.fresh_name("d", avoid | {c})
    return L.ExistsBelow(
        c,
        L.Succ(z),
        L.ExistsBelow(
            d,
            L.Succ(z),
            L.And(pair_graph(L.Var(c), L.Var(d), z), beta_graph(L.Var(c), L.Var(d), i, r)),
        ),
    )


def leq(a: L.Term, b: L.Term) -> L.Formula:
    """``a <= b``."""
    return L.less_than(a, L.Succ(b))
