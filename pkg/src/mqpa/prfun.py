"""Probabilistic recursive functions with exact pseudo-distribution semantics.

Programs map argument tuples to :class:`PseudoDistribution` values.  Every
output distribution accounts for all of its mass: resolved weights plus a
residual that bounds the probability of outcomes not yet resolved within the
search ``depth`` (unbounded minimization is the only source of residual).

Concrete syntax::

    (z) (succ) (proj n i) (rand) (comp f g1 ... gn) (primrec f g) (minim f)

``(primrec f g)`` computes ``h(xs, 0) = f(xs)`` and
``h(xs, y+1) = g(xs, y, h(xs, y))`` with the previous value Kleisli-lifted.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ArityError, SyntaxError_
from .events import rational_from_json, rational_to_json
from .sexpr import Atom, position, read_one

ZERO_Q = Fraction(0)
ONE_Q = Fraction(1)
HALF = Fraction(1, 2)


# ------------------------------------------------------ distributions


@dataclass(frozen=True)
class PseudoDistribution:
    """Finite-support weights on naturals plus unresolved ``residual`` mass.

    ``weights`` is stored as a tuple of ``(outcome, weight)`` pairs sorted by
    outcome with no zero weights, so equality is structural.
    """

    weights: tuple[tuple[int, Fraction], ...]
    residual: Fraction = ZERO_Q

    def __post_init__(self):
        total = ZERO_Q
        last = -1
        for y, w in self.weights:
            if y <= last:
                raise ValueError("weights must be sorted by distinct outcome")
            if w <= 0:
                raise ValueError("weights must be positive")
            last = y
            total += w
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        if total + self.residual > 1:
            raise ValueError("total mass exceeds 1")

    @classmethod
    def of(cls, weights: Mapping[int, Fraction], residual=ZERO_Q) -> "PseudoDistribution":
        items = tuple(sorted((int(y), Fraction(w)) for y, w in weights.items() if w != 0))
        return cls(items, Fraction(residual))

    @classmethod
    def point(cls, y: int) -> "PseudoDistribution":
        return cls(((y, ONE_Q),))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.weights)

    def __getitem__(self, y: int) -> Fraction:
        for k, w in self.weights:
            if k == y:
                return w
        return ZERO_Q

    @property
    def support(self) -> list[int]:
        return [y for y, _ in self.weights]

    @property
    def resolved_mass(self) -> Fraction:
        return sum((w for _, w in self.weights), ZERO_Q)

    @property
    def mass(self) -> Fraction:
        return self.resolved_mass + self.residual

    def to_json(self) -> dict:
        return {
            "weights": [[y, rational_to_json(w)] for y, w in self.weights],
            "residual": rational_to_json(self.residual),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PseudoDistribution":
        return cls.of({int(y): rational_from_json(w) for y, w in data["weights"]}, rational_from_json(data["residual"]))

    def __repr__(self):
        body = ", ".join(f"{y}: {w}" for y, w in self.weights)
        return f"PD({{{body}}}, residual={self.residual})"


PD = PseudoDistribution


def kleisli(fn: Callable[[tuple[int, ...]], PseudoDistribution], dists: Sequence[PseudoDistribution]) -> PseudoDistribution:
    """Total Kleisli extension of ``fn`` applied to ``dists``.

    Unresolved mass collects the residual of each ``fn`` call, weighted by
    how likely its inputs are, plus every joint input outcome that involves
    some input's residual.
    """
    out: dict[int, Fraction] = {}
    residual = ZERO_Q
    for combo in itertools.product(*(d.weights for d in dists)):
        weight = ONE_Q
        for _, w in combo:
            weight *= w
        result = fn(tuple(i for i, _ in combo))
        for y, w in result.weights:
            out[y] = out.get(y, ZERO_Q) + weight * w
        residual += weight * result.residual
    with_residual = ONE_Q
    resolved = ONE_Q
    for d in dists:
        resolved *= d.resolved_mass
        with_residual *= d.mass
    residual += with_residual - resolved
    return PD.of(out, residual)


# ------------------------------------------------------ programs


class PRProgram:
    __slots__ = ()

    @property
    def arity(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Z(PRProgram):
    @property
    def arity(self):
        return 1


@dataclass(frozen=True)
class S(PRProgram):
    @property
    def arity(self):
        return 1


@dataclass(frozen=True)
class Rand(PRProgram):
    @property
    def arity(self):
        return 1


@dataclass(frozen=True)
class Proj(PRProgram):
    n: int
    i: int

    def __post_init__(self):
        if not 1 <= self.i <= self.n:
            raise ArityError(f"projection index {self.i} outside 1..{self.n}")

    @property
    def arity(self):
        return self.n


@dataclass(frozen=True)
class Comp(PRProgram):
    f: PRProgram
    gs: tuple[PRProgram, ...]

    def __post_init__(self):
        object.__setattr__(self, "gs", tuple(self.gs))
        if not self.gs:
            raise ArityError("composition needs at least one inner function")
        if self.f.arity != len(self.gs):
            raise ArityError(f"outer function has arity {self.f.arity} but {len(self.gs)} inner functions given")
        arities = {g.arity for g in self.gs}
        if len(arities) != 1:
            raise ArityError(f"inner functions disagree on arity: {sorted(arities)}")

    @property
    def arity(self):
        return self.gs[0].arity


@dataclass(frozen=True)
class PrimRec(PRProgram):
    f: PRProgram
    g: PRProgram

    def __post_init__(self):
        if self.g.arity != self.f.arity + 2:
            raise ArityError(f"step arity {self.g.arity} must be base arity {self.f.arity} + 2")

    @property
    def arity(self):
        return self.f.arity + 1


@dataclass(frozen=True)
class Minim(PRProgram):
    f: PRProgram

    def __post_init__(self):
        if self.f.arity < 1:
            raise ArityError("minimization needs a body of arity at least 1")

    @property
    def arity(self):
        return self.f.arity - 1


# ------------------------------------------------------ evaluation


class _Evaluator:
    def __init__(self, depth: int):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        self.depth = depth
        self.memo: dict = {}

    def run(self, p: PRProgram, args: tuple[int, ...]) -> PseudoDistribution:
        key = (id(p), args)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.memo[key] = (self._run(p, args), p)
        return hit[0]

    def _run(self, p, args):
        if isinstance(p, Z):
            return PD.point(0)
        if isinstance(p, S):
            return PD.point(args[0] + 1)
        if isinstance(p, Proj):
            return PD.point(args[p.i - 1])
        if isinstance(p, Rand):
            x = args[0]
            return PD(((x, HALF), (x + 1, HALF)))
        if isinstance(p, Comp):
            inner = [self.run(g, args) for g in p.gs]
            return kleisli(lambda vs: self.run(p.f, vs), inner)
        if isinstance(p, PrimRec):
            xs, n = args[:-1], args[-1]
            d = self.run(p.f, xs)
            for y in range(n):
                d = kleisli(lambda v, y=y: self.run(p.g, xs + (y, v[0])), [d])
            return d
        if isinstance(p, Minim):
            return self._minim(p, args)
        raise TypeError(f"not a PR program: {p!r}")

    def _minim(self, p: Minim, xs):
        weights: dict[int, Fraction] = {}
        residual = ZERO_Q
        survive = ONE_Q  # Π_{z<y} Σ_{k>0} f(xs, z)(k)
        for y in range(self.depth):
            d = self.run(p.f, xs + (y,))
            w0 = d[0]
            if w0:
                weights[y] = survive * w0
            residual += survive * d.residual
            survive *= d.resolved_mass - w0
            if survive == 0:
                break
        return PD.of(weights, residual + survive)


def _check_args(p: PRProgram, args: Sequence[int]):
    if len(args) != p.arity:
        raise ArityError(f"program has arity {p.arity} but got {len(args)} argument(s)")
    if any(not isinstance(a, int) or a < 0 for a in args):
        raise ValueError("arguments must be natural numbers")


def eval_pr(p: PRProgram, args: Sequence[int], depth: int = 16) -> PseudoDistribution:
    """The pseudo-distribution computed by ``p`` on ``args``.

    ``depth`` caps the minimization search; mass beyond it is residual.
    """
    _check_args(p, args)
    return _Evaluator(depth).run(p, tuple(args))


def kleisli_total(f: PRProgram, dists: Sequence[PseudoDistribution], depth: int = 16) -> PseudoDistribution:
    if len(dists) != f.arity:
        raise ArityError(f"program has arity {f.arity} but got {len(dists)} distribution(s)")
    ev = _Evaluator(depth)
    return kleisli(lambda vs: ev.run(f, vs), list(dists))


# ------------------------------------------------------ syntax


def _nat(d) -> int:
    if not isinstance(d, Atom) or not d.isdigit():
        raise SyntaxError_(f"expected a natural number, got {d!r}", *position(d))
    return int(d)


def pr_from_sexpr(d) -> PRProgram:
    if isinstance(d, Atom) or not d or not isinstance(d[0], Atom):
        raise SyntaxError_("expected a program form like (succ)", *position(d))
    head, args = str(d[0]), d[1:]

    def want(n):
        if len(args) != n:
            raise SyntaxError_(f"({head} ...) takes {n} argument(s), got {len(args)}", *position(d))

    try:
        if head == "z":
            want(0)
            return Z()
        if head == "succ":
            want(0)
            return S()
        if head == "rand":
            want(0)
            return Rand()
        if head == "proj":
            want(2)
            return Proj(_nat(args[0]), _nat(args[1]))
        if head == "comp":
            if len(args) < 2:
                raise SyntaxError_("(comp f g1 ...) needs at least one inner function", *position(d))
            return Comp(pr_from_sexpr(args[0]), tuple(pr_from_sexpr(a) for a in args[1:]))
        if head == "primrec":
            want(2)
            return PrimRec(pr_from_sexpr(args[0]), pr_from_sexpr(args[1]))
        if head == "minim":
            want(1)
            return Minim(pr_from_sexpr(args[0]))
    except ArityError as e:
        raise SyntaxError_(str(e), *position(d)) from None
    raise SyntaxError_(f"unknown PR constructor {head!r}", *position(d[0]))


def parse_pr(text: str) -> PRProgram:
    return pr_from_sexpr(read_one(text))


def print_pr(p: PRProgram) -> str:
    if isinstance(p, Z):
        return "(z)"
    if isinstance(p, S):
        return "(succ)"
    if isinstance(p, Rand):
        return "(rand)"
    if isinstance(p, Proj):
        return f"(proj {p.n} {p.i})"
    if isinstance(p, Comp):
        return "(comp " + " ".join(print_pr(q) for q in (p.f, *p.gs)) + ")"
    if isinstance(p, PrimRec):
        return f"(primrec {print_pr(p.f)} {print_pr(p.g)})"
    if isinstance(p, Minim):
        return f"(minim {print_pr(p.f)})"
    raise TypeError(f"not a PR program: {p!r}")


def pr_depth(p: PRProgram) -> int:
    """Nesting depth of the closure schemes (basic functions have depth 0)."""
    if isinstance(p, Comp):
        return 1 + max(pr_depth(q) for q in (p.f, *p.gs))
    if isinstance(p, PrimRec):
        return 1 + max(pr_depth(p.f), pr_depth(p.g))
    if isinstance(p, Minim):
        return 1 + pr_depth(p.f)
    return 0


def has_minim(p: PRProgram) -> bool:
    if isinstance(p, Minim):
        return True
    if isinstance(p, Comp):
        return any(has_minim(q) for q in (p.f, *p.gs))
    if isinstance(p, PrimRec):
        return has_minim(p.f) or has_minim(p.g)
    return False


def pad(p: PRProgram, arity: int, keep: Iterable[int] = (1,)) -> PRProgram:
    """``p`` applied to the selected arguments of an ``arity``-ary call."""
    keep = tuple(keep)
    return Comp(p, tuple(Proj(arity, i) for i in keep))
