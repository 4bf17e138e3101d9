"""Oracle recursive functions: concrete runs, symbolic runs and the flat map.

An OR program computes a partial function of natural-number arguments and a
global oracle.  :func:`eval_or` runs it against one oracle under a fuel
budget.  :func:`symbolic_outcome` explores every way the queried bits can
fall, producing for each result ``y`` the event of oracles that yield ``y``;
:func:`flatten` turns those events into a pseudo-distribution.

Schemes follow the usual argument conventions:

* ``(primrec h g)``: ``f(0, xs) = h(xs)``, ``f(x+1, xs) = g(f(x, xs), x, xs)``
* ``(minim g)``: the least ``z`` with ``g(xs, z) = 0``

Fuel is charged once per primitive-recursion step and once per candidate
tested by minimization.

Concrete syntax::

    (zero) (zero k) (succ) (proj n i) (query) (comp h g1 ... gn)
    (primrec h g) (minim g) (native name)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from . import coding
from .errors import ArityError, FuelExhausted, SyntaxError_
from .events import EMPTY, DyadicEvent, EventInterval, _of
from .oracles import NeedBit, Oracle, PartialOracle, TracingOracle
from .prfun import PseudoDistribution
from .sexpr import Atom, position, read_one


class ORProgram:
    __slots__ = ()

    @property
    def arity(self) -> Optional[int]:
        """Number of arguments, or ``None`` for arity-polymorphic programs."""
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(ORProgram):
    k: Optional[int] = None

    @property
    def arity(self):
        return self.k


@dataclass(frozen=True)
class Succ(ORProgram):
    @property
    def arity(self):
        return 1


@dataclass(frozen=True)
class Proj(ORProgram):
    n: int
    i: int

    def __post_init__(self):
        if not 1 <= self.i <= self.n:
            raise ArityError(f"projection index {self.i} outside 1..{self.n}")

    @property
    def arity(self):
        return self.n


@dataclass(frozen=True)
class Query(ORProgram):
    @property
    def arity(self):
        return 1


def _common(arities, what) -> Optional[int]:
    known = {a for a in arities if a is not None}
    if len(known) > 1:
        raise ArityError(f"{what} disagree on arity: {sorted(known)}")
    return known.pop() if known else None


@dataclass(frozen=True)
class Comp(ORProgram):
    h: ORProgram
    gs: tuple[ORProgram, ...]

    def __post_init__(self):
        object.__setattr__(self, "gs", tuple(self.gs))
        if not self.gs:
            raise ArityError("composition needs at least one inner function")
        if self.h.arity is not None and self.h.arity != len(self.gs):
            raise ArityError(f"outer function has arity {self.h.arity} but {len(self.gs)} inner functions given")
        object.__setattr__(self, "_arity", _common((g.arity for g in self.gs), "inner functions"))

    @property
    def arity(self):
        return self._arity


@dataclass(frozen=True)
class PrimRec(ORProgram):
    h: ORProgram
    g: ORProgram

    def __post_init__(self):
        hn = self.h.arity
        gn = None if self.g.arity is None else self.g.arity - 2
        if gn is not None and gn < 0:
            raise ArityError("step function needs arity at least 2")
        n = _common((hn, gn), "base and step (minus 2)")
        object.__setattr__(self, "_arity", None if n is None else n + 1)

    @property
    def arity(self):
        return self._arity


@dataclass(frozen=True)
class Minim(ORProgram):
    g: ORProgram

    def __post_init__(self):
        if self.g.arity is not None and self.g.arity < 1:
            raise ArityError("minimization needs a body of arity at least 1")

    @property
    def arity(self):
        return None if self.g.arity is None else self.g.arity - 1


# ------------------------------------------------------------ natives


@dataclass(frozen=True)
class NativeSpec:
    name: str
    arity: int
    impl: Callable[..., int]
    reference: Callable[[], ORProgram] = field(compare=False)


def _ref_add():
    return PrimRec(Proj(1, 1), Comp(Succ(), (Proj(3, 1),)))


def _ref_pred():
    return PrimRec(Zero(0), Proj(2, 2))


def _ref_monus():
    # monus(x, y) = x ∸ y, recursing on y
    sub = PrimRec(Proj(1, 1), Comp(_ref_pred(), (Proj(3, 1),)))  # sub(y, x)
    return Comp(sub, (Proj(2, 2), Proj(2, 1)))


def _ref_tri():
    # add recurses on its first argument, so feed it the small one
    step = Comp(_ref_add(), (Comp(Succ(), (Proj(2, 2),)), Proj(2, 1)))
    return PrimRec(Zero(0), step)


def _ref_pair():
    s = Comp(_ref_add(), (Proj(2, 1), Proj(2, 2)))
    return Comp(_ref_add(), (Proj(2, 2), Comp(_ref_tri(), (s,))))


def _ref_diagonal():
    # least t with tri(t+1) > z, i.e. (z+1) ∸ tri(t+1) = 0
    tri_next = Comp(_ref_tri(), (Comp(Succ(), (Proj(2, 2),)),))
    return Minim(Comp(_ref_monus(), (Comp(Succ(), (Proj(2, 1),)), tri_next)))


def _ref_snd():
    t = _ref_diagonal()
    return Comp(_ref_monus(), (Proj(1, 1), Comp(_ref_tri(), (t,))))


def _ref_fst():
    return Comp(_ref_monus(), (_ref_diagonal(), _ref_snd()))


NATIVES: dict[str, NativeSpec] = {
    "add": NativeSpec("add", 2, lambda a, b: a + b, _ref_add),
    "pair": NativeSpec("pair", 2, coding.pair, _ref_pair),
    "fst": NativeSpec("fst", 1, coding.fst, _ref_fst),
    "snd": NativeSpec("snd", 1, coding.snd, _ref_snd),
}


@dataclass(frozen=True)
class Native(ORProgram):
    """A query-free arithmetic leaf evaluated directly."""

    name: str

    def __post_init__(self):
        if self.name not in NATIVES:
            raise ArityError(f"unknown native {self.name!r}; known: {sorted(NATIVES)}")

    @property
    def arity(self):
        return NATIVES[self.name].arity


# ------------------------------------------------------------ evaluation


class _Run:
    def __init__(self, oracle: Oracle, fuel: int):
        self.oracle = oracle
        self.fuel = fuel

    def burn(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("fuel exhausted")

    def ev(self, p: ORProgram, args: tuple[int, ...]) -> int:
        if isinstance(p, Comp):
            return self.ev(p.h, tuple(self.ev(g, args) for g in p.gs))
        if isinstance(p, Proj):
            return args[p.i - 1]
        if isinstance(p, Native):
            return NATIVES[p.name].impl(*args)
        if isinstance(p, Zero):
            return 0
        if isinstance(p, Succ):
            return args[0] + 1
        if isinstance(p, Query):
            return self.oracle.get(args[0])
        if isinstance(p, PrimRec):
            if not args:
                raise ArityError("primitive recursion needs a recursion argument")
            n, xs = args[0], args[1:]
            value = self.ev(p.h, xs)
            for i in range(n):
                self.burn()
                value = self.ev(p.g, (value, i) + xs)
            return value
        if isinstance(p, Minim):
            z = 0
            while True:
                self.burn()
                if self.ev(p.g, args + (z,)) == 0:
                    return z
                z += 1
        raise TypeError(f"not an OR program: {p!r}")


def check_args(p: ORProgram, args: Sequence[int]) -> tuple[int, ...]:
    if p.arity is not None and len(args) != p.arity:
        raise ArityError(f"program has arity {p.arity} but got {len(args)} argument(s)")
    if any(not isinstance(a, int) or a < 0 for a in args):
        raise ValueError("arguments must be natural numbers")
    return tuple(args)


def eval_or(p: ORProgram, args: Sequence[int], oracle: Oracle, fuel: int = 1000) -> int:
    """Run ``p`` on ``args`` against ``oracle``; raises :class:`FuelExhausted`."""
    if fuel < 1:
        raise ValueError("fuel must be at least 1")
    return _Run(oracle, fuel).ev(p, check_args(p, args))


def traced_run(p: ORProgram, args: Sequence[int], oracle: Oracle, fuel: int = 1000):
    """``(result or None, query trace)``; ``None`` marks exhausted fuel."""
    tracer = TracingOracle(oracle)
    try:
        value = eval_or(p, args, tracer, fuel)
    except FuelExhausted:
        value = None
    return value, tracer.trace


# ------------------------------------------------------------ symbolic runs


@dataclass(frozen=True)
class Leaf:
    """One branch of the query tree: the bits it fixed and its outcome."""

    assignment: tuple[tuple[int, int], ...]
    value: Optional[int]  # None: fuel ran out on this branch

    @property
    def constraints(self) -> dict[int, int]:
        return dict(self.assignment)

    @property
    def weight(self) -> Fraction:
        return Fraction(1, 1 << len(self.assignment))


def symbolic_leaves(p: ORProgram, args: Sequence[int], fuel: int = 1000) -> Iterator[Leaf]:
    """Enumerate the query tree depth-first.

    A run proceeds on a partial oracle; reading an unassigned bit aborts it
    and reschedules both extensions.  Leaves are disjoint cylinders whose
    union is the whole space.
    """
    args = check_args(p, args)
    stack = [PartialOracle()]
    while stack:
        partial = stack.pop()
        try:
            value: Optional[int] = _Run(partial, fuel).ev(p, args)
        except NeedBit as need:
            if need.oracle is not partial:
                raise
            stack.append(partial.extended(need.index, 1))
            stack.append(partial.extended(need.index, 0))
            continue
        except FuelExhausted:
            value = None
        yield Leaf(tuple(sorted(partial.assignment.items())), value)


@dataclass(frozen=True)
class SymbolicOutcome:
    events: dict  # value -> DyadicEvent
    unresolved: DyadicEvent

    def event(self, y: int) -> DyadicEvent:
        return self.events.get(y, EMPTY)


def symbolic_outcome(p: ORProgram, args: Sequence[int], fuel: int = 1000, max_bits: int | None = None) -> SymbolicOutcome:
    events: dict[int, DyadicEvent] = {}
    unresolved = EMPTY
    for leaf in symbolic_leaves(p, args, fuel):
        cyl = DyadicEvent.from_constraints(leaf.constraints, max_bits)
        if leaf.value is None:
            unresolved = unresolved | cyl
        else:
            events[leaf.value] = events.get(leaf.value, EMPTY) | cyl
    return SymbolicOutcome(dict(sorted(events.items())), unresolved)


def aux_event(p: ORProgram, args: Sequence[int], y: int, fuel: int = 1000, max_bits: int | None = None) -> EventInterval:
    """Bracket of the set of oracles on which ``p(args)`` returns ``y``."""
    out = symbolic_outcome(p, args, fuel, max_bits)
    lo = out.event(y)
    return _of(lo, lo | out.unresolved)


def flatten(p: ORProgram, args: Sequence[int], fuel: int = 1000) -> PseudoDistribution:
    """The random function ``y -> μ{ω : p(args, ω) = y}`` at finite fuel.

    Leaves are disjoint cylinders, so their measures simply add; this needs
    no bound on the queried indices.
    """
    weights: dict[int, Fraction] = {}
    residual = Fraction(0)
    for leaf in symbolic_leaves(p, args, fuel):
        if leaf.value is None:
            residual += leaf.weight
        else:
            weights[leaf.value] = weights.get(leaf.value, Fraction(0)) + leaf.weight
    return PseudoDistribution.of(weights, residual)


# ------------------------------------------------------------ syntax


def _nat(d) -> int:
    if not isinstance(d, Atom) or not d.isdigit():
        raise SyntaxError_(f"expected a natural number, got {d!r}", *position(d))
    return int(d)


def or_from_sexpr(d) -> ORProgram:
    if isinstance(d, Atom) or not d or not isinstance(d[0], Atom):
        raise SyntaxError_("expected a program form like (query)", *position(d))
    head, args = str(d[0]), d[1:]

    def want(n):
        if len(args) != n:
            raise SyntaxError_(f"({head} ...) takes {n} argument(s), got {len(args)}", *position(d))

    try:
        if head == "zero":
            if len(args) > 1:
                want(1)
            return Zero(_nat(args[0]) if args else None)
        if head == "succ":
            want(0)
            return Succ()
        if head == "query":
            want(0)
            return Query()
        if head == "proj":
            want(2)
            return Proj(_nat(args[0]), _nat(args[1]))
        if head == "native":
            want(1)
            return Native(str(args[0]))
        if head == "comp":
            if len(args) < 2:
                raise SyntaxError_("(comp h g1 ...) needs at least one inner function", *position(d))
            return Comp(or_from_sexpr(args[0]), tuple(or_from_sexpr(a) for a in args[1:]))
        if head == "primrec":
            want(2)
            return PrimRec(or_from_sexpr(args[0]), or_from_sexpr(args[1]))
        if head == "minim":
            want(1)
            return Minim(or_from_sexpr(args[0]))
    except ArityError as e:
        raise SyntaxError_(str(e), *position(d)) from None
    raise SyntaxError_(f"unknown OR constructor {head!r}", *position(d[0]))


def parse_or(text: str) -> ORProgram:
    return or_from_sexpr(read_one(text))


def print_or(p: ORProgram) -> str:
    if isinstance(p, Zero):
        return "(zero)" if p.k is None else f"(zero {p.k})"
    if isinstance(p, Succ):
        return "(succ)"
    if isinstance(p, Query):
        return "(query)"
    if isinstance(p, Proj):
        return f"(proj {p.n} {p.i})"
    if isinstance(p, Native):
        return f"(native {p.name})"
    if isinstance(p, Comp):
        return "(comp " + " ".join(print_or(q) for q in (p.h, *p.gs)) + ")"
    if isinstance(p, PrimRec):
        return f"(primrec {print_or(p.h)} {print_or(p.g)})"
    if isinstance(p, Minim):
        return f"(minim {print_or(p.g)})"
    raise TypeError(f"not an OR program: {p!r}")


def or_size(p: ORProgram) -> int:
    if isinstance(p, Comp):
        return 1 + or_size(p.h) + sum(or_size(g) for g in p.gs)
    if isinstance(p, PrimRec):
        return 1 + or_size(p.h) + or_size(p.g)
    if isinstance(p, Minim):
        return 1 + or_size(p.g)
    return 1
