"""Finite-prefix events over the Cantor space {0,1}^N with exact measures.

An event that depends only on the first ``n`` oracle bits is stored as a
truth table over the ``2**n`` prefixes, packed into a Python int: bit ``i``
of ``mask`` is set when the prefix whose j-th oracle bit equals bit ``j`` of
``i`` belongs to the event.  Tables are kept at their minimal length, so two
events are equal as sets iff they are equal as values.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import CapacityError

DEFAULT_MAX_BITS = 24
HARD_MAX_BITS = 30


def default_max_bits() -> int:
    """The bit cap in force: ``MQPA_MAX_BITS`` if set, else 24."""
    raw = os.environ.get("MQPA_MAX_BITS")
    if not raw:
        return DEFAULT_MAX_BITS
    value = int(raw)
    if not 0 <= value <= HARD_MAX_BITS:
        raise ValueError(f"MQPA_MAX_BITS must lie in [0, {HARD_MAX_BITS}], got {value}")
    return value


def _check(n: int, max_bits: int | None) -> None:
    cap = default_max_bits() if max_bits is None else max_bits
    if n > cap:
        raise CapacityError(f"event needs {n} oracle bits, cap is {cap}")


def _tile(mask: int, n: int, m: int) -> int:
    """Re-express an n-bit truth table over m >= n bits."""
    size = 1 << n
    while n < m:
        mask |= mask << size
        size <<= 1
        n += 1
    return mask


def _canonical(n: int, mask: int) -> tuple[int, int]:
    while n > 0:
        half = 1 << (n - 1)
        low = mask & ((1 << half) - 1)
        if low != mask >> half:
            break
        mask = low
        n -= 1
    return n, mask


def _bit_table(index: int, value: int) -> int:
    # table of length index+1 whose top bit is fixed to ``value``
    half = 1 << index
    ones = (1 << half) - 1
    return ones << half if value else ones


@dataclass(frozen=True)
class DyadicEvent:
    """A cylinder-algebra element, canonical by construction.

    Build instances with the classmethods; the raw constructor trusts its
    arguments to already be canonical.
    """

    prefix_length: int
    mask: int

    @classmethod
    def make(cls, prefix_length: int, mask: int, max_bits: int | None = None) -> "DyadicEvent":
        if prefix_length < 0:
            raise ValueError("prefix_length must be non-negative")
        _check(prefix_length, max_bits)
        mask &= (1 << (1 << prefix_length)) - 1
        return cls(*_canonical(prefix_length, mask))

    @classmethod
    def full(cls) -> "DyadicEvent":
        return cls(0, 1)

    @classmethod
    def empty(cls) -> "DyadicEvent":
        return cls(0, 0)

    @classmethod
    def bit(cls, index: int, value: int = 1, max_bits: int | None = None) -> "DyadicEvent":
        if index < 0:
            raise ValueError("bit index must be non-negative")
        if value not in (0, 1):
            raise ValueError("bit value must be 0 or 1")
        cap = default_max_bits() if max_bits is None else max_bits
        if index >= cap:
            raise CapacityError(f"oracle bit {index} is beyond the cap of {cap} bits")
        return cls(index + 1, _bit_table(index, value))

    @classmethod
    def from_constraints(cls, constraints: Mapping[int, int], max_bits: int | None = None) -> "DyadicEvent":
        """The cylinder of oracles agreeing with ``constraints`` (index -> bit)."""
        if not constraints:
            return cls.full()
        n = max(constraints) + 1
        _check(n, max_bits)
        mask = (1 << (1 << n)) - 1
        for index, value in constraints.items():
            mask &= _tile(_bit_table(index, value), index + 1, n)
        return cls(*_canonical(n, mask))

    @classmethod
    def from_prefixes(cls, n: int, prefixes: Iterable[str], max_bits: int | None = None) -> "DyadicEvent":
        """Union of the cylinders of the given length-``n`` bit strings."""
        _check(n, max_bits)
        mask = 0
        for p in prefixes:
            if len(p) != n:
                raise ValueError(f"prefix {p!r} does not have length {n}")
            mask |= 1 << _index(p)
        return cls(*_canonical(n, mask))

    # -- queries --------------------------------------------------------

    def measure(self) -> Fraction:
        return Fraction(self.mask.bit_count(), 1 << self.prefix_length)

    @property
    def is_full(self) -> bool:
        return self.prefix_length == 0 and self.mask == 1

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def contains(self, bits: str | Iterable[int]) -> bool:
        """Membership of any oracle extending ``bits`` (needs >= prefix_length bits)."""
        bits = "".join(str(b) for b in bits)
        if len(bits) < self.prefix_length:
            raise ValueError(f"need {self.prefix_length} bits, got {len(bits)}")
        return bool(self.mask >> _index(bits[: self.prefix_length]) & 1)

    def prefixes(self, n: int | None = None) -> Iterator[str]:
        """The member prefixes at length ``n`` (default: the canonical length)."""
        n = self.prefix_length if n is None else n
        mask = self.refined(n)
        for i in range(1 << n):
            if mask >> i & 1:
                yield "".join(str(i >> j & 1) for j in range(n))

    def refined(self, n: int) -> int:
        if n < self.prefix_length:
            raise ValueError("cannot coarsen below the canonical length")
        return _tile(self.mask, self.prefix_length, n)

    def issubset(self, other: "DyadicEvent") -> bool:
        n = max(self.prefix_length, other.prefix_length)
        return self.refined(n) & ~other.refined(n) == 0

    # -- Boolean algebra ------------------------------------------------

    def _binary(self, other: "DyadicEvent", fn) -> "DyadicEvent":
        n = max(self.prefix_length, other.prefix_length)
        return DyadicEvent(*_canonical(n, fn(self.refined(n), other.refined(n))))

    def __and__(self, other: "DyadicEvent") -> "DyadicEvent":
        if self.is_empty or other.is_full:
            return self
        if other.is_empty or self.is_full:
            return other
        return self._binary(other, lambda a, b: a & b)

    def __or__(self, other: "DyadicEvent") -> "DyadicEvent":
        if self.is_full or other.is_empty:
            return self
        if other.is_full or self.is_empty:
            return other
        return self._binary(other, lambda a, b: a | b)

    def __invert__(self) -> "DyadicEvent":
        n = self.prefix_length
        return DyadicEvent(n, self.mask ^ ((1 << (1 << n)) - 1))

    def __repr__(self) -> str:
        return f"DyadicEvent(n={self.prefix_length}, mu={self.measure()})"

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        return {"prefix_length": self.prefix_length, "truth_set": format(self.mask, "x")}

    @classmethod
    def from_json(cls, data: Mapping) -> "DyadicEvent":
        return cls.make(int(data["prefix_length"]), int(data["truth_set"], 16))


def _index(bits: str) -> int:
    index = 0
    for j, b in enumerate(bits):
        if b == "1":
            index |= 1 << j
        elif b != "0":
            raise ValueError(f"not a bit string: {bits!r}")
    return index


FULL = DyadicEvent.full()
EMPTY = DyadicEvent.empty()


def event_from_bit(index: int, value: int, max_bits: int | None = None) -> DyadicEvent:
    return DyadicEvent.bit(index, value, max_bits)


def event_combine(op: str, a: DyadicEvent, b: DyadicEvent | None = None) -> DyadicEvent:
    op = op.upper()
    if op == "NOT":
        return ~a
    if b is None:
        raise ValueError(f"{op} needs two operands")
    if op == "AND":
        return a & b
    if op == "OR":
        return a | b
    raise ValueError(f"unknown event operation {op!r}")


def measure(e: DyadicEvent) -> Fraction:
    return e.measure()


@dataclass(frozen=True)
class EventInterval:
    """A pair lo ⊆ hi bracketing an event that may only be known approximately."""

    lo: DyadicEvent
    hi: DyadicEvent

    def __post_init__(self):
        if not self.lo.issubset(self.hi):
            raise ValueError("interval lower event is not contained in the upper event")

    @classmethod
    def exact(cls, e: DyadicEvent) -> "EventInterval":
        return _of(e, e)

    @classmethod
    def unknown(cls) -> "EventInterval":
        return cls(EMPTY, FULL)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def lo_measure(self) -> Fraction:
        return self.lo.measure()

    @property
    def hi_measure(self) -> Fraction:
        return self.hi.measure()

    def __and__(self, other: "EventInterval") -> "EventInterval":
        return _of(self.lo & other.lo, self.hi & other.hi)

    def __or__(self, other: "EventInterval") -> "EventInterval":
        return _of(self.lo | other.lo, self.hi | other.hi)

    def __invert__(self) -> "EventInterval":
        return _of(~self.hi, ~self.lo)


def _of(lo: DyadicEvent, hi: DyadicEvent) -> EventInterval:
    # skips the containment check; callers guarantee lo ⊆ hi
    out = object.__new__(EventInterval)
    object.__setattr__(out, "lo", lo)
    object.__setattr__(out, "hi", hi)
    return out


EXACT_FULL = EventInterval(FULL, FULL)
EXACT_EMPTY = EventInterval(EMPTY, EMPTY)
UNKNOWN = EventInterval(EMPTY, FULL)


def interval_combine(op: str, a: EventInterval, b: EventInterval | None = None) -> EventInterval:
    op = op.upper()
    if op == "NOT":
        return ~a
    if b is None:
        raise ValueError(f"{op} needs two operands")
    if op == "AND":
        return a & b
    if op == "OR":
        return a | b
    raise ValueError(f"unknown interval operation {op!r}")


def rational_to_json(q: Fraction) -> str:
    """Rationals travel as 'num/den' strings so no consumer loses precision."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def rational_from_json(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den or 1))
