"""Bit sources standing in for a point of the Cantor space."""
from __future__ import annotations

import hashlib
import struct
from abc import ABC, abstractmethod
from typing import Mapping

from .errors import OracleError

_MASK64 = (1 << 64) - 1


class Oracle(ABC):
    @abstractmethod
    def get(self, index: int) -> int:
        """The bit at position ``index``; deterministic per instance."""

    def prefix(self, n: int) -> str:
        return "".join(str(self.get(i)) for i in range(n))


class SeededOracle(Oracle):
    """Pseudo-random bits from a counter-based hash.

    Bit ``i`` depends only on ``(seed, stream, i)``, so independent streams
    can be handed to parallel workers without coordination.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed & _MASK64
        self.stream = stream & _MASK64
        self._blocks: dict[int, int] = {}

    def get(self, index: int) -> int:
        block, offset = divmod(index, 64)
        word = self._blocks.get(block)
        if word is None:
            digest = hashlib.blake2b(
                struct.pack("<QQQ", self.seed, self.stream, block), digest_size=8
            ).digest()
            word = self._blocks[block] = int.from_bytes(digest, "little")
        return word >> offset & 1

    def __repr__(self):
        return f"SeededOracle(seed={self.seed:#x}, stream={self.stream})"


class ExplicitOracle(Oracle):
    """A literal bit prefix followed by a fixed tail.

    ``tail`` is ``"zeros"``, ``"ones"`` or ``"error"`` (querying past the
    prefix raises :class:`OracleError`).
    """

    def __init__(self, prefix: str = "", tail: str = "zeros"):
        if any(c not in "01" for c in prefix):
            raise ValueError(f"not a bit string: {prefix!r}")
        if tail not in ("zeros", "ones", "error"):
            raise ValueError(f"unknown tail policy {tail!r}")
        self.bits = prefix
        self.tail = tail

    def get(self, index: int) -> int:
        if index < len(self.bits):
            return int(self.bits[index])
        if self.tail == "error":
            raise OracleError(f"bit {index} queried beyond explicit prefix of length {len(self.bits)}")
        return 1 if self.tail == "ones" else 0

    def __repr__(self):
        return f"ExplicitOracle({self.bits!r}, tail={self.tail!r})"


class TracingOracle(Oracle):
    """Wraps another oracle and records every query in order."""

    def __init__(self, base: Oracle):
        self.base = base
        self.trace: list[int] = []

    def get(self, index: int) -> int:
        self.trace.append(index)
        return self.base.get(index)

    @property
    def footprint(self) -> dict[int, int]:
        return {i: self.base.get(i) for i in self.trace}


class NeedBit(Exception):
    """Raised by :class:`PartialOracle` when an unassigned bit is read."""

    def __init__(self, oracle: "PartialOracle", index: int):
        super().__init__(index)
        self.oracle = oracle
        self.index = index


class PartialOracle(Oracle):
    """An oracle known only on a finite set of positions.

    Reading any other position raises :class:`NeedBit`, which lets callers
    explore the decision tree of a computation by re-running it on both
    extensions of the current assignment.
    """

    def __init__(self, assignment: Mapping[int, int] | None = None):
        self.assignment = dict(assignment or {})

    def get(self, index: int) -> int:
        try:
            return self.assignment[index]
        except KeyError:
            raise NeedBit(self, index) from None

    def extended(self, index: int, value: int) -> "PartialOracle":
        return PartialOracle({**self.assignment, index: value})
