"""Compile PR programs into OR programs that read their coins from the oracle.

A PR program ``f`` of arity ``n`` becomes an OR program ``g`` of arity
``n + 1``; the extra last argument ``k`` is the position of the first
oracle bit ``g`` may read.  ``g`` returns ``pair(value, used)`` where ``used``
is how many bits it consumed, always the contiguous block ``k .. k+used-1``.
Composite schemes thread that offset: every sub-computation starts where
the previous one stopped, so coins are never shared.

``wrap`` fixes ``k = 0`` and keeps the value, giving an OR program whose flat
random function coincides with the PR semantics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import prfun as PR
from .orfun import (
    Comp,
    Leaf,
    Minim,
    Native,
    ORProgram,
    PrimRec,
    Proj,
    Query,
    Succ,
    Zero,
    flatten,
    symbolic_leaves,
)
from .coding import unpair

PAIR, FST, SND, ADD = Native("pair"), Native("fst"), Native("snd"), Native("add")


def _call(prog: ORProgram, *args: ORProgram) -> ORProgram:
    return Comp(prog, tuple(args))


class _Lets:
    """Builds ``let v1 = e1 in ... let vm = em in body`` as nested compositions.

    Each binding appends one argument position; ``var(i)`` projects at the
    current arity.
    """

    def __init__(self, arity: int):
        self.arity = arity
        self.bindings: list[tuple[int, ORProgram]] = []

    def var(self, i: int) -> ORProgram:
        return Proj(self.arity, i)

    def vars(self, positions) -> list[ORProgram]:
        return [self.var(i) for i in positions]

    def bind(self, rhs: ORProgram) -> int:
        self.bindings.append((self.arity, rhs))
        self.arity += 1
        return self.arity

    def build(self, body: ORProgram) -> ORProgram:
        for arity, rhs in reversed(self.bindings):
            keep = tuple(Proj(arity, i) for i in range(1, arity + 1))
            body = Comp(body, keep + (rhs,))
        return body


@dataclass(frozen=True)
class CompiledOR:
    program: ORProgram
    source_arity: int

    @property
    def arity(self) -> int:
        return self.source_arity + 1


def _compile(p: PR.PRProgram) -> ORProgram:
    if isinstance(p, PR.Z):
        return Zero(2)  # pair(0, 0) = 0
    if isinstance(p, PR.S):
        return _call(PAIR, _call(Succ(), Proj(2, 1)), Zero(2))
    if isinstance(p, PR.Proj):
        return _call(PAIR, Proj(p.n + 1, p.i), Zero(p.n + 1))
    if isinstance(p, PR.Rand):
        coin = _call(Query(), Proj(2, 2))
        return _call(PAIR, _call(ADD, Proj(2, 1), coin), _call(Succ(), Zero(2)))
    if isinstance(p, PR.Comp):
        return _compile_comp(p)
    if isinstance(p, PR.PrimRec):
        return _compile_primrec(p)
    if isinstance(p, PR.Minim):
        return _compile_minim(p)
    raise TypeError(f"not a PR program: {p!r}")


def _compile_comp(p: PR.Comp) -> ORProgram:
    n = p.arity
    ctx = _Lets(n + 1)
    xs = range(1, n + 1)
    offset = n + 1  # position of k
    inner = []
    for g in p.gs:
        at = ctx.bind(_call(_compile(g), *ctx.vars(xs), ctx.var(offset)))
        inner.append(at)
        offset = ctx.bind(_call(ADD, ctx.var(offset), _call(SND, ctx.var(at))))
    outer_args = [_call(FST, ctx.var(at)) for at in inner]
    result = ctx.bind(_call(_compile(p.f), *outer_args, ctx.var(offset)))
    used = _call(SND, ctx.var(inner[0]))
    for at in inner[1:]:
        used = _call(ADD, used, _call(SND, ctx.var(at)))
    return ctx.build(_call(PAIR, _call(FST, ctx.var(result)), _call(ADD, _call(SND, ctx.var(result)), used)))


def _compile_primrec(p: PR.PrimRec) -> ORProgram:
    # source: h(xs, 0) = f(xs); h(xs, y+1) = g(xs, y, h(xs, y)); n = |xs|
    n = p.f.arity
    base = _compile(p.f)  # (xs, k)
    # step over (prev, i, xs, k), prev = pair(value so far, bits used so far)
    ctx = _Lets(n + 3)
    prev, i, k = 1, 2, n + 3
    xs = range(3, n + 3)
    start = _call(ADD, ctx.var(k), _call(SND, ctx.var(prev)))
    step_out = ctx.bind(_call(_compile(p.g), *ctx.vars(xs), ctx.var(i), _call(FST, ctx.var(prev)), start))
    used = _call(ADD, _call(SND, ctx.var(prev)), _call(SND, ctx.var(step_out)))
    step = ctx.build(_call(PAIR, _call(FST, ctx.var(step_out)), used))
    loop = PrimRec(base, step)  # (y, xs, k)
    a = n + 2
    return Comp(loop, (Proj(a, n + 1), *(Proj(a, j) for j in range(1, n + 1)), Proj(a, a)))


def _compile_minim(p: PR.Minim) -> ORProgram:
    # source: least z with f(xs, z) = 0, every trial on fresh coins; n = |xs|
    n = p.arity
    body = _compile(p.f)  # (xs, z, k)

    # acc(z, xs, k): bits used by the trials before z
    a = n + 3  # (prev, z, xs, k)
    trial = _call(body, *(Proj(a, j) for j in range(3, n + 3)), Proj(a, 2), _call(ADD, Proj(a, a), Proj(a, 1)))
    acc = PrimRec(Zero(n + 1), _call(ADD, Proj(a, 1), _call(SND, trial)))

    # test(xs, k, z) = value of trial z
    b = n + 2
    acc_at = Comp(acc, (Proj(b, b), *(Proj(b, j) for j in range(1, n + 1)), Proj(b, n + 1)))
    test_trial = _call(body, *(Proj(b, j) for j in range(1, n + 1)), Proj(b, b), _call(ADD, Proj(b, n + 1), acc_at))
    search = Minim(_call(FST, test_trial))  # (xs, k)

    ctx = _Lets(n + 1)
    xs, k = range(1, n + 1), n + 1
    z = ctx.bind(search)
    spent = ctx.bind(Comp(acc, (ctx.var(z), *ctx.vars(xs), ctx.var(k))))
    last = ctx.bind(_call(body, *ctx.vars(xs), ctx.var(z), _call(ADD, ctx.var(k), ctx.var(spent))))
    return ctx.build(_call(PAIR, ctx.var(z), _call(ADD, ctx.var(spent), _call(SND, ctx.var(last)))))


def compile_pr_to_or(p: PR.PRProgram) -> CompiledOR:
    return CompiledOR(_compile(p), p.arity)


def wrap(c: CompiledOR) -> ORProgram:
    """The value component of ``c`` run from oracle position 0."""
    n = c.source_arity
    keep = tuple(Proj(n, i) for i in range(1, n + 1))
    return _call(FST, Comp(c.program, keep + (Zero(n),)))


# ------------------------------------------------------------ tree checks


@dataclass(frozen=True)
class TreeReport:
    leaves: int
    resolved: int
    contiguous: bool
    prefix_free: bool
    measure_matches: bool

    @property
    def ok(self) -> bool:
        return self.contiguous and self.prefix_free and self.measure_matches


def consumed_strings(c: CompiledOR, args: Sequence[int], k: int = 0, fuel: int = 1000) -> list[tuple[Leaf, str]]:
    """Resolved branches of ``c(args, k)`` with the bit string each consumed."""
    out = []
    for leaf in symbolic_leaves(c.program, list(args) + [k], fuel):
        if leaf.value is None:
            continue
        used = unpair(leaf.value)[1]
        bits = leaf.constraints
        out.append((leaf, "".join(str(bits.get(i, "?")) for i in range(k, k + used))))
    return out


def check_tree(c: CompiledOR, args: Sequence[int], k: int = 0, fuel: int = 1000) -> TreeReport:
    """Offset discipline, prefix-freeness and per-branch measure of one run."""
    leaves = list(symbolic_leaves(c.program, list(args) + [k], fuel))
    branches = consumed_strings(c, args, k, fuel)
    contiguous = all(
        set(leaf.constraints) == set(range(k, k + len(t))) and "?" not in t for leaf, t in branches
    )
    strings = sorted(t for _, t in branches)
    prefix_free = all(not b.startswith(a) for a, b in zip(strings, strings[1:]))
    measure = all(leaf.weight == 2 ** -len(t) for leaf, t in branches)
    return TreeReport(len(leaves), len(branches), contiguous, prefix_free, measure)


@dataclass(frozen=True)
class PreservationReport:
    args: tuple[int, ...]
    outputs: tuple[int, ...]
    flat: "PR.PseudoDistribution"
    source: "PR.PseudoDistribution"

    @property
    def mismatches(self) -> list[int]:
        return [y for y in self.outputs if self.flat[y] != self.source[y]]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "args": list(self.args),
            "outputs_checked": list(self.outputs),
            "flattened": self.flat.to_json(),
            "source": self.source.to_json(),
            "mismatches": self.mismatches,
            "ok": self.ok,
        }


def check_preservation(
    p: PR.PRProgram, args: Sequence[int], max_output: int = 8, depth: int = 12, fuel: int = 200
) -> PreservationReport:
    """Compare the flattened compiled program with the PR semantics.

    Weights are compared on outputs ``0..max_output``; the budgets must be
    large enough that both sides have fully resolved those outputs.
    """
    flat = flatten(wrap(compile_pr_to_or(p)), args, fuel)
    source = PR.eval_pr(p, args, depth)
    return PreservationReport(tuple(args), tuple(range(max_output + 1)), flat, source)
