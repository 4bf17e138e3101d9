"""A typed PCF with oracle access: types, terms, type checking and evaluation.

Terms may mention the free oracle variable ``o : nat -> bool``; evaluation
answers each call ``o n`` from an :class:`~mqpa.oracles.Oracle` and records
the queried index.  Reduction is call by name: arguments and pair components
are passed as unevaluated thunks, and only the selected branch of an ``if``
is evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .errors import CapacityError, EvaluationError, FuelExhausted, PCFTypeError, SyntaxError_
from .events import EMPTY, DyadicEvent, EventInterval, _of, default_max_bits
from .oracles import NeedBit, Oracle, PartialOracle
from .sexpr import Atom, position, read_one

# ------------------------------------------------------------------ types


class PCFType:
    __slots__ = ()


@dataclass(frozen=True)
class Nat(PCFType):
    def __str__(self):
        return "nat"


@dataclass(frozen=True)
class Bool(PCFType):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class Prod(PCFType):
    left: PCFType
    right: PCFType

    def __str__(self):
        return f"(* {self.left} {self.right})"


@dataclass(frozen=True)
class Arrow(PCFType):
    arg: PCFType
    result: PCFType

    def __str__(self):
        if self == O:
            return "O"
        return f"(-> {self.arg} {self.result})"


NAT, BOOL = Nat(), Bool()
O = Arrow(NAT, BOOL)


def arrows(*types: PCFType) -> PCFType:
    """``arrows(a, b, c)`` is ``a -> (b -> c)``."""
    out = types[-1]
    for t in reversed(types[:-1]):
        out = Arrow(t, out)
    return out


# ------------------------------------------------------------------ terms


class PCFTerm:
    __slots__ = ()

    def __str__(self):
        return print_pcf(self)


@dataclass(frozen=True)
class Var(PCFTerm):
    name: str


@dataclass(frozen=True)
class OracleVar(PCFTerm):
    pass


@dataclass(frozen=True)
class Lam(PCFTerm):
    var: str
    type: PCFType
    body: PCFTerm


@dataclass(frozen=True)
class App(PCFTerm):
    fn: PCFTerm
    arg: PCFTerm


@dataclass(frozen=True)
class Pair(PCFTerm):
    left: PCFTerm
    right: PCFTerm


@dataclass(frozen=True)
class Proj1(PCFTerm):
    body: PCFTerm


@dataclass(frozen=True)
class Proj2(PCFTerm):
    body: PCFTerm


@dataclass(frozen=True)
class Numeral(PCFTerm):
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("numerals are non-negative")


@dataclass(frozen=True)
class BoolConst(PCFTerm):
    value: bool


@dataclass(frozen=True)
class SuccT(PCFTerm):
    body: PCFTerm


@dataclass(frozen=True)
class PredT(PCFTerm):
    body: PCFTerm


@dataclass(frozen=True)
class IsZero(PCFTerm):
    body: PCFTerm


@dataclass(frozen=True)
class If(PCFTerm):
    cond: PCFTerm
    then: PCFTerm
    orelse: PCFTerm


@dataclass(frozen=True)
class Fix(PCFTerm):
    body: PCFTerm


TRUE, FALSE = BoolConst(True), BoolConst(False)
ORACLE = OracleVar()


def apply(fn: PCFTerm, *args: PCFTerm) -> PCFTerm:
    for a in args:
        fn = App(fn, a)
    return fn


def query(index: PCFTerm | int) -> PCFTerm:
    """The oracle call ``o index``."""
    return App(ORACLE, Numeral(index) if isinstance(index, int) else index)


def free_vars(m: PCFTerm) -> frozenset[str]:
    if isinstance(m, Var):
        return frozenset({m.name})
    if isinstance(m, Lam):
        return free_vars(m.body) - {m.var}
    return frozenset().union(*(free_vars(c) for c in _children(m)))


def _children(m: PCFTerm) -> tuple[PCFTerm, ...]:
    if isinstance(m, App):
        return (m.fn, m.arg)
    if isinstance(m, Pair):
        return (m.left, m.right)
    if isinstance(m, If):
        return (m.cond, m.then, m.orelse)
    if isinstance(m, (Proj1, Proj2, SuccT, PredT, IsZero, Fix)):
        return (m.body,)
    if isinstance(m, Lam):
        return (m.body,)
    return ()


def mentions_oracle(m: PCFTerm) -> bool:
    return isinstance(m, OracleVar) or any(mentions_oracle(c) for c in _children(m))


# ------------------------------------------------------------- typing


def typecheck(m: PCFTerm, ctx: Mapping[str, PCFType] | None = None) -> PCFType:
    """The simple type of ``m``; raises :class:`PCFTypeError` with a path."""
    return _type(m, dict(ctx or {}), ())


def _name(m: PCFTerm) -> str:
    return type(m).__name__.lower()


def _expect(got: PCFType, want: PCFType, path, what: str) -> None:
    if got != want:
        raise PCFTypeError(f"{what}: expected {want}, got {got}", path)


def _type(m: PCFTerm, ctx: dict, path: tuple) -> PCFType:
    here = path + (_name(m),)
    if isinstance(m, Var):
        if m.name not in ctx:
            raise PCFTypeError(f"unbound variable {m.name!r}", here)
        return ctx[m.name]
    if isinstance(m, OracleVar):
        return O
    if isinstance(m, Numeral):
        return NAT
    if isinstance(m, BoolConst):
        return BOOL
    if isinstance(m, Lam):
        return Arrow(m.type, _type(m.body, {**ctx, m.var: m.type}, here))
    if isinstance(m, App):
        fn = _type(m.fn, ctx, here + ("fn",))
        if not isinstance(fn, Arrow):
            raise PCFTypeError(f"applying a non-function of type {fn}", here)
        _expect(_type(m.arg, ctx, here + ("arg",)), fn.arg, here, "argument")
        return fn.result
    if isinstance(m, Pair):
        return Prod(_type(m.left, ctx, here + ("1",)), _type(m.right, ctx, here + ("2",)))
    if isinstance(m, (Proj1, Proj2)):
        t = _type(m.body, ctx, here)
        if not isinstance(t, Prod):
            raise PCFTypeError(f"projecting from non-product {t}", here)
        return t.left if isinstance(m, Proj1) else t.right
    if isinstance(m, (SuccT, PredT)):
        _expect(_type(m.body, ctx, here), NAT, here, "operand")
        return NAT
    if isinstance(m, IsZero):
        t = _type(m.body, ctx, here)
        if t not in (NAT, BOOL):
            raise PCFTypeError(f"iszero of {t}", here)
        return BOOL
    if isinstance(m, If):
        _expect(_type(m.cond, ctx, here + ("cond",)), BOOL, here, "condition")
        a = _type(m.then, ctx, here + ("then",))
        _expect(_type(m.orelse, ctx, here + ("else",)), a, here, "else branch")
        return a
    if isinstance(m, Fix):
        t = _type(m.body, ctx, here)
        if not isinstance(t, Arrow) or t.arg != t.result:
            raise PCFTypeError(f"fix of {t}, expected an endofunction", here)
        return t.arg
    raise TypeError(f"not a PCF term: {m!r}")


# ------------------------------------------------------------- evaluation


class _Thunk:
    __slots__ = ("term", "env")

    def __init__(self, term: PCFTerm, env: dict):
        self.term = term
        self.env = env


@dataclass(frozen=True)
class _NatV:
    n: int


@dataclass(frozen=True)
class _BoolV:
    b: bool


@dataclass(frozen=True)
class _PairV:
    left: _Thunk
    right: _Thunk


@dataclass(frozen=True, eq=False)
class _Closure:
    var: str
    body: PCFTerm
    env: dict
    type: PCFType


class _OracleV:
    pass


_ORACLE_V = _OracleV()


@dataclass(frozen=True)
class FunctionValue:
    """The normal form of a function-typed result, kept opaque."""

    closure: object

    def __str__(self):
        return "<fun>"


NormalForm = Union[Numeral, BoolConst, Pair, FunctionValue]


class _Machine:
    def __init__(self, oracle: Oracle, fuel: int):
        if fuel < 1:
            raise ValueError("fuel must be positive")
        self.oracle = oracle
        self.fuel = fuel
        self.trace: list[int] = []

    def burn(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("PCF evaluation ran out of fuel")

    def run(self, term: PCFTerm, env: dict):
        # tail positions loop instead of recursing
        while True:
            if isinstance(term, Var):
                try:
                    thunk = env[term.name]
                except KeyError:
                    raise EvaluationError(f"unbound variable {term.name!r}") from None
                term, env = thunk.term, thunk.env
            elif isinstance(term, OracleVar):
                return _ORACLE_V
            elif isinstance(term, Numeral):
                return _NatV(term.value)
            elif isinstance(term, BoolConst):
                return _BoolV(term.value)
            elif isinstance(term, Lam):
                return _Closure(term.var, term.body, env, term.type)
            elif isinstance(term, Pair):
                return _PairV(_Thunk(term.left, env), _Thunk(term.right, env))
            elif isinstance(term, App):
                self.burn()
                fn = self.run(term.fn, env)
                if isinstance(fn, _OracleV):
                    index = self.nat(term.arg, env)
                    self.trace.append(index)
                    return _BoolV(self.oracle.get(index) == 1)
                if not isinstance(fn, _Closure):
                    raise EvaluationError(f"stuck: applying {fn}")
                term, env = fn.body, {**fn.env, fn.var: _Thunk(term.arg, env)}
            elif isinstance(term, (Proj1, Proj2)):
                pair = self.run(term.body, env)
                if not isinstance(pair, _PairV):
                    raise EvaluationError("stuck: projecting from a non-pair")
                part = pair.left if isinstance(term, Proj1) else pair.right
                term, env = part.term, part.env
            elif isinstance(term, SuccT):
                return _NatV(self.nat(term.body, env) + 1)
            elif isinstance(term, PredT):
                return _NatV(max(self.nat(term.body, env) - 1, 0))
            elif isinstance(term, IsZero):
                v = self.run(term.body, env)
                if isinstance(v, _NatV):
                    return _BoolV(v.n == 0)
                if isinstance(v, _BoolV):
                    return _BoolV(not v.b)  # false is the bit 0
                raise EvaluationError("stuck: iszero of a non-numeral")
            elif isinstance(term, If):
                c = self.run(term.cond, env)
                if not isinstance(c, _BoolV):
                    raise EvaluationError("stuck: if on a non-boolean")
                term = term.then if c.b else term.orelse
            elif isinstance(term, Fix):
                self.burn()
                term = App(term.body, term)
            else:
                raise TypeError(f"not a PCF term: {term!r}")

    def nat(self, term: PCFTerm, env: dict) -> int:
        v = self.run(term, env)
        if not isinstance(v, _NatV):
            raise EvaluationError("stuck: expected a numeral")
        return v.n

    def readback(self, v) -> NormalForm:
        if isinstance(v, _NatV):
            return Numeral(v.n)
        if isinstance(v, _BoolV):
            return BoolConst(v.b)
        if isinstance(v, _PairV):
            return Pair(self.readback(self.run(v.left.term, v.left.env)), self.readback(self.run(v.right.term, v.right.env)))
        return FunctionValue(v)


def _close(env: Mapping[str, PCFTerm] | None) -> dict:
    return {k: _Thunk(v, {}) for k, v in (env or {}).items()}


def traced_eval(m: PCFTerm, oracle: Oracle, fuel: int = 10_000, env=None) -> tuple[NormalForm, list[int]]:
    """Full normal form of ``m`` together with the oracle indices read."""
    machine = _Machine(oracle, fuel)
    value = machine.readback(machine.run(m, _close(env)))
    return value, machine.trace


def eval_pcf(m: PCFTerm, oracle: Oracle, fuel: int = 10_000, env=None) -> NormalForm:
    """Evaluate ``m`` with ``o`` answered by ``oracle``.

    First-order results (numerals, booleans and pairs of them) are returned
    fully evaluated; function results become a :class:`FunctionValue`.
    """
    return traced_eval(m, oracle, fuel, env)[0]


def eval_nat(m: PCFTerm, oracle: Oracle, fuel: int = 10_000) -> int:
    machine = _Machine(oracle, fuel)
    return machine.nat(m, {})


# ------------------------------------------------------------- trace events


def trace_leaves(m: PCFTerm, fuel: int = 10_000, max_bits: int | None = None):
    """Yield ``(assignment, normal form or None)`` over the query tree of ``m``.

    ``None`` marks a branch on which the fuel ran out.  Branches are disjoint
    cylinders covering the whole oracle space.
    """
    limit = default_max_bits() if max_bits is None else max_bits
    stack = [PartialOracle()]
    while stack:
        omega = stack.pop()
        try:
            value = eval_pcf(m, omega, fuel)
        except FuelExhausted:
            value = None
        except NeedBit as need:
            if need.oracle is not omega:
                raise
            if need.index >= limit:
                raise CapacityError(f"trace reads bit {need.index}, beyond max_bits={limit}") from None
            stack.extend((omega.extended(need.index, 1), omega.extended(need.index, 0)))
            continue
        yield dict(omega.assignment), value


def trace_event(m: PCFTerm, n: NormalForm, fuel: int = 10_000, max_bits: int | None = None) -> EventInterval:
    """Oracles on which ``m`` converges to ``n``, bracketed by the fuel."""
    lo, unresolved = EMPTY, EMPTY
    for assignment, value in trace_leaves(m, fuel, max_bits):
        cyl = DyadicEvent.from_constraints(assignment, max_bits)
        if value is None:
            unresolved = unresolved | cyl
        elif value == n:
            lo = lo | cyl
    return _of(lo, lo | unresolved)


# ------------------------------------------------------------- syntax


def _fail(msg, datum):
    raise SyntaxError_(msg, *position(datum))


def parse_type(text_or_datum) -> PCFType:
    d = read_one(text_or_datum) if isinstance(text_or_datum, str) else text_or_datum
    if isinstance(d, Atom):
        table = {"nat": NAT, "bool": BOOL, "O": O}
        if str(d) not in table:
            _fail(f"unknown type {d!r}", d)
        return table[str(d)]
    if len(d) >= 3 and d[0] == "->":
        return arrows(*(parse_type(x) for x in d[1:]))
    if len(d) == 3 and d[0] == "*":
        return Prod(parse_type(d[1]), parse_type(d[2]))
    _fail("malformed type", d)


_UNARY = {"p1": Proj1, "p2": Proj2, "fix": Fix, "iszero": IsZero, "succ": SuccT, "pred": PredT}


def _term(d, bound: frozenset) -> PCFTerm:
    if isinstance(d, Atom):
        s = str(d)
        if s.isdigit():
            return Numeral(int(s))
        if s in ("true", "false"):
            return BoolConst(s == "true")
        if s == "o" and s not in bound:
            return ORACLE
        if not s.isidentifier():
            _fail(f"bad identifier {s!r}", d)
        return Var(s)
    if not d:
        _fail("empty form", d)
    head = str(d[0]) if isinstance(d[0], Atom) else None
    args = d[1:]
    if head == "lam":
        if len(args) != 3 or not isinstance(args[0], Atom):
            _fail("expected (lam x type body)", d)
        x = str(args[0])
        return Lam(x, parse_type(args[1]), _term(args[2], bound | {x}))
    if head == "app":
        if len(args) < 2:
            _fail("expected (app M N ...)", d)
        return apply(*(_term(a, bound) for a in args))
    if head == "pair":
        if len(args) != 2:
            _fail("expected (pair M N)", d)
        return Pair(_term(args[0], bound), _term(args[1], bound))
    if head == "if":
        if len(args) != 3:
            _fail("expected (if C M N)", d)
        return If(*(_term(a, bound) for a in args))
    if head in _UNARY:
        if len(args) != 1:
            _fail(f"expected ({head} M)", d)
        return _UNARY[head](_term(args[0], bound))
    if head == "o":
        if len(args) != 1:
            _fail("expected (o M)", d)
        return App(Var("o") if "o" in bound else ORACLE, _term(args[0], bound))
    _fail(f"unknown form {head!r}", d)


def parse_pcf(text: str) -> PCFTerm:
    return _term(read_one(text), frozenset())


_NAMES = {v: k for k, v in _UNARY.items()}


def print_pcf(m: PCFTerm) -> str:
    if isinstance(m, Var):
        return m.name
    if isinstance(m, OracleVar):
        return "o"
    if isinstance(m, Numeral):
        return str(m.value)
    if isinstance(m, BoolConst):
        return "true" if m.value else "false"
    if isinstance(m, FunctionValue):
        return "<fun>"
    if isinstance(m, Lam):
        return f"(lam {m.var} {m.type} {print_pcf(m.body)})"
    if isinstance(m, App):
        if isinstance(m.fn, OracleVar) or m.fn == Var("o"):
            return f"(o {print_pcf(m.arg)})"
        return f"(app {print_pcf(m.fn)} {print_pcf(m.arg)})"
    if isinstance(m, Pair):
        return f"(pair {print_pcf(m.left)} {print_pcf(m.right)})"
    if isinstance(m, If):
        return f"(if {print_pcf(m.cond)} {print_pcf(m.then)} {print_pcf(m.orelse)})"
    return f"({_NAMES[type(m)]} {print_pcf(m.body)})"
