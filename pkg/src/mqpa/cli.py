"""Command-line interface: ``mqpa <command> [options] FILE ...``.

Every command prints one JSON document (or ``key: value`` lines with
``--format text``).  Exit status is 0 on success, 1 when a verification
finds a mismatch and 2 on bad input.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import lang as L
from .arith import MISMATCH, arithmetize, table_to_json, verify_arithmetization, verify_table
from .coding import string_code
from .corpus import build_imt, build_imt_bounded, build_rw_bounded, rw_return_event
from .errors import MQPAError
from .events import HARD_MAX_BITS, default_max_bits, rational_to_json
from .oracles import ExplicitOracle, SeededOracle
from .orfun import flatten, parse_or, print_or, traced_run
from .pcf import parse_pcf
from .prfun import eval_pr, parse_pr, print_pr
from .prtoor import check_preservation, compile_pr_to_or
from .realize import desugar, realizes
from .semantics import Budget, estimate_measure, eval_exact

DEFAULT_SEED = 0xDA1A


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...]
    budget: Budget
    fuel: int
    samples: int
    seed: int
    format: str
    out: Optional[str]


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


# ------------------------------------------------------------ helpers


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _ints(text: Optional[str]) -> list[int]:
    if text is None or not text.strip():
        return []
    try:
        values = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"expected comma-separated naturals, got {text!r}") from None
    if any(v < 0 for v in values):
        raise InputError("arguments must be natural numbers")
    return values


def _oracle(args, cfg: RunConfig):
    if args.oracle is None:
        return SeededOracle(cfg.seed)
    try:
        return ExplicitOracle(args.oracle, tail=args.tail)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _short_interval(iv) -> dict:
    return {
        "lo_measure": rational_to_json(iv.lo_measure),
        "hi_measure": rational_to_json(iv.hi_measure),
        "exact": iv.is_exact,
    }


# ------------------------------------------------------------ commands


def cmd_eval(args, cfg):
    f = L.parse_formula(_read(cfg.inputs[0]))
    return _short_interval(eval_exact(f, budget=cfg.budget)), 0


def cmd_estimate(args, cfg):
    f = L.parse_formula(_read(cfg.inputs[0]))
    est = estimate_measure(f, samples=cfg.samples, seed=cfg.seed, budget=cfg.budget, workers=args.workers)
    return est.to_json(), 0


def cmd_run_pr(args, cfg):
    p = parse_pr(_read(cfg.inputs[0]))
    dist = eval_pr(p, _ints(args.args), args.depth)
    return {"program": print_pr(p), "args": _ints(args.args), "distribution": dist.to_json()}, 0


def cmd_run_or(args, cfg):
    p = parse_or(_read(cfg.inputs[0]))
    value, trace = traced_run(p, _ints(args.args), _oracle(args, cfg), cfg.fuel)
    return {"value": value, "trace": trace, "fuel_exhausted": value is None}, 0


def cmd_flatten(args, cfg):
    p = parse_or(_read(cfg.inputs[0]))
    return flatten(p, _ints(args.args), cfg.fuel).to_json(), 0


def cmd_compile_pr(args, cfg):
    p = parse_pr(_read(cfg.inputs[0]))
    compiled = compile_pr_to_or(p)
    text = print_or(compiled.program)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    grids = [tuple(_ints(args.args))] if args.args is not None else itertools.product(range(3), repeat=p.arity)
    reports = [check_preservation(p, list(g), args.max_output, args.depth, cfg.fuel).to_json() for g in grids]
    ok = all(r["ok"] for r in reports)
    return {"program": text, "arity": compiled.arity, "preservation": reports, "ok": ok}, 0 if ok else 1


def cmd_arithmetize(args, cfg):
    p = parse_or(_read(cfg.inputs[0]))
    r = arithmetize(p, args.arity)
    return {
        "inputs": list(r.inputs),
        "output": r.output,
        "sigma01": r.sigma01,
        "formula": L.print_formula(r.formula),
        "normalized": L.print_formula(r.normalized),
    }, 0


def cmd_verify_arith(args, cfg):
    p = parse_or(_read(cfg.inputs[0]))
    if args.y is not None:
        report = verify_arithmetization(p, _ints(args.args), args.y, cfg.fuel, cfg.budget)
        return report.to_json(), 1 if report.verdict == MISMATCH else 0
    reports = verify_table(p, range(args.range + 1), range(args.range + 1), cfg.fuel, cfg.budget, args.arity)
    table = table_to_json(p, reports)
    return table, 0 if table["ok"] else 1


def cmd_check_realizer(args, cfg):
    m = parse_pcf(_read(cfg.inputs[0]))
    f = desugar(L.parse_formula(_read(cfg.inputs[1])))
    verdict = realizes(
        m, _oracle(args, cfg), f, cfg.fuel, cfg.budget, exact_limit=args.exact_limit, samples=cfg.samples, seed=cfg.seed
    )
    return verdict.to_json(), 0


def _series(make, caps, cfg):
    rows = []
    for cap in caps:
        f = make(cap)
        rows.append(
            {
                "cap": cap,
                "exact": _short_interval(eval_exact(f, budget=cfg.budget)),
                "estimate": estimate_measure(f, samples=cfg.samples, seed=cfg.seed, budget=cfg.budget).to_json(),
            }
        )
    return rows


def cmd_corpus(args, cfg):
    if args.which == "imt":
        n = string_code(args.pattern)
        bounded = build_imt_bounded(n, args.y, args.zcap)
        caps = sorted({1, 2, 4, args.zcap} - {0})  # nested events under common random numbers
        return {
            "statement": "imt",
            "pattern": args.pattern,
            "code": n,
            "y": args.y,
            "zcap": args.zcap,
            "formula_size": L.size(build_imt(n)),
            "bounded": _short_interval(eval_exact(bounded, budget=cfg.budget)),
            "truncations": _series(lambda z: build_imt_bounded(n, args.y, z), caps, cfg),
        }, 0
    event = rw_return_event(args.steps)
    # x = 1 forces a return after at least one move; same seed per cap, so the events are nested and so are the counts
    caps = sorted({2, 4, args.ycap} - {0})
    return {
        "statement": "rw",
        "steps": args.steps,
        "return_event": _short_interval(eval_exact(event, budget=cfg.budget)),
        "truncations": _series(lambda y: build_rw_bounded(1, y), caps, cfg),
    }, 0


COMMANDS = {
    "eval": cmd_eval,
    "estimate": cmd_estimate,
    "run-pr": cmd_run_pr,
    "run-or": cmd_run_or,
    "flatten": cmd_flatten,
    "compile-pr": cmd_compile_pr,
    "arithmetize": cmd_arithmetize,
    "verify-arith": cmd_verify_arith,
    "check-realizer": cmd_check_realizer,
    "corpus": cmd_corpus,
}


# ------------------------------------------------------------ parsing


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, default=8, help="quantifier cap for unbounded quantifiers")
    common.add_argument("--fuel", type=int, default=1000, help="evaluation steps per run")
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    common.add_argument("--max-bits", type=int, default=None, help=f"oracle bits per event (at most {HARD_MAX_BITS})")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", default=None, help="write the report (or compiled program) here")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mqpa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, files):
        p = sub.add_parser(name, parents=[common], help=help_)
        for f in files:
            p.add_argument(f)
        return p

    add("eval", "exact measure of a formula", ["formula"])
    add("estimate", "Monte Carlo estimate of a formula", ["formula"]).add_argument("--workers", type=int, default=1)
    p = add("run-pr", "output distribution of a PR program", ["program"])
    p.add_argument("--args", default="")
    p.add_argument("--depth", type=int, default=16)
    for name, help_ in (("run-or", "run an OR program on one oracle"), ("flatten", "output distribution of an OR program")):
        p = add(name, help_, ["program"])
        p.add_argument("--args", default="")
        if name == "run-or":
            p.add_argument("--oracle", default=None, help="explicit bit prefix (default: seeded oracle)")
            p.add_argument("--tail", choices=("zeros", "ones", "error"), default="zeros")
    p = add("compile-pr", "compile PR to OR and check preservation", ["program"])
    p.add_argument("--args", default=None, help="check one argument tuple (default: all in 0..2)")
    p.add_argument("--max-output", type=int, default=8)
    p.add_argument("--depth", type=int, default=12)
    add("arithmetize", "formula representing an OR program", ["program"]).add_argument("--arity", type=int, default=None)
    p = add("verify-arith", "compare a program with its formula", ["program"])
    p.add_argument("--args", default="")
    p.add_argument("--y", type=int, default=None)
    p.add_argument("--range", type=int, default=4, help="with no --y: check all args and y up to this value")
    p.add_argument("--arity", type=int, default=None)
    p = add("check-realizer", "decide whether a PCF term realizes a formula", ["term", "formula"])
    p.add_argument("--oracle", default=None)
    p.add_argument("--tail", choices=("zeros", "ones", "error"), default="zeros")
    p.add_argument("--exact-limit", action="store_true")
    p = sub.add_parser("corpus", parents=[common], help="bounded monkey and random-walk instances")
    p.add_argument("which", choices=("imt", "rw"))
    p.add_argument("--pattern", default="1")
    p.add_argument("--y", type=int, default=0)
    p.add_argument("--zcap", type=int, default=10)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--ycap", type=int, default=4)
    return parser


def _config(ns) -> RunConfig:
    max_bits = default_max_bits() if ns.max_bits is None else ns.max_bits
    if not 0 <= max_bits <= HARD_MAX_BITS:
        raise InputError(f"--max-bits must lie in [0, {HARD_MAX_BITS}]")
    if ns.budget < 1 or ns.fuel < 1 or ns.samples < 1:
        raise InputError("--budget, --fuel and --samples must be positive")
    inputs = tuple(getattr(ns, k) for k in ("formula", "program", "term") if getattr(ns, k, None))
    if ns.command == "check-realizer":
        inputs = (ns.term, ns.formula)
    return RunConfig(ns.command, inputs, Budget(ns.budget, max_bits), ns.fuel, ns.samples, ns.seed, ns.format, ns.out)


def _render(obj, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, separators=(",", ":")) + "\n"
    lines = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
            for i, v in enumerate(value):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {json.dumps(value)}")

    walk("", obj)
    return "\n".join(lines) + "\n"


_ERROR_CLASSES = {
    "SyntaxError_": "syntax",
    "PCFTypeError": "type",
    "FragmentError": "fragment",
    "CapacityError": "capacity",
    "FuelExhausted": "fuel",
    "ArityError": "arity",
    "EvaluationError": "evaluation",
    "OracleError": "oracle",
    "RecursionError": "capacity",
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    fmt = ns.format
    try:
        cfg = _config(ns)
        report, status = COMMANDS[cfg.command](ns, cfg)
    except (InputError, MQPAError, ValueError, RecursionError) as exc:
        kind = _ERROR_CLASSES.get(type(exc).__name__, "input")
        sys.stdout.write(_render({"error": {"class": kind, "message": str(exc)}}, fmt))
        return 2
    text = _render(report, fmt)
    if cfg.out and cfg.command != "compile-pr":
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
