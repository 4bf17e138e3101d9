import itertools
from fractions import Fraction as Q

import pytest

from mqpa import prfun as PR
from mqpa.oracles import ExplicitOracle
from mqpa.orfun import eval_or, flatten, parse_or, print_or, traced_run
from mqpa.prtoor import check_preservation, check_tree, compile_pr_to_or, consumed_strings, wrap
from mqpa.coding import unpair
from pr_corpus import CORPUS, MINIM_FREE

# enough fuel to resolve outputs ≤ 8 of the two searches
FUEL = {"geometric": 60, "stop_at_start": 8}


def flat(p, args, fuel=200):
    return flatten(wrap(compile_pr_to_or(p)), args, fuel)


def test_compiled_coin():
    assert flat(PR.Rand(), [5]) == PR.PD.of({5: Q(1, 2), 6: Q(1, 2)})
    c = compile_pr_to_or(PR.Rand())
    for bit, want in (("0", (5, 1)), ("1", (6, 1))):
        value, trace = traced_run(c.program, [5, 3], ExplicitOracle("000" + bit))
        assert unpair(value) == want and trace == [3]


def test_compiled_zero_consumes_nothing():
    assert flat(PR.Z(), [7]) == PR.PD.point(0)
    c = compile_pr_to_or(PR.Z())
    assert unpair(eval_or(c.program, [7, 0], ExplicitOracle("", tail="error"))) == (0, 0)


def test_compiled_convolution_reads_two_positions():
    p = PR.Comp(PR.Rand(), (PR.Rand(),))
    assert flat(p, [0]) == PR.PD.of({0: Q(1, 4), 1: Q(1, 2), 2: Q(1, 4)})
    strings = sorted(t for _, t in consumed_strings(compile_pr_to_or(p), [0]))
    assert strings == ["00", "01", "10", "11"]


def test_corpus_shape():
    assert len(CORPUS) >= 10
    assert all(PR.pr_depth(p) <= 3 for p in CORPUS.values())


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_semantics_preserved_on_small_arguments(name):
    p = CORPUS[name]
    for args in itertools.product(range(9), repeat=p.arity):
        report = check_preservation(p, list(args), max_output=8, depth=12, fuel=FUEL.get(name, 200))
        assert report.ok, (args, report.mismatches)
        if name in MINIM_FREE:
            assert report.flat.residual == 0 == report.source.residual


@pytest.mark.parametrize("name", sorted(CORPUS))
@pytest.mark.parametrize("k", [0, 3])
def test_query_tree_invariants(name, k):
    p = CORPUS[name]
    c = compile_pr_to_or(p)
    for args in itertools.product(range(3), repeat=p.arity):
        report = check_tree(c, list(args), k=k, fuel=FUEL.get(name, 200))
        assert report.ok, (args, report)
        assert report.resolved >= 1


def test_strings_are_prefix_free_for_searches():
    c = compile_pr_to_or(CORPUS["geometric"])
    strings = [t for _, t in consumed_strings(c, [2], fuel=40)]
    assert len(strings) > 4
    for a, b in itertools.permutations(strings, 2):
        assert not b.startswith(a)


def test_compiled_program_never_reads_below_offset():
    c = compile_pr_to_or(CORPUS["double_coin_sum"])
    for bits in itertools.product("01", repeat=6):
        oracle = ExplicitOracle("".join(bits), tail="zeros")
        _, trace = traced_run(c.program, [2, 4], oracle)
        assert trace and min(trace) >= 4
        assert sorted(set(trace)) == list(range(4, 4 + len(set(trace))))


def test_compiled_output_round_trips_through_syntax():
    c = compile_pr_to_or(CORPUS["coin_sum"])
    text = print_or(c.program)
    assert parse_or(text) == c.program


def test_preservation_report_json():
    data = check_preservation(PR.Rand(), [1]).to_json()
    assert data["ok"] and data["mismatches"] == []
    assert data["outputs_checked"] == list(range(9))
