# The example corpus: independent oracles, instance encoding into
# source + state, and decoding of final states back into answers.

import cmath
import random

import pytest
from hypothesis import given, settings, strategies

from chorus import corpus
from chorus.chor_engine import run_choreography
from chorus.parser import parse_choreography
from chorus.values import UNDEF


def test_quicksort_oracle_is_sorted():
    inst = corpus.quicksort_instance([3, 1, 2, 1])
    assert list(corpus.oracle(inst)) == [1, 1, 2, 3]


def test_gauss_oracle_is_unit_upper_triangular():
    inst = corpus.gauss_instance([[2.0, 1.0, 5.0], [1.0, 3.0, 5.0]])
    grid = corpus.oracle(inst)
    assert grid[0][0] == 1.0 and grid[1][0] == 0.0 and grid[1][1] == 1.0
    x = corpus.back_substitute(grid)
    assert x[0] == pytest.approx(2.0) and x[1] == pytest.approx(1.0)


def test_gauss_back_substitution_matches_direct_solve():
    rng = random.Random(5)
    for _ in range(20):
        inst = corpus.random_instance("gauss", rng)
        grid = corpus.oracle(inst)
        direct = corpus.solve_system(inst.payload)
        for a, b in zip(corpus.back_substitute(grid), direct):
            assert a == pytest.approx(b, abs=1e-9)


def test_fft_oracle_is_the_naive_transform():
    inst = corpus.fft_instance([1 + 2j, 3 - 1j])
    y = corpus.oracle(inst)
    assert y[0] == pytest.approx((1 + 2j) + (3 - 1j))
    assert y[1] == pytest.approx((1 + 2j) - (3 - 1j))
    inst4 = corpus.fft_instance([1, 0, 0, 0])
    assert all(v == pytest.approx(1) for v in corpus.oracle(inst4))


def test_fft_oracle_uses_the_positive_root():
    inst = corpus.fft_instance([0, 1])
    # y_j = sum_k x_k w^(kj) with w = exp(2 pi i / n)
    assert corpus.oracle(inst)[1] == pytest.approx(cmath.exp(1j * cmath.pi))


def test_broadcast_oracle_is_the_reachable_component():
    inst = corpus.broadcast_instance(
        ["a", "b", "c", "d"], [("a", "b"), ("b", "c")], "a")
    assert corpus.oracle(inst) == {"a", "b", "c"}


def test_instances_validate_their_payloads():
    with pytest.raises(ValueError):
        corpus.gauss_instance([[1.0, 2.0], [3.0, 4.0]])  # not n x (n+1)
    with pytest.raises(ValueError):
        corpus.fft_instance([1, 2, 3])  # not a power of two
    with pytest.raises(ValueError):
        corpus.broadcast_instance(["a"], [("a", "b")], "a")


@pytest.mark.parametrize("kind", corpus.EXAMPLES)
def test_encode_run_decode_matches_oracle(kind):
    rng = random.Random(17)
    inst = corpus.random_instance(kind, rng)
    src, state = corpus.encode_instance(inst)
    final = run_choreography(parse_choreography(src), state).state
    got = corpus.decode_result(inst, final)
    assert corpus.outputs_match(inst, got, corpus.oracle(inst))


def test_outputs_match_tolerances():
    inst = corpus.fft_instance([1, 1])
    assert corpus.outputs_match(inst, [2 + 1e-12j, 0j], [2 + 0j, 0j])
    assert not corpus.outputs_match(inst, [2 + 1e-3j, 0j], [2 + 0j, 0j])
    qs = corpus.quicksort_instance([1, 2])
    assert corpus.outputs_match(qs, (1, 2), (1, 2))
    assert not corpus.outputs_match(qs, (2, 1), (1, 2))


@given(strategies.integers(0, 10 ** 9))
@settings(max_examples=30, deadline=None)
def test_random_instances_stay_in_bounds(seed):
    rng = random.Random(seed)
    qs = corpus.random_instance("quicksort", rng)
    assert len(qs.payload) <= 12
    g = corpus.random_instance("gauss", rng)
    n = len(g.payload)
    assert 1 <= n <= 4
    for i, row in enumerate(g.payload):
        assert len(row) == n + 1
        assert abs(row[i]) > sum(abs(v) for j, v in enumerate(row[:n])
                                 if j != i)
    f = corpus.random_instance("fft", rng)
    assert len(f.payload) in (1, 2, 4, 8)
    b = corpus.random_instance("broadcast", rng)
    vertices, edges, start, token = b.payload
    assert 1 <= len(vertices) <= 8
    assert start in vertices
    assert not vertices[1:] or edges


def test_state_text_round_trip():
    state = {"p": (3, 1), "q": UNDEF, "w": complex(0, 1), "n": 4}
    text = corpus.render_state_text(state)
    assert corpus.read_state_text(text) == state


def test_state_text_skips_comments_and_blanks():
    got = corpus.read_state_text("-- setup\n\np = 3\n# more\nq = [1]\n")
    assert got == {"p": 3, "q": (1,)}


def test_sources_ship_with_the_package():
    for name in corpus.EXAMPLES + ("fft_as_printed",):
        src = corpus.source(name)
        assert "main =" in src
        parse_choreography(src)
