# Invariants of the value layer: cell contents, the builtins visible
# to programs, receive functions, and the textual value forms used by
# state files and traces.

import pytest
from hypothesis import given, strategies

from chorus.values import (
    BUILTINS, RECV_FNS, UNDEF, EvalError, apply_recv, parse_value,
    render_value,
)

scalars = strategies.one_of(
    strategies.just(UNDEF),
    strategies.booleans(),
    strategies.integers(min_value=-10 ** 9, max_value=10 ** 9),
    strategies.floats(allow_nan=False, allow_infinity=False),
    strategies.complex_numbers(allow_nan=False, allow_infinity=False),
)

values = strategies.recursive(
    scalars,
    lambda inner: strategies.lists(inner, max_size=4).map(tuple),
    max_leaves=12)


@given(values)
def test_render_parse_round_trip(v):
    assert parse_value(render_value(v)) == v


@given(strategies.integers(), strategies.integers())
def test_add_on_numbers_is_addition(a, b):
    assert apply_recv("add", a, b) == a + b


@given(strategies.lists(strategies.integers()), strategies.integers())
def test_add_on_lists_appends_one_element(xs, y):
    assert apply_recv("add", tuple(xs), y) == tuple(xs) + (y,)


@given(strategies.integers())
def test_add_to_undefined_starts_a_list(y):
    assert apply_recv("add", UNDEF, y) == (y,)


@given(strategies.lists(strategies.integers()),
       strategies.lists(strategies.integers()))
def test_append_concatenates(xs, ys):
    got = apply_recv("append", tuple(xs), tuple(ys))
    assert got == tuple(xs) + tuple(ys)


@given(strategies.lists(strategies.integers()))
def test_append_ignores_an_undefined_side(xs):
    assert apply_recv("append", UNDEF, tuple(xs)) == tuple(xs)
    assert apply_recv("append", tuple(xs), UNDEF) == tuple(xs)


def test_arithmetic_receive_functions():
    assert apply_recv("id", 7, 3) == 3
    assert apply_recv("div", 6, 3) == 2.0
    assert apply_recv("mult", 6, 3) == 18
    assert apply_recv("minus", 6, 3) == 3
    assert apply_recv("removeSecond", UNDEF, (1, 2, 3)) == (1, 3)


def test_division_by_zero_is_an_eval_error():
    with pytest.raises(EvalError):
        apply_recv("div", 1, 0)


def test_unknown_receive_function_is_an_eval_error():
    with pytest.raises(EvalError):
        apply_recv("frobnicate", 1, 2)


def test_builtins():
    assert BUILTINS["short"](()) is True
    assert BUILTINS["short"]((5,)) is True
    assert BUILTINS["short"]((5, 6)) is False
    assert BUILTINS["length"]((1, 2, 3)) == 3
    assert BUILTINS["fst"]((4, 5)) == 4
    assert BUILTINS["snd"]((4, 5)) == 5
    assert BUILTINS["half"](9) == 4
    assert BUILTINS["square"](3) == 9
    assert BUILTINS["is_one"](1) is True
    assert BUILTINS["is_one"](2) is False
    assert BUILTINS["removeSecond"]((1, 2, 3)) == (1, 3)


def test_builtins_reject_bad_shapes():
    with pytest.raises(EvalError):
        BUILTINS["fst"](())
    with pytest.raises(EvalError):
        BUILTINS["snd"]((1,))
    with pytest.raises(EvalError):
        BUILTINS["removeSecond"]((1,))
    with pytest.raises(EvalError):
        BUILTINS["short"](3)
    with pytest.raises(EvalError):
        BUILTINS["half"]((1, 2))


def test_value_text_forms():
    assert parse_value("undef") is UNDEF
    assert parse_value("true") is True
    assert parse_value("[1, 2, [3]]") == (1, 2, (3,))
    assert parse_value("1+2i") == complex(1, 2)
    assert parse_value("-1.5-0.5i") == complex(-1.5, -0.5)
    assert parse_value("2i") == complex(0, 2)
    assert parse_value("e2pii/4") == pytest.approx(complex(0, 1))
    assert parse_value("e2pii/1") == pytest.approx(complex(1, 0))
    assert render_value(()) == "[]"
    assert render_value(complex(1, -2)) == "1.0-2.0i"


def test_bad_value_text_is_rejected():
    for bad in ("", "[1, 2", "zügig", "1+2"):
        with pytest.raises(ValueError):
            parse_value(bad)


def test_every_receive_function_has_a_name():
    assert {"id", "add", "append", "div", "mult", "minus",
            "removeSecond"} <= set(RECV_FNS)
