# Running process networks: communications are rendezvous, mismatched
# networks deadlock with a readable report, and exploration agrees
# with the choreography's outcome.

import pytest
from hypothesis import given, settings, strategies

from chorus import corpus
from chorus.chor_engine import run_choreography, states_equivalent
from chorus.epp import project
from chorus.parser import parse_choreography, parse_processes
from chorus.pp_engine import (
    Deadlock, FuelExhausted, PPError, Terminated, explore_processes,
    run_processes,
)


def _net(src, state=None, **kw):
    return run_processes(parse_processes(src), state, **kw)


def test_value_exchange():
    r = _net("net = p[3] |> q!c; q?id | q[7] |> p?add; p!c")
    assert isinstance(r, Terminated)
    assert r.state == {"p": 10, "q": 10}


def test_send_to_terminated_peer_deadlocks():
    r = _net("net = p[1] |> q!c | q |> 0")
    assert isinstance(r, Deadlock)
    assert "p waiting to send to q" in r.report
    assert "q terminated" in r.report


def test_unoffered_label_deadlocks_instead_of_failing():
    r = _net("net = p |> q(+)go | q |> p&{stop: 0}")
    assert isinstance(r, Deadlock)
    assert "p waiting to select go at q" in r.report
    assert "q waiting to offer to p" in r.report


def test_crossed_expectations_deadlock():
    r = _net("net = p |> q?id | q |> p?id")
    assert isinstance(r, Deadlock)
    assert sorted(r.report) == ["p waiting to receive from q",
                                "q waiting to receive from p"]


def test_start_introduces_a_running_child():
    r = _net("f(p) = (start t |> p?id; p!c); t!c; t?mult\n"
             "net = p[6] |> f<p>")
    assert isinstance(r, Terminated)
    assert r.state["p"] == 36
    assert any("#" in n and v == 6 for n, v in r.state.items())


def test_calls_unfold_only_at_members_of_the_dispatch_argument():
    # give dispatches on p (first parameter), take_q on q, so each
    # process unfolds exactly the call naming it there
    src = ("give(p, q) = q!c\n"
           "take_q(p, q) = p?id\n"
           "net = a[5] |> give<a, b> | b |> take_q<a, b>\n")
    r = _net(src)
    assert isinstance(r, Terminated)
    assert r.state["b"] == 5


def test_calls_not_naming_the_process_at_dispatch_are_skipped():
    # c runs a call whose dispatch argument is a, so it drops it and
    # terminates at once instead of unfolding a's behaviour
    src = ("give(p, q) = q!c\n"
           "net = a[5] |> give<a, b> | b |> a?id | c |> give<a, b>\n")
    r = _net(src)
    assert isinstance(r, Terminated)
    assert r.state["b"] == 5


def test_calls_with_an_empty_list_argument_vanish():
    # recursion over a list ends when the list runs out, at both
    # levels; without this rule this network would deadlock on the
    # final pour<a, tl([b])> call
    src = ("pour(p, V) = pour1<p, hd(V)>; pour<p, tl(V)>\n"
           "pour1(p, v) = v!c\n"
           "net = a[9] |> pour<a, [b]> | b |> a?id\n")
    r = _net(src)
    assert isinstance(r, Terminated)
    assert r.state["b"] == 9


def test_fuel_exhaustion():
    r = _net("spin(p) = spin<p>\nnet = p[0] |> spin<p>", fuel=7)
    assert isinstance(r, FuelExhausted)
    assert r.steps == 7


def test_eval_errors_are_runtime_errors():
    with pytest.raises(PPError):
        _net("net = p[[]] |> q!fst | q |> p?id")


def test_state_file_values_override_network_values():
    r = _net("net = p[1] |> q!c | q |> p?id", state={"p": 42})
    assert r.state["q"] == 42


@given(strategies.integers(0, 2 ** 32))
@settings(max_examples=20, deadline=None)
def test_random_order_agrees_with_sequential(seed):
    prog = parse_choreography(corpus.source("quicksort"))
    pp = project(prog)
    state = {"p": (4, 1, 3, 1)}
    a = run_processes(pp, state, strategy="seq")
    b = run_processes(pp, state, strategy="random", seed=seed)
    assert isinstance(a, Terminated) and isinstance(b, Terminated)
    assert states_equivalent(a.state, b.state)


def test_exploration_matches_the_choreography():
    prog = parse_choreography(corpus.source("broadcast"))
    state = {"u": 5}
    chor = run_choreography(prog, state)
    ex = explore_processes(project(prog), state)
    assert ex.complete
    assert not ex.deadlocks
    assert len(ex.terminal_states) == 1
    assert states_equivalent(chor.state, ex.terminal_states[0])


def test_exploration_reports_deadlock_classes():
    ex = explore_processes(
        parse_processes("net = p |> q(+)go | q |> p&{stop: 0}"))
    assert ex.terminal_states == []
    assert len(ex.deadlocks) == 1
    _, report = ex.deadlocks[0]
    assert "p waiting to select go at q" in report
