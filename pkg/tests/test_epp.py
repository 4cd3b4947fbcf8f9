# Projection: each declared or started process gets the behaviour the
# choreography prescribes for it, conditionals it cannot observe merge
# into offers, and unused parameters are pruned away.

import pytest

from chorus import corpus
from chorus.epp import (
    ProjectionError, check_projectable, merge_behaviours, project,
)
from chorus.parser import parse_choreography, parse_processes
from chorus.printer import render_processes
from chorus.syntax import BranchB, RecvB, SelB, SendB, is_list_param
from chorus.values import Cell

QUICKSORT_PP = """\
QS_p(p) = if short then 0 else (start q< |> split_q<<p, q<>; QS_p<q<>; p!c); (start q= |> split_q=<p, q=>; p!c); (start q> |> split_q><p, q>>; QS_p<q>>; p!c); split_p<p, q<, q=, q>>; q<?id; q=?append; q>?append
split_q<(p, q<) = p&{stop: 0, skip: split_q<<p, q<>, get: p?add; split_q<<p, q<>}
split_q=(p, q=) = p&{stop: p?add, skip: split_q=<p, q=>, get: p?add; split_q=<p, q=>}
split_q>(p, q>) = p&{stop: 0, get: p?add; split_q><p, q>>, skip: split_q><p, q>>}
split_p(p, q<, q=, q>) = if short then q<(+)stop; q=(+)stop; q>(+)stop; q=!fst else if fst < snd then q>(+)get; q>!snd; q<(+)skip; q=(+)skip; pop2_p<p>; split_p<p, q<, q=, q>> else if fst > snd then q<(+)get; q<!snd; q=(+)skip; q>(+)skip; pop2_p<p>; split_p<p, q<, q=, q>> else q=(+)get; q=!snd; q<(+)skip; q>(+)skip; pop2_p<p>; split_p<p, q<, q=, q>>
pop2_p(p) = (start t |> p?removeSecond; p!c); t!c; t?id
net = p |> QS_p<p>
"""


def _project_example(name, **kw):
    return project(parse_choreography(corpus.source(name)), **kw)


def test_quicksort_projection_golden():
    assert render_processes(_project_example("quicksort")) == QUICKSORT_PP


def test_all_examples_project():
    for name in corpus.EXAMPLES:
        pp = _project_example(name)
        assert pp.network, name
        assert check_projectable(parse_choreography(corpus.source(name))) \
            == [], name


def test_pruning_keeps_dispatch_and_list_parameters():
    for name in corpus.EXAMPLES:
        pp = _project_example(name)
        for d in pp.defs.values():
            assert 0 <= d.dispatch_position < len(d.params)
        # list recursion ends on an empty argument, so list parameters
        # must survive pruning even when the body never names them
    fft = _project_example("fft")
    combine_w = fft.defs["combine_w"]
    assert sum(1 for p in combine_w.params if is_list_param(p)) >= 2


def test_no_prune_keeps_full_parameter_lists():
    full = _project_example("quicksort", prune=False)
    assert full.defs["split_q<"].params == ("p", "q<", "q=", "q>")
    pruned = _project_example("quicksort")
    assert pruned.defs["split_q<"].params == ("p", "q<")


def test_unmentioned_roles_get_empty_behaviour():
    prog = parse_choreography(
        "processes p, q, r\nf(a, b) = a.c -> b.id\nmain = f<p, q>")
    pp = project(prog)
    beh = {name: b for name, _, b in pp.network}
    assert beh["r"] == ()
    assert beh["p"] and beh["q"]


def test_selections_turn_into_offers():
    prog = parse_choreography(
        "processes p, q\n"
        "main = if p.short then p -> q[a]; p.c -> q.id else p -> q[b]")
    pp = project(prog)
    beh = {name: b for name, _, b in pp.network}
    offer = beh["q"][0]
    assert isinstance(offer, BranchB)
    assert sorted(l for l, _ in offer.branches) == ["a", "b"]


def test_unguarded_branches_do_not_merge():
    prog = parse_choreography(
        "processes p, q\n"
        "main = if p.short then p.c -> q.id else q.c -> p.id")
    errors = check_projectable(prog)
    assert errors
    assert any(e.role == "q" for e in errors)
    with pytest.raises(ProjectionError):
        project(prog)


def test_merging_different_procedures_synthesizes_one():
    prog = parse_choreography(
        "processes p, q\n"
        "f(x, y) = x -> y[go]; x.c -> y.id\n"
        "g(x, y) = x -> y[halt]\n"
        "main = if p.short then f<p, q> else g<p, q>")
    pp = project(prog)
    merged = [d for name, d in pp.defs.items() if "__" in name]
    assert len(merged) == 1
    offer = merged[0].body[0]
    assert isinstance(offer, BranchB)
    assert sorted(l for l, _ in offer.branches) == ["go", "halt"]


def test_merge_behaviours_unions_offers():
    k = (SendB("q", Cell()),)
    a = (BranchB("p", (("stop", ()),)),)
    b = (BranchB("p", (("get", (RecvB("p", "add"),) + k),)),)
    got = merge_behaviours(a, b)
    assert isinstance(got[0], BranchB)
    assert dict(got[0].branches) == {"stop": (),
                                     "get": (RecvB("p", "add"),) + k}


def test_merge_behaviours_requires_matching_actions():
    with pytest.raises(ProjectionError):
        merge_behaviours((SendB("q", Cell()),), (RecvB("p", "id"),))
    with pytest.raises(ProjectionError):
        merge_behaviours((SelB("q", "go"),), (SelB("q", "stop"),))


def test_merge_behaviours_is_idempotent_on_projected_bodies():
    for name in corpus.EXAMPLES:
        for d in _project_example(name).defs.values():
            assert merge_behaviours(d.body, d.body) == d.body


def test_projection_error_names_the_role():
    src = corpus.source("quicksort").replace(
        "p -> q<, q=[skip]; ", "").replace(
        "p -> q=, q>[skip]", "0").replace(
        "p -> q<, q>[skip]", "0")
    errors = check_projectable(parse_choreography(src))
    assert errors
    assert all(e.role is not None for e in errors)
    assert any("cannot be merged" in str(e) for e in errors)


def test_projected_networks_parse_back():
    for name in corpus.EXAMPLES:
        text = render_processes(_project_example(name))
        assert render_processes(parse_processes(text)) == text
