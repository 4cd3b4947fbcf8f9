"""Execution of process networks.

Each process owns a single memory cell and a behaviour, a sequence of
actions.  Communication is a rendezvous: a send fires only when the
peer sits at the matching receive, a selection only when the peer sits
at an offer, and an introduction is one atomic step between the
introducer and both introducees.  Everything else (procedure calls,
conditionals, starting a process) is a local step.

A procedure call dispatches on one designated parameter: the process
unfolds the body when the evaluated argument at that position names
it (or contains it, for a list argument) and otherwise drops the call
and carries on.  That is what lets one projected call site drive every
member of a process list.

An introduction receive binds a name: when the rendezvous fires, the
received identity replaces the bound name in the rest of the
behaviour, which covers both genuinely fresh acquaintances and names
the process already knew.

Unlike the choreography engine there is no global order to fall back
on, so a network can deadlock; the result then carries one line per
process saying what it was waiting for.
"""

from __future__ import annotations

import random as _random
import re as _re
from dataclasses import dataclass

from .chor_engine import DEFAULT_FUEL, ChorError, eval_arg, format_trace
from .printer import render_pp_body
from .syntax import (
    BranchB, CallB, CondB, IntArg, IntroRecvB, IntroSendB, ListFn, ListLit,
    NameArg, RecvB, SelB, SendB, StartB, is_list_param,
)
from .values import UNDEF, EvalError, apply_recv, eval_expr, render_value

__all__ = [
    "PPError", "Terminated", "Deadlock", "FuelExhausted", "Exploration",
    "make_network", "run_processes", "explore_processes", "format_trace",
    "canonical_key", "subst_pp_body",
]


_FRESH = "#"
_MASK = _re.compile(r"#\d+")


class PPError(Exception):
    def __init__(self, msg, process=None, span=None):
        self.msg = msg
        self.process = process
        self.span = span
        where = f" at {process}" if process else ""
        super().__init__(f"{msg}{where}" + (f" ({span})" if span else ""))


@dataclass
class Terminated:
    state: dict
    trace: tuple
    steps: int


@dataclass
class Deadlock:
    state: dict
    trace: tuple
    steps: int
    report: tuple  # one line per process


@dataclass
class FuelExhausted:
    state: dict
    trace: tuple
    steps: int


# ---------------------------------------------------------------------------
# substitution


def _subst_arg(arg, mapping):
    match arg:
        case NameArg(name=n):
            v = mapping.get(n)
            if v is None:
                return arg
            if isinstance(v, str):
                return NameArg(v)
            if isinstance(v, int):
                return IntArg(v)
            return ListLit(tuple(NameArg(x) for x in v))
        case ListLit(items=items):
            return ListLit(tuple(_subst_arg(x, mapping) for x in items))
        case ListFn(name=name, args=args):
            return ListFn(name, tuple(_subst_arg(x, mapping) for x in args))
    return arg


def _subst_name(n, mapping, role):
    v = mapping.get(n, n)
    if not isinstance(v, str):
        raise PPError(f"{role} {n} is bound to {render_value(v)}, "
                      "not a process")
    return v


def subst_pp_body(body, mapping):
    """Replace names in a behaviour; values are names, lists or ints."""
    out = []
    for s in body:
        match s:
            case SendB(peer=q, expr=e, span=span):
                out.append(SendB(_subst_name(q, mapping, "peer"), e,
                                 span=span))
            case RecvB(peer=q, fn=f, span=span):
                out.append(RecvB(_subst_name(q, mapping, "peer"), f,
                                 span=span))
            case SelB(peer=q, label=l, span=span):
                out.append(SelB(_subst_name(q, mapping, "peer"), l,
                                span=span))
            case BranchB(peer=q, branches=bs, span=span):
                out.append(BranchB(
                    _subst_name(q, mapping, "peer"),
                    tuple((l, subst_pp_body(b, mapping)) for l, b in bs),
                    span=span))
            case StartB(child=c, behaviour=b, span=span):
                inner = mapping
                if c in mapping:
                    inner = {k: v for k, v in mapping.items() if k != c}
                out.append(StartB(c, subst_pp_body(b, inner), span=span))
            case IntroSendB(left=q, right=r, span=span):
                out.append(IntroSendB(_subst_name(q, mapping, "introducee"),
                                      _subst_name(r, mapping, "introducee"),
                                      span=span))
            case IntroRecvB(introducer=p, bound=r, span=span):
                inner = _subst_name(r, mapping, "acquaintance")
                out.append(IntroRecvB(_subst_name(p, mapping, "introducer"),
                                      inner, span=span))
            case CondB(expr=e, then_branch=tb, else_branch=eb, span=span):
                out.append(CondB(e, subst_pp_body(tb, mapping),
                                 subst_pp_body(eb, mapping), span=span))
            case CallB(name=name, args=args, span=span):
                out.append(CallB(name,
                                 tuple(_subst_arg(a, mapping) for a in args),
                                 span=span))
            case _:
                out.append(s)
    return tuple(out)


# ---------------------------------------------------------------------------
# network state
#
# procs maps each process name to a (cell, behaviour) pair; started
# processes get names base#k and stay in the map after terminating so
# late references still resolve.


def make_network(prog, state=None):
    procs = {}
    for name, value, beh in prog.network:
        cell = UNDEF if value is None else value
        procs[name] = (cell, beh)
    if state:
        for name, value in state.items():
            if name not in procs:
                raise PPError(f"no process named {name} in the network")
            cell, beh = procs[name]
            procs[name] = (value, beh)
    return procs


def _cells(procs):
    return {name: cell for name, (cell, beh) in procs.items()}


def _head_report(name, beh):
    if not beh:
        return f"{name} terminated"
    match beh[0]:
        case SendB(peer=q):
            return f"{name} waiting to send to {q}"
        case RecvB(peer=q):
            return f"{name} waiting to receive from {q}"
        case SelB(peer=q, label=l):
            return f"{name} waiting to select {l} at {q}"
        case BranchB(peer=q):
            return f"{name} waiting to offer to {q}"
        case IntroSendB(left=q, right=r):
            return f"{name} waiting to introduce {q} and {r}"
        case IntroRecvB(introducer=q):
            return f"{name} waiting to be introduced by {q}"
    return f"{name} stuck"


def deadlock_report(procs):
    return tuple(_head_report(name, beh)
                 for name, (cell, beh) in procs.items())


# ---------------------------------------------------------------------------
# steps


def enabled_steps(procs):
    out = []
    for p, (cell, beh) in procs.items():
        if not beh:
            continue
        match beh[0]:
            case CallB() | CondB() | StartB():
                out.append(("local", p))
            case SendB(peer=q):
                peer = procs.get(q)
                if peer and peer[1] and isinstance(peer[1][0], RecvB) \
                        and peer[1][0].peer == p:
                    out.append(("com", p, q))
            case SelB(peer=q, label=l):
                # selecting a label the peer does not offer is not an
                # enabled step; it shows up as a deadlock, not an error
                peer = procs.get(q)
                if peer and peer[1] and isinstance(peer[1][0], BranchB) \
                        and peer[1][0].peer == p \
                        and peer[1][0].branch(l) is not None:
                    out.append(("sel", p, q))
            case IntroSendB(left=q, right=r):
                pq = procs.get(q)
                pr = procs.get(r)
                if (pq and pq[1] and isinstance(pq[1][0], IntroRecvB)
                        and pq[1][0].introducer == p
                        and pr and pr[1] and isinstance(pr[1][0], IntroRecvB)
                        and pr[1][0].introducer == p):
                    out.append(("intro", p, q, r))
    return out


def exec_step(procs, step, counter, defs, adjacency):
    """Run one step in place; returns (counter, trace entry or None)."""
    kind = step[0]
    if kind == "local":
        p = step[1]
        cell, beh = procs[p]
        head, rest = beh[0], beh[1:]
        match head:
            case CallB(name=name, args=args, span=span):
                d = defs.get(name)
                if d is None:
                    raise PPError(f"call to unknown procedure {name}",
                                  p, span)
                try:
                    vals = [eval_arg(a, adjacency) for a in args]
                    dval = vals[d.dispatch_position]
                    member = (p == dval if isinstance(dval, str)
                              else isinstance(dval, tuple) and p in dval)
                    # a call with an empty list argument finishes at
                    # once, matching the choreography rule
                    if any(v == () for v, prm in zip(vals, d.params)
                           if is_list_param(prm)):
                        member = False
                    if member:
                        mapping = dict(zip(d.params, vals))
                        rest = subst_pp_body(d.body, mapping) + rest
                except (EvalError, ChorError) as e:
                    raise PPError(f"in call {name}: {e}", p, span) from e
                procs[p] = (cell, rest)
                return counter, None
            case CondB(expr=e, then_branch=tb, else_branch=eb, span=span):
                try:
                    guard = eval_expr(e, cell)
                except EvalError as ex:
                    raise PPError(str(ex), p, span) from ex
                if not isinstance(guard, bool):
                    raise PPError(
                        f"condition evaluated to {render_value(guard)}, "
                        "not a truth value", p, span)
                procs[p] = (cell, (tb if guard else eb) + rest)
                return counter, None
            case StartB(child=c, behaviour=b, span=span):
                counter += 1
                fresh = f"{c.split(_FRESH)[0]}{_FRESH}{counter}"
                mapping = {c: fresh}
                procs[p] = (cell, subst_pp_body(rest, mapping))
                procs[fresh] = (UNDEF, subst_pp_body(b, mapping))
                return counter, ("start", p, fresh)
    if kind == "com":
        _, p, q = step
        pcell, pbeh = procs[p]
        qcell, qbeh = procs[q]
        send, recv = pbeh[0], qbeh[0]
        try:
            value = eval_expr(send.expr, pcell)
        except EvalError as ex:
            raise PPError(str(ex), p, send.span) from ex
        try:
            newcell = apply_recv(recv.fn, qcell, value)
        except EvalError as ex:
            raise PPError(str(ex), q, recv.span) from ex
        procs[p] = (pcell, pbeh[1:])
        procs[q] = (newcell, qbeh[1:])
        return counter, ("com", f"{p} -> {q}", render_value(value))
    if kind == "sel":
        _, p, q = step
        pcell, pbeh = procs[p]
        qcell, qbeh = procs[q]
        label = pbeh[0].label
        offer = qbeh[0].branch(label)
        if offer is None:
            labels = ", ".join(l for l, _ in qbeh[0].branches)
            raise PPError(f"{q} offers {{{labels}}} to {p}, "
                          f"who selected {label}", q, qbeh[0].span)
        procs[p] = (pcell, pbeh[1:])
        procs[q] = (qcell, offer + qbeh[1:])
        return counter, ("sel", f"{p} -> {q}", label)
    # intro: one atomic step for introducer and both introducees
    _, p, q, r = step
    pcell, pbeh = procs[p]
    qcell, qbeh = procs[q]
    rcell, rbeh = procs[r]
    procs[p] = (pcell, pbeh[1:])
    procs[q] = (qcell, subst_pp_body(qbeh[1:], {qbeh[0].bound: r}))
    procs[r] = (rcell, subst_pp_body(rbeh[1:], {rbeh[0].bound: q}))
    return counter, ("intro", p, f"{q} <-> {r}")


def _all_done(procs):
    return all(not beh for _, beh in procs.values())


def run_processes(prog, state=None, strategy="seq", seed=0,
                  fuel=DEFAULT_FUEL):
    procs = make_network(prog, state)
    rng = _random.Random(seed) if strategy == "random" else None
    counter = 0
    trace = []
    steps = 0
    while not _all_done(procs):
        if steps >= fuel:
            return FuelExhausted(_cells(procs), tuple(trace), steps)
        steps_now = enabled_steps(procs)
        if not steps_now:
            return Deadlock(_cells(procs), tuple(trace), steps,
                            deadlock_report(procs))
        step = steps_now[0] if rng is None else rng.choice(steps_now)
        counter, entry = exec_step(procs, step, counter, prog.defs,
                                   prog.adjacency)
        if entry is not None:
            trace.append(entry)
        steps += 1
    return Terminated(_cells(procs), tuple(trace), steps)


# ---------------------------------------------------------------------------
# exhaustive exploration
#
# Configurations are identified up to renaming of started processes:
# fresh names are numbered in order of first reference, walking from
# the source processes, and the whole renamed network is the key.


def _note_arg(arg, note):
    match arg:
        case NameArg(name=n):
            note(n)
        case ListLit(items=items):
            for x in items:
                _note_arg(x, note)
        case ListFn(args=args):
            for x in args:
                _note_arg(x, note)


def _note_body(body, note):
    for s in body:
        match s:
            case SendB(peer=q) | RecvB(peer=q) | SelB(peer=q):
                note(q)
            case BranchB(peer=q, branches=bs):
                note(q)
                for _, b in bs:
                    _note_body(b, note)
            case StartB(behaviour=b):
                _note_body(b, note)
            case IntroSendB(left=q, right=r):
                note(q)
                note(r)
            case IntroRecvB(introducer=q, bound=r):
                note(q)
                note(r)
            case CondB(then_branch=tb, else_branch=eb):
                _note_body(tb, note)
                _note_body(eb, note)
            case CallB(args=args):
                for a in args:
                    _note_arg(a, note)


def canonical_key(procs):
    order = []
    seen = set()

    def note(n):
        if _FRESH in n and n not in seen:
            seen.add(n)
            order.append(n)

    roots = sorted(n for n in procs if _FRESH not in n)
    for n in roots:
        _note_body(procs[n][1], note)
    i = 0
    while True:
        while i < len(order):
            entry = procs.get(order[i])
            if entry:
                _note_body(entry[1], note)
            i += 1
        rest = [n for n in procs if _FRESH in n and n not in seen]
        if not rest:
            break
        # orphans: nothing live refers to them, so any α-invariant
        # order will do; ties fall back to the raw name, which at
        # worst revisits an equivalent configuration
        note(min(rest, key=lambda n: (
            n.split(_FRESH)[0], render_value(procs[n][0]),
            _MASK.sub("#?", render_pp_body(procs[n][1])), n)))
    counts = {}
    rename = {}
    for n in order:
        base = n.split(_FRESH)[0]
        counts[base] = counts.get(base, 0) + 1
        rename[n] = f"{base}{_FRESH}{counts[base]}"
    parts = []
    for n in sorted(procs, key=lambda x: rename.get(x, x)):
        cell, beh = procs[n]
        body = subst_pp_body(beh, rename)
        parts.append(f"{rename.get(n, n)}={render_value(cell)}"
                     f"|>{render_pp_body(body)}")
    return "||".join(parts)


def _state_key(cells):
    src = sorted((n, render_value(v)) for n, v in cells.items()
                 if _FRESH not in n)
    fresh = sorted((n.split(_FRESH)[0], render_value(v))
                   for n, v in cells.items() if _FRESH in n)
    return tuple(src), tuple(fresh)


@dataclass
class Exploration:
    terminal_states: list   # final cell maps, one per distinct outcome
    deadlocks: list         # (cell map, report) pairs, one per class
    visited: int
    complete: bool


def explore_processes(prog, state=None, bound=100000):
    start = make_network(prog, state)
    visited = {canonical_key(start)}
    stack = [(start, 0)]
    terminals = []
    terminal_keys = set()
    deadlocks = []
    deadlock_keys = set()
    complete = True
    while stack:
        procs, counter = stack.pop()
        steps = enabled_steps(procs)
        # local steps are deterministic and invisible to every other
        # process, so exploring one of them first loses no terminal
        # state, no deadlock, and no cell value
        local = [s for s in steps if s[0] == "local"]
        if local:
            steps = local[:1]
        if not steps:
            if _all_done(procs):
                key = _state_key(_cells(procs))
                if key not in terminal_keys:
                    terminal_keys.add(key)
                    terminals.append(_cells(procs))
            else:
                key = canonical_key(procs)
                if key not in deadlock_keys:
                    deadlock_keys.add(key)
                    deadlocks.append((_cells(procs), deadlock_report(procs)))
            continue
        for step in steps:
            branch = dict(procs)
            ncounter, _ = exec_step(branch, step, counter, prog.defs,
                                    prog.adjacency)
            key = canonical_key(branch)
            if key in visited:
                continue
            if len(visited) >= bound:
                complete = False
                continue
            visited.add(key)
            stack.append((branch, ncounter))
    return Exploration(terminals, deadlocks, len(visited), complete)
