"""Direct execution of choreographies.

A configuration is the remaining statement sequence plus the memory of
every live process and the connection graph.  Out-of-order execution
follows the swap rule: a statement may fire when no earlier statement
in the sequence shares a process with it.  Statement one is therefore
always enabled, and a choreography can never get stuck; it either
terminates, runs out of fuel, or hits a runtime error (missing
connection, bad value).

Fresh processes come into existence through start statements.  All
binders of an unfolded procedure body are renamed up front to
``name#k`` with a run-global counter, so unfolded copies never collide
with declared processes or with each other.
"""

from __future__ import annotations

import random as _random
from dataclasses import dataclass

from .printer import render_chor_body, render_value
from .syntax import (
    Call, Com, Cond, IntArg, Intro, ListFn, ListLit, NameArg, Sel, Start,
    is_list_param,
)
from .values import EvalError, UNDEF, apply_recv, eval_expr


DEFAULT_FUEL = 10 ** 6


class ChorError(Exception):
    def __init__(self, msg, process=None, span=None):
        self.msg = msg
        self.process = process
        self.span = span
        at = f" (at {process})" if process else ""
        super().__init__(msg + at)


@dataclass
class Terminated:
    state: dict
    trace: tuple
    steps: int


@dataclass
class FuelExhausted:
    state: dict
    trace: tuple
    steps: int


# ---------------------------------------------------------------------------
# argument evaluation


def eval_arg(arg, adjacency):
    """Evaluate an argument tree whose names are all concrete."""
    match arg:
        case NameArg(name=n):
            return n
        case IntArg(value=v):
            return v
        case ListLit(items=items):
            return tuple(eval_arg(x, adjacency) for x in items)
        case ListFn(name=name, args=args):
            vals = [eval_arg(a, adjacency) for a in args]
            return _list_fn(name, vals, adjacency)
    raise ChorError(f"bad argument {arg!r}")


def _row_width(xs):
    # an augmented square matrix flattened row-major has n*(n+1)
    # entries; recover the row width n+1 from the length
    length = len(xs)
    n = int(((4 * length + 1) ** 0.5 - 1) / 2)
    while n * (n + 1) < length:
        n += 1
    if n * (n + 1) != length:
        raise ChorError(f"cannot infer a row width from a list of "
                        f"length {length}")
    return n + 1


def _list_fn(name, vals, adjacency):
    if name == "hd":
        xs = vals[0]
        if not xs:
            raise ChorError("hd of empty list")
        return xs[0]
    if name == "tl":
        xs = vals[0]
        if not xs:
            raise ChorError("tl of empty list")
        return xs[1:]
    if name in ("++", "join"):
        return vals[0] + vals[1]
    if name == "\\":
        drop = set(vals[1])
        return tuple(x for x in vals[0] if x not in drop)
    if name == "len":
        return len(vals[0])
    if name == "fst":
        xs = vals[0]
        w = vals[1] if len(vals) == 2 else _row_width(xs)
        return xs[:w]
    if name == "rest":
        xs = vals[0]
        w = vals[1] if len(vals) == 2 else _row_width(xs)
        return xs[w:]
    if name == "minor":
        xs = vals[0]
        w = _row_width(xs)
        out = []
        for i in range(w, len(xs), w):
            out.extend(xs[i + 1:i + w])
        return tuple(out)
    if name == "even":
        return vals[0][0::2]
    if name == "odd":
        return vals[0][1::2]
    if name == "half1":
        xs = vals[0]
        if len(xs) % 2:
            raise ChorError("half1 of an odd-length list")
        return xs[:len(xs) // 2]
    if name == "half2":
        xs = vals[0]
        if len(xs) % 2:
            raise ChorError("half2 of an odd-length list")
        return xs[len(xs) // 2:]
    if name == "neighb":
        p, xs = vals
        if not adjacency:
            raise ChorError("neighb needs an adjacency declaration")
        return tuple(x for x in xs if frozenset((p, x)) in adjacency)
    raise ChorError(f"unknown list function {name}")


# ---------------------------------------------------------------------------
# substitution and binder freshening


def _subst_arg(arg, mapping):
    match arg:
        case NameArg(name=n):
            repl = mapping.get(n)
            if repl is None:
                return arg
            if isinstance(repl, str):
                return NameArg(repl)
            if isinstance(repl, int):
                return IntArg(repl)
            return ListLit(tuple(NameArg(x) for x in repl))
        case IntArg():
            return arg
        case ListLit(items=items):
            return ListLit(tuple(_subst_arg(x, mapping) for x in items))
        case ListFn(name=name, args=args):
            return ListFn(name, tuple(_subst_arg(x, mapping) for x in args))
    raise ChorError(f"bad argument {arg!r}")


def _subst_name(n, mapping):
    repl = mapping.get(n, n)
    if not isinstance(repl, str):
        raise ChorError(f"list value used where a single process is "
                        f"needed: {n}")
    return repl


def subst_body(body, mapping):
    out = []
    for s in body:
        match s:
            case Com(sender=p, expr=e, receiver=q, fn=f, span=span):
                out.append(Com(_subst_name(p, mapping), e,
                               _subst_name(q, mapping), f, span=span))
            case Sel(sender=p, receiver=q, label=l, span=span):
                out.append(Sel(_subst_name(p, mapping),
                               _subst_name(q, mapping), l, span=span))
            case Start(parent=p, child=c, span=span):
                out.append(Start(_subst_name(p, mapping), c, span=span))
            case Intro(introducer=p, left=q, right=r, span=span):
                out.append(Intro(_subst_name(p, mapping),
                                 _subst_name(q, mapping),
                                 _subst_name(r, mapping), span=span))
            case Call(name=name, args=args, span=span):
                out.append(Call(name,
                                tuple(_subst_arg(a, mapping) for a in args),
                                span=span))
            case Cond(decider=d, expr=e, then_branch=tb, else_branch=eb,
                      span=span):
                out.append(Cond(_subst_name(d, mapping), e,
                                subst_body(tb, mapping),
                                subst_body(eb, mapping), span=span))
    return tuple(out)


def freshen_binders(body, counter):
    """Rename every start-bound name to base#k; returns (body, counter)."""

    def walk(stmts, mapping):
        nonlocal counter
        out = []
        mapping = dict(mapping)
        for s in stmts:
            match s:
                case Start(parent=p, child=c, span=span):
                    counter += 1
                    fresh = f"{c}#{counter}"
                    out.append(Start(mapping.get(p, p), fresh, span=span))
                    mapping[c] = fresh
                case Cond(decider=d, expr=e, then_branch=tb, else_branch=eb,
                          span=span):
                    out.append(Cond(mapping.get(d, d), e,
                                    walk(tb, mapping), walk(eb, mapping),
                                    span=span))
                case _:
                    out.append(subst_body((s,), mapping)[0])
        return tuple(out)

    return walk(body, {}), counter


# ---------------------------------------------------------------------------
# participants, for the swap rule


def _arg_procs(arg, acc):
    match arg:
        case NameArg(name=n):
            acc.add(n)
        case IntArg():
            pass
        case ListLit(items=items):
            for x in items:
                _arg_procs(x, acc)
        case ListFn(args=args):
            for x in args:
                _arg_procs(x, acc)


_parts_cache = {}


def participants(stmt):
    hit = _parts_cache.get(id(stmt))
    if hit is not None and hit[0] is stmt:
        return hit[1]
    acc = set()
    _collect(stmt, acc)
    fs = frozenset(acc)
    _parts_cache[id(stmt)] = (stmt, fs)
    return fs


def _collect(stmt, acc):
    match stmt:
        case Com(sender=p, receiver=q):
            acc.add(p)
            acc.add(q)
        case Sel(sender=p, receiver=q):
            acc.add(p)
            acc.add(q)
        case Start(parent=p, child=c):
            acc.add(p)
            acc.add(c)
        case Intro(introducer=p, left=q, right=r):
            acc.update((p, q, r))
        case Call(args=args):
            for a in args:
                _arg_procs(a, acc)
        case Cond(decider=d, then_branch=tb, else_branch=eb):
            acc.add(d)
            for s in tb:
                _collect(s, acc)
            for s in eb:
                _collect(s, acc)


# ---------------------------------------------------------------------------
# configurations and steps


class ChorConfig:
    __slots__ = ("body", "state", "graph", "counter", "trace", "prog")

    def __init__(self, body, state, graph, counter, trace, prog):
        self.body = body
        self.state = state
        self.graph = graph
        self.counter = counter
        self.trace = trace
        self.prog = prog

    def done(self):
        return not self.body


def make_config(prog, state=None):
    cells = {p: UNDEF for p in prog.processes}
    for name, value in (state or {}).items():
        if name not in cells:
            raise ChorError(f"initial state mentions unknown process {name}")
        cells[name] = value
    body, counter = freshen_binders(prog.main, 0)
    return ChorConfig(body, cells, set(prog.graph_edges()), counter, (), prog)


def enabled_steps(config):
    """Indices of statements that may fire now, in sequence order."""
    out = []
    blocked = set()
    for i, stmt in enumerate(config.body):
        ps = participants(stmt)
        if not (ps & blocked):
            out.append(i)
        blocked |= ps
    return out


def exec_step(config, i):
    stmt = config.body[i]
    rest = config.body[:i] + config.body[i + 1:]
    state = config.state
    graph = config.graph
    counter = config.counter
    trace = config.trace
    prog = config.prog

    match stmt:
        case Com(sender=p, expr=e, receiver=q, fn=f, span=span):
            if frozenset((p, q)) not in graph:
                raise ChorError(f"no connection between {p} and {q}",
                                process=p, span=span)
            try:
                value = eval_expr(e, state[p])
            except EvalError as err:
                raise ChorError(str(err), process=p, span=span) from None
            try:
                updated = apply_recv(f, state[q], value)
            except EvalError as err:
                raise ChorError(str(err), process=q, span=span) from None
            state = dict(state)
            state[q] = updated
            trace = trace + (("com", f"{p} -> {q}", render_value(value)),)
        case Sel(sender=p, receiver=q, label=l, span=span):
            if frozenset((p, q)) not in graph:
                raise ChorError(f"no connection between {p} and {q}",
                                process=p, span=span)
            trace = trace + (("sel", f"{p} -> {q}", l),)
        case Start(parent=p, child=c):
            state = dict(state)
            state[c] = UNDEF
            graph = set(graph)
            graph.add(frozenset((p, c)))
            trace = trace + (("start", p, c),)
        case Intro(introducer=p, left=q, right=r, span=span):
            for other in (q, r):
                if frozenset((p, other)) not in graph:
                    raise ChorError(f"no connection between {p} and {other}",
                                    process=p, span=span)
            graph = set(graph)
            graph.add(frozenset((q, r)))
            trace = trace + (("intro", p, f"{q} <-> {r}"),)
        case Call(name=name, args=args, span=span):
            d = prog.defs.get(name)
            if d is None:
                raise ChorError(f"call to undefined procedure {name}",
                                span=span)
            vals = [eval_arg(a, prog.adjacency) for a in args]
            if any(v == () for v, prm in zip(vals, d.params)
                   if is_list_param(prm)):
                pass  # a call with an empty list argument finishes at once
            else:
                mapping = dict(zip(d.params, vals))
                unfolded = subst_body(d.body, mapping)
                unfolded, counter = freshen_binders(unfolded, counter)
                rest = config.body[:i] + unfolded + config.body[i + 1:]
        case Cond(decider=d, expr=e, then_branch=tb, else_branch=eb,
                  span=span):
            try:
                guard = eval_expr(e, state[d])
            except EvalError as err:
                raise ChorError(str(err), process=d, span=span) from None
            if not isinstance(guard, bool):
                raise ChorError(f"guard evaluated to non-boolean "
                                f"{render_value(guard)}", process=d, span=span)
            branch = tb if guard else eb
            rest = config.body[:i] + branch + config.body[i + 1:]

    return ChorConfig(rest, state, graph, counter, trace, prog)


# ---------------------------------------------------------------------------
# driving


def run_choreography(prog, state=None, strategy="seq", seed=0,
                     fuel=DEFAULT_FUEL):
    config = make_config(prog, state)
    rng = _random.Random(seed) if strategy == "random" else None
    steps = 0
    while not config.done():
        if steps >= fuel:
            return FuelExhausted(config.state, config.trace, steps)
        if rng is None:
            i = 0  # statement one is always enabled
        else:
            i = rng.choice(enabled_steps(config))
        config = exec_step(config, i)
        steps += 1
    return Terminated(config.state, config.trace, steps)


def format_trace(trace):
    return "\n".join(f"{k} | {kind} | {who} | {payload}"
                     for k, (kind, who, payload) in enumerate(trace, 1))


# ---------------------------------------------------------------------------
# exhaustive exploration
#
# States reached through different interleavings are identified up to
# renaming of started processes: the canonical key renders the
# configuration with fresh names replaced by numbers in first-use
# order.


_FRESH = "#"


def _fresh_names_in_body(body, acc):
    for s in body:
        match s:
            case Com(sender=p, receiver=q):
                acc.append(p)
                acc.append(q)
            case Sel(sender=p, receiver=q):
                acc.append(p)
                acc.append(q)
            case Start(parent=p, child=c):
                acc.append(p)
                acc.append(c)
            case Intro(introducer=p, left=q, right=r):
                acc.extend((p, q, r))
            case Call(args=args):
                got = set()
                for a in args:
                    _arg_procs(a, got)
                acc.extend(sorted(got))
            case Cond(decider=d, then_branch=tb, else_branch=eb):
                acc.append(d)
                _fresh_names_in_body(tb, acc)
                _fresh_names_in_body(eb, acc)


def canonical_key(config):
    order = []
    _fresh_names_in_body(config.body, order)
    mapping = {}
    for n in order:
        if _FRESH in n and n not in mapping:
            base = n.split(_FRESH)[0]
            mapping[n] = f"{base}{_FRESH}{len(mapping)}"
    leftovers = sorted(
        (n for n in config.state if _FRESH in n and n not in mapping),
        key=lambda n: (n.split(_FRESH)[0], render_value(config.state[n])))
    for n in leftovers:
        base = n.split(_FRESH)[0]
        mapping[n] = f"{base}{_FRESH}{len(mapping)}"

    body = render_chor_body(subst_body(config.body, mapping))
    cells = "; ".join(
        f"{mapping.get(n, n)}={render_value(v)}"
        for n, v in sorted(config.state.items(),
                           key=lambda kv: mapping.get(kv[0], kv[0])))
    edges = "; ".join(sorted(
        "--".join(sorted(mapping.get(x, x) for x in e))
        for e in config.graph))
    return f"{body} || {cells} || {edges}"


@dataclass
class Exploration:
    terminal_states: list  # final cell maps, one per distinct outcome
    visited: int
    complete: bool


def explore_choreography(prog, state=None, bound=100000):
    start = make_config(prog, state)
    seen = set()
    terminals = []
    terminal_keys = set()
    complete = True
    stack = [start]
    while stack:
        config = stack.pop()
        key = canonical_key(config)
        if key in seen:
            continue
        seen.add(key)
        if len(seen) > bound:
            complete = False
            break
        if config.done():
            tkey = key.split("||", 1)[1]
            if tkey not in terminal_keys:
                terminal_keys.add(tkey)
                terminals.append(config.state)
            continue
        for i in enabled_steps(config):
            stack.append(exec_step(config, i))
    return Exploration(terminals, len(seen), complete)


def states_equivalent(a, b):
    """Final-state equality up to renaming of started processes."""
    a_src = {n: v for n, v in a.items() if _FRESH not in n}
    b_src = {n: v for n, v in b.items() if _FRESH not in n}
    if a_src != b_src:
        return False
    a_fresh = sorted((n.split(_FRESH)[0], render_value(v))
                     for n, v in a.items() if _FRESH in n)
    b_fresh = sorted((n.split(_FRESH)[0], render_value(v))
                     for n, v in b.items() if _FRESH in n)
    return a_fresh == b_fresh
