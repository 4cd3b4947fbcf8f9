"""Pretty-printers for both program levels.

Output is deterministic and reparses to an equal AST.  Two rules keep
the concrete syntax unambiguous:

* a conditional or a start-with-behaviour that is followed by more
  statements is wrapped in parentheses, since both extend greedily;
* binary operators in expressions are spaced (``fst < snd``), so the
  comparison sign cannot be absorbed into a preceding identifier.
"""

from __future__ import annotations

from .syntax import (
    BranchB, Call, CallB, Com, Cond, CondB, IntArg, Intro, IntroRecvB,
    IntroSendB, ListFn, ListLit, NameArg, RecvB, Sel, SelB, SendB, Start,
    StartB,
)
from .values import BinOp, BuiltinCall, Cell, Lit, Received, render_value


def render_expr(e):
    match e:
        case Cell():
            return "c"
        case Received():
            return "recv"
        case Lit(value=v):
            return render_value(v)
        case BuiltinCall(name=name, args=(Cell(),)):
            return name
        case BinOp(op=op, left=l, right=r):
            return f"{render_expr(l)} {op} {render_expr(r)}"
    raise ValueError(f"cannot render expression {e!r}")


def render_arg(a):
    match a:
        case NameArg(name=n):
            return n
        case IntArg(value=v):
            return str(v)
        case ListLit(items=items):
            return "[" + ", ".join(render_arg(x) for x in items) + "]"
        case ListFn(name="++" | "\\" as op, args=(l, r)):
            return f"{render_arg(l)} {op} {render_arg(r)}"
        case ListFn(name=name, args=args):
            return name + "(" + ", ".join(render_arg(x) for x in args) + ")"
    raise ValueError(f"cannot render argument {a!r}")


def _render_call(name, args):
    if not args:
        return name + "()"
    return name + "<" + ", ".join(render_arg(a) for a in args) + ">"


# ---------------------------------------------------------------------------
# choreographies


def render_chor_body(body):
    if not body:
        return "0"
    parts = []
    for k, stmt in enumerate(body):
        text = _chor_stmt(stmt)
        if isinstance(stmt, Cond) and k + 1 < len(body):
            text = f"({text})"
        parts.append(text)
    return "; ".join(parts)


def _chor_stmt(s):
    match s:
        case Com(sender=p, expr=e, receiver=q, fn=f):
            return f"{p}.{render_expr(e)} -> {q}.{f}"
        case Sel(sender=p, receiver=q, label=l):
            return f"{p} -> {q}[{l}]"
        case Start(parent=p, child=q):
            return f"{p} start {q}"
        case Intro(introducer=p, left=q, right=r):
            return f"{p}: {q} <-> {r}"
        case Call(name=name, args=args):
            return _render_call(name, args)
        case Cond(decider=p, expr=e, then_branch=tb, else_branch=eb):
            return (f"if {p}.{render_expr(e)} "
                    f"then {render_chor_body(tb)} "
                    f"else {render_chor_body(eb)}")
    raise ValueError(f"cannot render statement {s!r}")


def render_choreography(prog):
    lines = []
    if prog.processes:
        lines.append("processes " + ", ".join(prog.processes))
    if prog.graph is not None:
        lines.append("graph { " + _edges(prog.graph) + " }")
    if prog.adjacency:
        lines.append("adjacency { " + _edges(prog.adjacency) + " }")
    if lines:
        lines.append("")
    for name in prog.defs:
        d = prog.defs[name]
        params = "(" + ", ".join(d.params) + ")"
        lines.append(f"{d.name}{params} = {render_chor_body(d.body)}")
    lines.append(f"main = {render_chor_body(prog.main)}")
    return "\n".join(lines) + "\n"


def _edges(edges):
    pairs = sorted(tuple(sorted(e)) for e in edges)
    return "; ".join(f"{a} <-> {b}" for a, b in pairs)


# ---------------------------------------------------------------------------
# process terms


def render_pp_body(body):
    if not body:
        return "0"
    parts = []
    for k, stmt in enumerate(body):
        text = _pp_stmt(stmt)
        if isinstance(stmt, (CondB, StartB)) and k + 1 < len(body):
            text = f"({text})"
        parts.append(text)
    return "; ".join(parts)


def _pp_stmt(s):
    match s:
        case SendB(peer=p, expr=e):
            return f"{p}!{render_expr(e)}"
        case RecvB(peer=p, fn=f):
            return f"{p}?{f}"
        case SelB(peer=p, label=l):
            return f"{p}(+){l}"
        case BranchB(peer=p, branches=bs):
            inner = ", ".join(f"{l}: {render_pp_body(b)}" for l, b in bs)
            return f"{p}&{{{inner}}}"
        case StartB(child=q, behaviour=b):
            return f"start {q} |> {render_pp_body(b)}"
        case IntroSendB(left=q, right=r):
            return f"{q} <-> {r}"
        case IntroRecvB(introducer=p, bound=r):
            return f"{p}?({r})"
        case CallB(name=name, args=args):
            return _render_call(name, args)
        case CondB(expr=e, then_branch=tb, else_branch=eb):
            return (f"if {render_expr(e)} "
                    f"then {render_pp_body(tb)} "
                    f"else {render_pp_body(eb)}")
    raise ValueError(f"cannot render behaviour {s!r}")


def render_processes(prog):
    lines = []
    if prog.graph is not None:
        lines.append("graph { " + _edges(prog.graph) + " }")
    if prog.adjacency:
        lines.append("adjacency { " + _edges(prog.adjacency) + " }")
    if lines:
        lines.append("")
    for name in prog.defs:
        d = prog.defs[name]
        params = "(" + ", ".join(d.params) + ")"
        lines.append(f"{d.name}{params} = {render_pp_body(d.body)}")
    entries = []
    for name, value, beh in prog.network:
        val = "" if value is None else f"[{render_value(value)}]"
        entries.append(f"{name}{val} |> {render_pp_body(beh)}")
    if not entries:
        raise ValueError("cannot render an empty network")
    lines.append("net = " + entries[0])
    for e in entries[1:]:
        lines.append("    | " + e)
    return "\n".join(lines) + "\n"
