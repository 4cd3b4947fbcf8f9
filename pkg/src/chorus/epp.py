"""Projection of a choreography onto its processes.

Every procedure X(p1, .., pn) projects once per parameter, giving
process-level procedures X_p1 .. X_pn.  A projected call keeps the
original argument list; at run time a process unfolds X_pj only when
it occurs in the evaluated argument at position j (the dispatch
position), so one emitted call serves every member of a process list.

A call site that mentions the projected name in several positions
emits one call per position, in order.  That is sound when the
positions are occupied by disjoint processes at run time, which the
connection checker's well-formedness assumptions guarantee.

Two families of procedures get summarised instead of called:

* selection broadcasts, where each member of a list receives exactly
  one label from a fixed sender: the member side becomes an offer
  carrying its own continuation, so conditionals whose branches select
  different labels merge into one offer;
* introduction broadcasts, where each member is introduced to a fixed
  process: the member side becomes a single introduction receive,
  binding the incoming name for the rest of the behaviour.

A summary is only used where the argument expression certainly
contains the projected process (the whole list, a concatenation
containing it, or a literal list naming it); partial arguments like
hd(R) or tl(R) keep the call, and the dispatch mechanism sorts
membership out at run time.

Branches of a conditional project on every non-deciding process by
merging: equal heads sequence, offers union their labels, and two
different calls with equal arguments fuse into a synthesised
procedure whose body is the merge of both bodies.
"""

from __future__ import annotations

from .printer import render_pp_body
from .syntax import (
    BranchB, Call, CallB, Com, Cond, CondB, Intro, IntroRecvB, IntroSendB,
    ListFn, ListLit, NameArg, PPProcDef, PPProgram, RecvB, Sel, SelB, SendB,
    Start, StartB, is_list_param,
)


class ProjectionError(Exception):
    def __init__(self, msg, span=None, role=None):
        self.msg = msg
        self.span = span
        self.role = role
        super().__init__(msg)

    def __str__(self):
        at = f" at role {self.role}" if self.role else ""
        where = f" ({self.span})" if self.span else ""
        return f"{self.msg}{at}{where}"


def _mentions(arg, r):
    match arg:
        case NameArg(name=n):
            return n == r
        case ListLit(items=items):
            return any(_mentions(x, r) for x in items)
        case ListFn(args=args):
            return any(_mentions(x, r) for x in args)
    return False


def _covers(arg, r):
    """True when every process named by r is certainly inside arg."""
    match arg:
        case NameArg(name=n):
            return n == r
        case ListFn(name="++" | "join", args=args):
            return any(_covers(x, r) for x in args)
        case ListLit(items=items):
            return any(_covers(x, r) for x in items)
    return False


def _stmt_names(stmt):
    match stmt:
        case Com(sender=p, receiver=q):
            return (p, q)
        case Sel(sender=p, receiver=q):
            return (p, q)
        case Start(parent=p, child=c):
            return (p, c)
        case Intro(introducer=p, left=q, right=t):
            return (p, q, t)
    return ()


class Projector:
    def __init__(self, prog, prune=True):
        self.prog = prog
        self.prune = prune
        self.out_defs = {}
        self._summaries = {}
        self._merged = {}

    # -- entry ---------------------------------------------------------------

    def project(self):
        for dname, d in self.prog.defs.items():
            for j in range(len(d.params)):
                self._ensure_def(dname, j)
        network = tuple((p, None, self._proj(self.prog.main, p))
                        for p in self.prog.processes)
        defs = self.out_defs
        if self.prune:
            defs, network = _prune_args(defs, network)
        return PPProgram(defs, network, self.prog.graph, self.prog.adjacency)

    def _ensure_def(self, dname, j):
        d = self.prog.defs[dname]
        pname = f"{dname}_{d.params[j]}"
        if pname in self.out_defs:
            return pname
        self.out_defs[pname] = None  # in progress
        body = self._proj(d.body, d.params[j])
        self.out_defs[pname] = PPProcDef(pname, d.params, body,
                                         dispatch_position=j, span=d.span)
        return pname

    # -- summaries -----------------------------------------------------------

    def _summary(self, kind, name, j, stack=frozenset()):
        key = (kind, name, j)
        if key in self._summaries:
            return self._summaries[key]
        if key in stack:
            return "rec"
        d = self.prog.defs[name]
        pj = d.params[j]
        cand = None
        pending = []
        for stmt in d.body:
            if isinstance(stmt, Cond):
                cand = None
                break
            if isinstance(stmt, Call):
                ks = [k for k, a in enumerate(stmt.args) if _mentions(a, pj)]
                if not ks:
                    continue
                if len(ks) > 1:
                    cand = None
                    break
                sub = self._summary(kind, stmt.name, ks[0], stack | {key})
                if sub is None:
                    cand = None
                    break
                if sub == "rec":
                    if stmt.name != name or ks[0] != j:
                        cand = None
                        break
                    pending.append(stmt.args)
                    continue
                c = self._translate(sub, stmt.args, d.params)
            elif pj in _stmt_names(stmt):
                c = self._direct(kind, stmt, pj, d.params)
            else:
                continue
            if c is None or (cand is not None and c != cand):
                cand = None
                break
            cand = c
        if cand is not None:
            # self recursive calls must pass the same roles through
            for args in pending:
                for idx in cand[:-1] if kind == "sel" else cand:
                    a = args[idx]
                    if not (isinstance(a, NameArg) and a.name == d.params[idx]):
                        cand = None
                        break
                if cand is None:
                    break
        self._summaries[key] = cand
        return cand

    @staticmethod
    def _direct(kind, stmt, pj, params):
        if kind == "sel" and isinstance(stmt, Sel) and stmt.receiver == pj:
            if stmt.sender in params:
                return (params.index(stmt.sender), stmt.label)
        if kind == "intro" and isinstance(stmt, Intro):
            if stmt.left == pj or stmt.right == pj:
                other = stmt.right if stmt.left == pj else stmt.left
                if stmt.introducer in params and other in params:
                    return (params.index(stmt.introducer),
                            params.index(other))
        return None

    @staticmethod
    def _translate(sub, args, params):
        out = []
        for part in sub:
            if isinstance(part, str):  # a selection label passes through
                out.append(part)
                continue
            a = args[part]
            if not (isinstance(a, NameArg) and a.name in params):
                return None
            out.append(params.index(a.name))
        return tuple(out)

    # -- projection ----------------------------------------------------------

    def _proj(self, stmts, r):
        try:
            return self._proj_stmts(stmts, r)
        except ProjectionError as e:
            if e.role is None:
                e.role = r  # innermost role is the one that failed
            raise

    def _proj_stmts(self, stmts, r):
        out = []
        for i, s in enumerate(stmts):
            rest = stmts[i + 1:]
            match s:
                case Com(sender=p, expr=e, receiver=q, fn=f, span=span):
                    if r == p:
                        out.append(SendB(q, e, span=span))
                    elif r == q:
                        out.append(RecvB(p, f, span=span))
                case Sel(sender=p, receiver=q, label=l, span=span):
                    if r == p:
                        out.append(SelB(q, l, span=span))
                    elif r == q:
                        out.append(BranchB(p, ((l, self._proj(rest, r)),),
                                           span=span))
                        return tuple(out)
                case Start(parent=p, child=c, span=span):
                    if r == p:
                        out.append(StartB(c, self._proj(rest, c), span=span))
                case Intro(introducer=p, left=q, right=t, span=span):
                    if r == p:
                        out.append(IntroSendB(q, t, span=span))
                    elif r == q:
                        out.append(IntroRecvB(p, t, span=span))
                    elif r == t:
                        out.append(IntroRecvB(p, q, span=span))
                case Cond(decider=d, expr=e, then_branch=tb, else_branch=eb,
                          span=span):
                    pt = self._proj(tb + rest, r)
                    pe = self._proj(eb + rest, r)
                    if r == d:
                        out.append(CondB(e, pt, pe, span=span))
                    else:
                        out.extend(self._merge(pt, pe, span))
                    return tuple(out)
                case Call(name=name, args=args, span=span):
                    js = [j for j, a in enumerate(args) if _mentions(a, r)]
                    emitted, consumed = self._emit_call(
                        name, args, js, rest, r, span)
                    out.extend(emitted)
                    if consumed:
                        return tuple(out)
        return tuple(out)

    def _emit_call(self, name, args, js, rest, r, span):
        """Behaviour for one call site; consumed means rest was taken."""
        if not js:
            return (), False
        j, more = js[0], js[1:]
        d = self.prog.defs.get(name)
        if d is None:
            raise ProjectionError(f"call to undefined procedure {name}", span)
        # a summary stands in for the whole call only when this role is
        # one member of the list the call walks over; a process named at
        # a plain parameter lives through every iteration instead
        if is_list_param(d.params[j]) and _covers(args[j], r):
            sel = self._summary("sel", name, j)
            if sel is not None and isinstance(args[sel[0]], NameArg):
                sender = args[sel[0]].name
                inner, consumed = self._emit_call(name, args, more, rest, r,
                                                  span)
                if not consumed:
                    inner = inner + self._proj(rest, r)
                return (BranchB(sender, ((sel[1], inner),), span=span),), True
            intro = self._summary("intro", name, j)
            if (intro is not None and isinstance(args[intro[0]], NameArg)
                    and isinstance(args[intro[1]], NameArg)):
                recv = IntroRecvB(args[intro[0]].name, args[intro[1]].name,
                                  span=span)
                nxt, consumed = self._emit_call(name, args, more, rest, r,
                                                span)
                return (recv,) + nxt, consumed
        callee = self._ensure_def(name, j)
        nxt, consumed = self._emit_call(name, args, more, rest, r, span)
        return (CallB(callee, args, span=span),) + nxt, consumed

    # -- merging -------------------------------------------------------------

    def _merge(self, a, b, span):
        if a == b:
            return a
        if a and b:
            ha, hb = a[0], b[0]
            if ha == hb:
                return (ha,) + self._merge(a[1:], b[1:], span)
            if (isinstance(ha, BranchB) and isinstance(hb, BranchB)
                    and ha.peer == hb.peer and not a[1:] and not b[1:]):
                labels = dict(ha.branches)
                for l, body in hb.branches:
                    labels[l] = (self._merge(labels[l], body, span)
                                 if l in labels else body)
                return (BranchB(ha.peer, tuple(labels.items()), span=ha.span),)
            if (isinstance(ha, CondB) and isinstance(hb, CondB)
                    and ha.expr == hb.expr and not a[1:] and not b[1:]):
                return (CondB(ha.expr,
                              self._merge(ha.then_branch, hb.then_branch, span),
                              self._merge(ha.else_branch, hb.else_branch, span),
                              span=ha.span),)
            if (isinstance(ha, CallB) and isinstance(hb, CallB)
                    and ha.args == hb.args):
                merged = self._merged_def(ha.name, hb.name, span)
                return ((CallB(merged, ha.args, span=ha.span),)
                        + self._merge(a[1:], b[1:], span))
        raise ProjectionError(
            "branches cannot be merged: one side is "
            f"{render_pp_body(a[:1])} and the other {render_pp_body(b[:1])}",
            span)

    def _merged_def(self, x, y, span):
        if x == y:
            return x
        if (x, y) in self._merged:
            return self._merged[(x, y)]
        dx = self.out_defs.get(x)
        dy = self.out_defs.get(y)
        if dx is None or dy is None:
            raise ProjectionError(
                f"cannot merge {x} with {y} while projecting them", span)
        if dx.params != dy.params:
            raise ProjectionError(
                f"cannot merge {x} with {y}: parameter lists differ", span)
        if dx.dispatch_position != dy.dispatch_position:
            raise ProjectionError(
                f"cannot merge {x} with {y}: different dispatch parameters",
                span)
        name = f"{x}__{y}"
        self._merged[(x, y)] = name
        body = self._merge(dx.body, dy.body, span)
        self.out_defs[name] = PPProcDef(name, dx.params, body,
                                        dispatch_position=dx.dispatch_position)
        return name


# ---------------------------------------------------------------------------
# argument pruning
#
# A projected procedure rarely needs every original parameter.  Keep
# the dispatch parameter plus any parameter whose name reaches an
# action or a kept argument of a callee, to a fixpoint, then rewrite
# every definition and call site.


def _names_in_arg(arg, acc):
    match arg:
        case NameArg(name=n):
            acc.add(n)
        case ListLit(items=items):
            for x in items:
                _names_in_arg(x, acc)
        case ListFn(args=args):
            for x in args:
                _names_in_arg(x, acc)


def _walk_used(body, used_names, call_positions, defs, used):
    for s in body:
        match s:
            case SendB(peer=p) | RecvB(peer=p) | SelB(peer=p):
                used_names.add(p)
            case BranchB(peer=p, branches=bs):
                used_names.add(p)
                for _, b in bs:
                    _walk_used(b, used_names, call_positions, defs, used)
            case StartB(behaviour=b):
                _walk_used(b, used_names, call_positions, defs, used)
            case IntroSendB(left=q, right=t):
                used_names.add(q)
                used_names.add(t)
            case IntroRecvB(introducer=p, bound=r):
                used_names.add(p)
                used_names.add(r)
            case CondB(then_branch=tb, else_branch=eb):
                _walk_used(tb, used_names, call_positions, defs, used)
                _walk_used(eb, used_names, call_positions, defs, used)
            case CallB(name=callee, args=args):
                keep = used.get(callee)
                positions = range(len(args)) if keep is None else sorted(keep)
                for k in positions:
                    if k < len(args):
                        _names_in_arg(args[k], used_names)


def _prune_args(defs, network):
    # the dispatch argument decides unfolding and an empty list
    # argument ends the recursion, so neither kind can be dropped
    used = {name: {d.dispatch_position}
            | {i for i, p in enumerate(d.params) if is_list_param(p)}
            for name, d in defs.items()}
    while True:
        changed = False
        for name, d in defs.items():
            names = set()
            _walk_used(d.body, names, None, defs, used)
            positions = {i for i, p in enumerate(d.params) if p in names}
            if not positions <= used[name]:
                used[name] |= positions
                changed = True
        if not changed:
            break

    def rewrite(body):
        out = []
        for s in body:
            match s:
                case BranchB(peer=p, branches=bs, span=span):
                    out.append(BranchB(p, tuple((l, rewrite(b))
                                                for l, b in bs), span=span))
                case StartB(child=c, behaviour=b, span=span):
                    out.append(StartB(c, rewrite(b), span=span))
                case CondB(expr=e, then_branch=tb, else_branch=eb, span=span):
                    out.append(CondB(e, rewrite(tb), rewrite(eb), span=span))
                case CallB(name=callee, args=args, span=span):
                    keep = sorted(used.get(callee, range(len(args))))
                    out.append(CallB(callee,
                                     tuple(args[k] for k in keep if
                                           k < len(args)), span=span))
                case _:
                    out.append(s)
        return tuple(out)

    new_defs = {}
    for name, d in defs.items():
        keep = sorted(used[name])
        params = tuple(d.params[k] for k in keep)
        dispatch = keep.index(d.dispatch_position)
        new_defs[name] = PPProcDef(name, params, rewrite(d.body),
                                   dispatch_position=dispatch, span=d.span)
    new_network = tuple((p, v, rewrite(b)) for p, v, b in network)
    return new_defs, new_network


def project(prog, prune=True):
    return Projector(prog, prune=prune).project()


def merge_behaviours(a, b):
    """The least behaviour that stands in for both sides of a
    conditional the deciding process never tells us about: offers take
    the union of their labels, everything else has to agree.  Raises
    ProjectionError when no such behaviour exists."""
    return Projector(None, prune=False)._merge(tuple(a), tuple(b), None)


def check_projectable(prog):
    """Try to project every procedure at every parameter and main at
    every process; returns the failures as a list of errors, empty
    when projection goes through."""
    errors = []
    for dname, d in prog.defs.items():
        for j in range(len(d.params)):
            pj = Projector(prog, prune=False)
            try:
                pj._ensure_def(dname, j)
            except ProjectionError as e:
                errors.append(e)
    for p in prog.processes:
        pj = Projector(prog, prune=False)
        try:
            pj._proj(prog.main, p)
        except ProjectionError as e:
            errors.append(e)
    return errors
