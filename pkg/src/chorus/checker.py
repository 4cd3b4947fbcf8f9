"""Static connection checking.

Every communication, selection and introduction needs the two (or
three) processes involved to be connected.  Connections come from the
declared graph, from starting a process, and from introductions, so
whether a choreography only ever talks along existing edges is a
static question.

Procedures are summarised by contracts over their parameters:

* Req(X): unordered pairs of parameters that must be connected before
  calling X.  Requirements are uniform with respect to lists: a pair
  involving a list parameter means the edge is needed for every
  member, and a pair {A, A} means all members of A are pairwise
  connected.
* Ens(X): pairs guaranteed connected after X returns.

Req grows from the empty set (a least fixpoint), Ens shrinks from all
pairs (a greatest fixpoint); both are iterated together until stable.
Inside a body, facts are tracked over a small part language: a name,
or a part of a list parameter (all, hd, tl, or an unspecified
sublist), optionally tagged as "the members adjacent to x" for
neighb.  A fact about all of A covers any part of A, and facts about
hd(A) and tl(A) combine into one about all of A.  A required edge
whose endpoints cannot be expressed over the parameters (a started
process, say) must hold on the spot, otherwise it is a diagnostic at
that statement.

The adjacency axiom: members of neighb(x, V) are adjacent to x by
construction, so the edge to x is free as long as every declared
adjacency edge is also a graph edge, which is checked once up front.

The body of main is walked with concrete names and exact list values,
checking the same contracts against the accumulated concrete edges.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chor_engine import ChorError, eval_arg
from .syntax import (
    Call, Com, Cond, Intro, IntArg, ListFn, ListLit, NameArg, Sel, Start,
    is_list_param,
)
from .values import EvalError


@dataclass(frozen=True)
class Part:
    """A slice of list parameter `base`: all of it, its head, its
    tail, or some sublist; adj narrows it to the members adjacent to
    another atom."""
    base: str
    kind: str           # all | hd | tl | sub
    adj: object = None  # another atom, for neighb


@dataclass
class Diagnostic:
    msg: str
    span: object = None

    def __str__(self):
        if self.span is not None:
            return f"{self.span}: {self.msg}"
        return self.msg


def _leq(a, b):
    """a is certainly contained in b."""
    if a == b:
        return True
    return (isinstance(a, Part) and isinstance(b, Part)
            and a.base == b.base and b.kind == "all" and b.adj is None)


def _pair(a, b):
    return frozenset((a, b))


def _covered(req, facts, adj_ok):
    """Is the required pair implied by the fact set?"""
    u, v = tuple(req) if len(req) == 2 else (next(iter(req)),) * 2
    if adj_ok:
        # neighb members are adjacent to the pivot by construction
        for x, y in ((u, v), (v, u)):
            if isinstance(x, Part) and x.adj is not None and x.adj == y:
                return True
    for fact in facts:
        b, c = tuple(fact) if len(fact) == 2 else (next(iter(fact)),) * 2
        if (_leq(u, b) and _leq(v, c)) or (_leq(u, c) and _leq(v, b)):
            return True
    return False


def _close(facts):
    """hd and tl of the same list connected to the same atom make all."""
    changed = True
    while changed:
        changed = False
        for fact in list(facts):
            if len(fact) != 2:
                continue
            a, b = tuple(fact)
            for x, part in ((a, b), (b, a)):
                if (isinstance(part, Part) and part.kind == "hd"
                        and part.adj is None):
                    other = Part(part.base, "tl")
                    if _pair(x, other) in facts:
                        whole = _pair(x, Part(part.base, "all"))
                        if whole not in facts:
                            facts.add(whole)
                            changed = True
    return facts


# ---------------------------------------------------------------------------
# abstract argument values
#
# A list argument becomes a set of atoms (pieces); weakened values
# (tails, sublists, literal lists that lost members) must not grant
# facts for their bare-name pieces, so the flag rides along.


@dataclass(frozen=True)
class AbsList:
    pieces: frozenset
    weakened: bool = False


def _weaken_piece(p, kind, adj=None):
    if isinstance(p, Part):
        new_kind = kind if p.kind == "all" else "sub"
        return Part(p.base, new_kind, adj)
    return p  # a bare name: kept for requirements, unreliable for facts


def _abs_list(arg, params):
    match arg:
        case NameArg(name=n):
            if is_list_param(n):
                return AbsList(frozenset((Part(n, "all"),)))
            return AbsList(frozenset((n,)))
        case ListLit(items=items):
            pieces = set()
            for x in items:
                pieces.add(_abs_proc(x, params))
            return AbsList(frozenset(pieces))
        case ListFn(name=name, args=args):
            if name in ("++", "join"):
                l = _abs_list(args[0], params)
                r = _abs_list(args[1], params)
                return AbsList(l.pieces | r.pieces,
                               l.weakened or r.weakened)
            if name == "\\":
                l = _abs_list(args[0], params)
                return AbsList(frozenset(_weaken_piece(p, "sub")
                                         for p in l.pieces), True)
            if name == "tl":
                l = _abs_list(args[0], params)
                return AbsList(frozenset(_weaken_piece(p, "tl")
                                         for p in l.pieces), True)
            if name == "neighb":
                pivot = _abs_proc(args[0], params)
                l = _abs_list(args[1], params)
                return AbsList(frozenset(_weaken_piece(p, "sub", pivot)
                                         for p in l.pieces), True)
            if name in ("fst", "rest", "minor", "even", "odd",
                        "half1", "half2"):
                l = _abs_list(args[0], params)
                return AbsList(frozenset(_weaken_piece(p, "sub")
                                         for p in l.pieces), True)
    raise ChorError(f"not a list argument: {arg!r}")


def _abs_proc(arg, params):
    match arg:
        case NameArg(name=n):
            return n
        case ListFn(name="hd", args=args):
            l = _abs_list(args[0], params)
            pieces = [_weaken_piece(p, "hd") for p in l.pieces]
            if len(pieces) == 1:
                return pieces[0]
            # head of a multi-piece list: any of them; fold to a
            # requirement on each by returning the tuple
            return tuple(sorted(pieces, key=repr))
    raise ChorError(f"not a process argument: {arg!r}")


def _atoms(x):
    return x if isinstance(x, tuple) else (x,)


# ---------------------------------------------------------------------------
# contract inference


class _Checker:
    def __init__(self, prog):
        self.prog = prog
        self.req = {name: set() for name in prog.defs}
        self.ens = {name: self._all_pairs(d.params)
                    for name, d in prog.defs.items()}
        self.diags = []
        self.adj_ok = self._adjacency_ok()

    @staticmethod
    def _all_pairs(params):
        out = set()
        for i, a in enumerate(params):
            for b in params[i:]:
                if a == b and not is_list_param(a):
                    continue
                out.add(_pair(a, b))
        return out

    def _adjacency_ok(self):
        if not self.prog.adjacency:
            return True
        graph = self.prog.graph_edges()
        return self.prog.adjacency <= graph

    # -- parameter-level entry facts --------------------------------------

    @staticmethod
    def _entry_atom(p):
        return Part(p, "all") if is_list_param(p) else p

    def _entry_facts(self, name):
        d = self.prog.defs[name]
        facts = set()
        for pair in self.req[name]:
            facts.add(frozenset(self._entry_atom(p) for p in pair))
        return facts, d

    # -- instantiation ------------------------------------------------------

    def _call_env(self, d, args):
        env = {}
        for p, a in zip(d.params, args):
            if is_list_param(p):
                env[p] = _abs_list(a, d.params)
            else:
                env[p] = _abs_proc(a, d.params)
        return env

    @staticmethod
    def _inst_atoms(env, p):
        """Atoms a parameter stands for, each with whether it can
        carry a fact: a bare name piece of a weakened list might not
        be a member at all, but a part atom describes its slice
        exactly."""
        v = env[p]
        if isinstance(v, AbsList):
            return tuple((a, isinstance(a, Part) or not v.weakened)
                         for a in v.pieces)
        return tuple((a, True) for a in _atoms(v))

    def _inst_pairs(self, name, pairs, env):
        out = []
        for pair in pairs:
            ps = tuple(pair)
            if len(ps) == 1:
                atoms = self._inst_atoms(env, ps[0])
                pairings = [(x, y) for i, x in enumerate(atoms)
                            for y in atoms[i:]]
            else:
                pairings = [(x, y)
                            for x in self._inst_atoms(env, ps[0])
                            for y in self._inst_atoms(env, ps[1])]
            for (a, ta), (b, tb) in pairings:
                if a == b and not isinstance(a, Part):
                    continue
                out.append((_pair(a, b), not (ta and tb)))
        return out

    # -- body analysis ------------------------------------------------------

    def _require(self, defname, params, facts, pair, span, what, collect):
        if _covered(pair, facts, self.adj_ok):
            return
        bases = set()
        for a in pair:
            base = a.base if isinstance(a, Part) else a
            bases.add(base)
            if base not in params:
                if collect:
                    u, v = sorted(_render_atom(x) for x in _atoms_of(pair))
                    self.diags.append(Diagnostic(
                        f"in {defname}: {u} and {v} are not connected "
                        f"when {what}", span))
                return
        # liftable to a parameter assumption
        self.req[defname].add(frozenset(bases))
        facts.add(frozenset(self._entry_atom(b) for b in bases))

    def _analyze_def(self, name, collect=False):
        facts, d = self._entry_facts(name)
        exit_facts = self._walk(name, d.params, d.body, _close(facts),
                                collect)
        ens = set()
        entry, _ = self._entry_facts(name)
        for pair in self._all_pairs(d.params):
            atom_pair = frozenset(self._entry_atom(p) for p in pair)
            if _covered(atom_pair, exit_facts, False) \
                    and not _covered(atom_pair, _close(entry), False):
                ens.add(pair)
        return ens

    def _walk(self, defname, params, body, facts, collect):
        for stmt in body:
            match stmt:
                case Com(sender=p, receiver=q, span=span):
                    self._require(defname, params, facts, _pair(p, q), span,
                                  f"{p} communicates with {q}", collect)
                case Sel(sender=p, receiver=q, span=span):
                    self._require(defname, params, facts, _pair(p, q), span,
                                  f"{p} selects at {q}", collect)
                case Start(parent=p, child=c):
                    facts.add(_pair(p, c))
                case Intro(introducer=p, left=q, right=r, span=span):
                    self._require(defname, params, facts, _pair(p, q), span,
                                  f"{p} introduces {q}", collect)
                    self._require(defname, params, facts, _pair(p, r), span,
                                  f"{p} introduces {r}", collect)
                    facts.add(_pair(q, r))
                    _close(facts)
                case Cond(then_branch=tb, else_branch=eb):
                    f1 = self._walk(defname, params, tb, set(facts), collect)
                    f2 = self._walk(defname, params, eb, set(facts), collect)
                    facts.clear()
                    facts.update(f1 & f2)
                case Call(name=callee, args=args, span=span):
                    d = self.prog.defs.get(callee)
                    if d is None:
                        continue  # the validator already rejected this
                    try:
                        env = self._call_env(d, args)
                    except ChorError:
                        continue
                    for pair, _ in self._inst_pairs(callee,
                                                    self.req[callee], env):
                        self._require(defname, params, facts, pair, span,
                                      f"calling {callee}", collect)
                    for pair, untrusted in self._inst_pairs(
                            callee, self.ens[callee], env):
                        if untrusted:
                            continue  # a maybe-member: no fact granted
                        facts.add(pair)
                    _close(facts)
        return facts

    # -- fixpoint -----------------------------------------------------------

    def infer(self):
        cap = max(4, 2 * len(self.prog.defs))
        for _ in range(cap):
            changed = False
            for name in self.prog.defs:
                old_req = set(self.req[name])
                ens = self._analyze_def(name)
                if ens != self.ens[name] or old_req != self.req[name]:
                    self.ens[name] = ens
                    changed = True
            if not changed:
                return
        self.diags.append(Diagnostic(
            "connection contracts did not stabilize; treating the last "
            "iteration as final"))

    # -- main ---------------------------------------------------------------

    def _concrete_pairs(self, pairs, d, args, span):
        values = []
        for p, a in zip(d.params, args):
            try:
                values.append(eval_arg(a, self.prog.adjacency))
            except (ChorError, EvalError) as e:
                self.diags.append(Diagnostic(str(e), span))
                values.append(() if is_list_param(p) else None)
        env = dict(zip(d.params, values))
        out = []
        for pair in pairs:
            ps = tuple(pair)
            sides = []
            for p in ps:
                v = env[p]
                if v is None:
                    sides.append(())
                elif isinstance(v, tuple):
                    sides.append(v)
                else:
                    sides.append((v,))
            if len(sides) == 1:
                sides.append(sides[0])
            for a in sides[0]:
                for b in sides[1]:
                    if a != b:
                        out.append(_pair(a, b))
        return out

    def check_main(self):
        edges = set(self.prog.graph_edges())
        self._walk_main(self.prog.main, edges)

    def _require_main(self, edges, pair, span, what):
        if pair in edges:
            return
        u, v = sorted(pair)
        self.diags.append(Diagnostic(
            f"{u} and {v} are not connected when {what}", span))
        edges.add(pair)  # report each missing edge once

    def _walk_main(self, body, edges):
        for stmt in body:
            match stmt:
                case Com(sender=p, receiver=q, span=span):
                    self._require_main(edges, _pair(p, q), span,
                                       f"{p} communicates with {q}")
                case Sel(sender=p, receiver=q, span=span):
                    self._require_main(edges, _pair(p, q), span,
                                       f"{p} selects at {q}")
                case Start(parent=p, child=c):
                    edges.add(_pair(p, c))
                case Intro(introducer=p, left=q, right=r, span=span):
                    self._require_main(edges, _pair(p, q), span,
                                       f"{p} introduces {q}")
                    self._require_main(edges, _pair(p, r), span,
                                       f"{p} introduces {r}")
                    edges.add(_pair(q, r))
                case Cond(then_branch=tb, else_branch=eb):
                    e1 = set(edges)
                    e2 = set(edges)
                    self._walk_main(tb, e1)
                    self._walk_main(eb, e2)
                    edges.clear()
                    edges.update(e1 & e2)
                case Call(name=callee, args=args, span=span):
                    d = self.prog.defs.get(callee)
                    if d is None:
                        continue
                    for pair in self._concrete_pairs(self.req[callee], d,
                                                     args, span):
                        self._require_main(edges, pair, span,
                                           f"calling {callee}")
                    for pair in self._concrete_pairs(self.ens[callee], d,
                                                     args, span):
                        edges.add(pair)


def _atoms_of(pair):
    ps = tuple(pair)
    return ps if len(ps) == 2 else ps * 2


def _render_atom(a):
    if isinstance(a, Part):
        if a.adj is not None:
            return f"neighb({_render_atom(a.adj)}, {a.base})"
        if a.kind == "all":
            return a.base
        return f"{a.kind}({a.base})"
    return a


def check_connections(prog):
    """All communications happen along connected pairs; returns
    diagnostics, empty when the program checks out."""
    ck = _Checker(prog)
    if not ck.adj_ok:
        missing = sorted(tuple(sorted(e))
                         for e in prog.adjacency - prog.graph_edges())
        pairs = "; ".join(f"{a} <-> {b}" for a, b in missing)
        ck.diags.append(Diagnostic(
            f"adjacency edges missing from the graph: {pairs}"))
    ck.infer()
    for name in prog.defs:
        ck._analyze_def(name, collect=True)
    ck.check_main()
    return ck.diags
