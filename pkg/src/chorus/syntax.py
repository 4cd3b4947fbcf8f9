"""Abstract syntax for choreographies and for projected process terms.

Statement sequences are plain tuples; the empty tuple is the finished
term.  Every node carries an optional source span that is excluded
from equality, so structurally identical terms from different places
compare equal (the merge operator and the simulators rely on this).

Naming convention for procedure parameters: an identifier whose first
letter is uppercase stands for a list of processes, lowercase for a
single process.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"line {self.line}, col {self.col}"


def is_list_param(name):
    return name[:1].isupper()


# ---------------------------------------------------------------------------
# arguments to procedure calls
#
# An argument is a name, a bracketed list of arguments, or an
# application of one of the list functions (hd, tl, ++, \, fst, rest,
# minor, even, odd, half1, half2, join, neighb, len).


@dataclass(frozen=True)
class NameArg:
    name: str


@dataclass(frozen=True)
class IntArg:
    value: int


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class ListFn:
    name: str
    args: tuple


LIST_FNS = {
    "hd": 1, "tl": 1, "fst": (1, 2), "rest": (1, 2), "minor": 1,
    "even": 1, "odd": 1, "half1": 1, "half2": 1,
    "join": 2, "neighb": 2, "len": 1, "++": 2, "\\": 2,
}


# ---------------------------------------------------------------------------
# choreography statements


@dataclass(frozen=True)
class Com:
    sender: str
    expr: object
    receiver: str
    fn: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Sel:
    sender: str
    receiver: str
    label: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Start:
    parent: str
    child: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Intro:
    introducer: str
    left: str
    right: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Cond:
    decider: str
    expr: object
    then_branch: tuple
    else_branch: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ProcDef:
    name: str
    params: tuple
    body: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ChorProgram:
    defs: dict
    main: tuple
    processes: tuple
    # both relations are sets of frozenset({a, b}) pairs; graph=None
    # means the declared processes start fully connected
    graph: frozenset | None
    adjacency: frozenset

    def graph_edges(self):
        if self.graph is not None:
            return self.graph
        ps = self.processes
        return frozenset(frozenset((a, b)) for a in ps for b in ps if a < b)


# ---------------------------------------------------------------------------
# process-level behaviours


@dataclass(frozen=True)
class SendB:
    peer: str
    expr: object
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RecvB:
    peer: str
    fn: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SelB:
    peer: str
    label: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class BranchB:
    peer: str
    branches: tuple  # of (label, behaviour tuple), in source order
    span: Span | None = field(default=None, compare=False)

    def branch(self, label):
        for l, b in self.branches:
            if l == label:
                return b
        return None


@dataclass(frozen=True)
class StartB:
    child: str
    behaviour: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class IntroSendB:
    left: str
    right: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class IntroRecvB:
    introducer: str
    bound: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CallB:
    name: str
    args: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CondB:
    expr: object
    then_branch: tuple
    else_branch: tuple
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PPProcDef:
    name: str
    params: tuple
    body: tuple
    # index of the parameter whose runtime argument decides unfolding:
    # a call unfolds to 0 when that argument is the empty list
    dispatch_position: int = 0
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PPProgram:
    defs: dict
    # network entries: (process name, initial value or None, behaviour)
    network: tuple
    # like ChorProgram: graph=None means fully connected declared processes
    graph: frozenset | None = None
    adjacency: frozenset = frozenset()

    def graph_edges(self):
        if self.graph is not None:
            return self.graph
        ps = [name for name, _, _ in self.network]
        return frozenset(frozenset((a, b)) for a in ps for b in ps if a < b)


def seq(*stmts):
    """Convenience for building statement tuples in tests."""
    out = []
    for s in stmts:
        if isinstance(s, tuple):
            out.extend(s)
        else:
            out.append(s)
    return tuple(out)
