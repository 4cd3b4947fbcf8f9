"""Parsers for choreography sources (.pc) and process terms (.pp).

The surface syntax allows ``<``, ``=`` and ``>`` as the final
character of an identifier, so that role names like ``q<`` and
procedure names like ``split_q<`` lex as single tokens.  The rule: an
identifier absorbs at most one trailing ``<``, ``=`` or ``>`` when the
character after it cannot continue a name.  Consequences worth
knowing:

* calls still work, because ``QS<p>`` has a letter after the ``<``;
* comparisons between cell expressions need a space before the
  operator (write ``x < y``, not ``x< y``);
* ``<->`` never loses its head to a preceding identifier (special
  cased).

Sequencing binds tighter than branching: after ``else`` or ``|>`` the
statement list extends greedily, so a conditional or a started child
followed by a continuation must be parenthesised, e.g.
``(if p.short then A else B); C``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Call, CallB, ChorProgram, Com, Cond, CondB, BranchB, IntArg, Intro,
    IntroRecvB, IntroSendB, LIST_FNS, ListFn, ListLit, NameArg, PPProcDef,
    PPProgram, ProcDef, RecvB, Sel, SelB, SendB, Span, Start, StartB,
    is_list_param,
)
from .values import BUILTINS, BinOp, BuiltinCall, Cell, Lit, RECV_FNS, parse_value


class ParseError(Exception):
    def __init__(self, msg, span=None):
        self.msg = msg
        self.span = span
        super().__init__(f"{msg} ({span})" if span else msg)


@dataclass(frozen=True)
class Token:
    kind: str  # name, int, float, op, eof
    value: object
    line: int
    col: int
    pos: int

    @property
    def span(self):
        return Span(self.line, self.col)


_MULTI_OPS = ["<->", "(+)", "->", "|>", "++"]
_SINGLE_OPS = set(";,.:!?&{}[]()<>=+-*/\\|")
_ABSORB = "<=>"
KEYWORDS = {"if", "then", "else", "start", "net", "processes", "graph",
            "adjacency"}


def _name_char(ch):
    return ch.isalnum() or ch == "_" or ch == "'"


def tokenize(src):
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        tl, tc, tp = line, col, i
        if ch.isdigit():
            j = i
            isfloat = False
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                isfloat = True
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    isfloat = True
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            toks.append(Token("float" if isfloat else "int",
                              float(text) if isfloat else int(text), tl, tc, tp))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and _name_char(src[j]):
                j += 1
            # maybe absorb one trailing < = > into the name
            if (j < n and src[j] in _ABSORB
                    and not src.startswith("<->", j)
                    and (j + 1 >= n or not _name_char(src[j + 1]))):
                j += 1
            toks.append(Token("name", src[i:j], tl, tc, tp))
            col += j - i
            i = j
            continue
        for op in _MULTI_OPS:
            if src.startswith(op, i):
                toks.append(Token("op", op, tl, tc, tp))
                i += len(op)
                col += len(op)
                break
        else:
            if ch in _SINGLE_OPS:
                toks.append(Token("op", ch, tl, tc, tp))
                i += 1
                col += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", Span(tl, tc))
    toks.append(Token("eof", None, line, col, len(src)))
    return toks


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead=0):
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_op(self, value):
        t = self.peek()
        return t.kind == "op" and t.value == value

    def at_name(self, value=None):
        t = self.peek()
        return t.kind == "name" and (value is None or t.value == value)

    def expect_op(self, value):
        t = self.next()
        if t.kind != "op" or t.value != value:
            raise ParseError(f"expected {value!r}, found {self._show(t)}", t.span)
        return t

    def expect_name(self):
        t = self.next()
        if t.kind != "name":
            raise ParseError(f"expected a name, found {self._show(t)}", t.span)
        if t.value in KEYWORDS:
            raise ParseError(f"{t.value!r} is a keyword", t.span)
        return t

    @staticmethod
    def _show(t):
        if t.kind == "eof":
            return "end of input"
        return repr(t.value if isinstance(t.value, str) else str(t.value))

    # -- expressions -------------------------------------------------------

    _BINOPS = {"+", "-", "*", "/", "<", ">", "="}

    def parse_expr(self):
        left = self._expr_atom()
        t = self.peek()
        if t.kind == "op" and t.value in self._BINOPS:
            self.next()
            right = self._expr_atom()
            return BinOp(t.value, left, right)
        return left

    def _expr_atom(self):
        t = self.next()
        if t.kind in ("int", "float"):
            return Lit(t.value)
        if t.kind == "name":
            if t.value == "c":
                return Cell()
            if t.value in BUILTINS and not t.value.startswith("__"):
                return BuiltinCall(t.value, (Cell(),))
            raise ParseError(f"unknown expression {t.value!r} "
                             "(expected c, a literal, or a builtin)", t.span)
        raise ParseError(f"expected an expression, found {self._show(t)}", t.span)

    # -- call arguments ------------------------------------------------------

    def parse_call_args(self, opened=False):
        # opened: the < was absorbed into the callee's name token
        if opened:
            closer = ">"
        elif self.at_op("<"):
            self.next()
            closer = ">"
        else:
            self.expect_op("(")
            closer = ")"
        args = []
        if not self.at_op(closer):
            args.append(self.parse_list_expr())
            while self.at_op(","):
                self.next()
                args.append(self.parse_list_expr())
        # a final bare name may have absorbed the closing > into itself
        # (QS<p> lexes the argument as "p>"); split it back apart
        if (closer == ">" and not self.at_op(">") and args
                and isinstance(args[-1], NameArg)
                and args[-1].name.endswith(">") and len(args[-1].name) > 1):
            args[-1] = NameArg(args[-1].name[:-1])
            return tuple(args)
        self.expect_op(closer)
        return tuple(args)

    def parse_list_expr(self):
        left = self._list_term()
        while self.at_op("++") or self.at_op("\\"):
            op = self.next().value
            right = self._list_term()
            left = ListFn(op, (left, right))
        return left

    def _list_term(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntArg(t.value)
        if t.kind == "op" and t.value == "[":
            self.next()
            items = []
            if not self.at_op("]"):
                items.append(self.parse_list_expr())
                while self.at_op(","):
                    self.next()
                    items.append(self.parse_list_expr())
            self.expect_op("]")
            return ListLit(tuple(items))
        name = self.expect_name()
        if name.value in LIST_FNS and self.at_op("("):
            self.next()
            args = [self.parse_list_expr()]
            while self.at_op(","):
                self.next()
                args.append(self.parse_list_expr())
            self.expect_op(")")
            arity = LIST_FNS[name.value]
            ok = len(args) in arity if isinstance(arity, tuple) else len(args) == arity
            if not ok:
                raise ParseError(f"{name.value} takes {arity} argument(s), "
                                 f"got {len(args)}", name.span)
            return ListFn(name.value, tuple(args))
        return NameArg(name.value)

    # -- choreography statements ---------------------------------------------

    def parse_chor_body(self):
        stmts = list(self._chor_stmt())
        while self.at_op(";"):
            self.next()
            stmts.extend(self._chor_stmt())
        return tuple(stmts)

    def _chor_stmt(self):
        t = self.peek()
        if t.kind == "int" and t.value == 0:
            self.next()
            return []
        if t.kind == "op" and t.value == "(":
            self.next()
            body = self.parse_chor_body()
            self.expect_op(")")
            return list(body)
        if t.kind == "name" and t.value == "if":
            return [self._chor_cond()]
        name = self.expect_name()
        if self.at_name("start"):
            return self._starts(name)
        if self.at_op("."):
            self.next()
            if self.at_name("start"):
                return self._starts(name)
            return [self._com(name)]
        if self.at_op(":"):
            self.next()
            left = self.expect_name()
            self.expect_op("<->")
            right = self.expect_name()
            return [Intro(name.value, left.value, right.value, span=name.span)]
        if self.at_op("->"):
            self.next()
            receivers = [self.expect_name().value]
            while self.at_op(","):
                self.next()
                receivers.append(self.expect_name().value)
            self.expect_op("[")
            label = self._label()
            self.expect_op("]")
            return [Sel(name.value, r, label, span=name.span) for r in receivers]
        if self.at_op("<") or self.at_op("("):
            args = self.parse_call_args()
            return [Call(name.value, args, span=name.span)]
        if name.value.endswith("<") and len(name.value) > 1:
            args = self.parse_call_args(opened=True)
            return [Call(name.value[:-1], args, span=name.span)]
        raise ParseError(f"expected a statement after {name.value!r}", name.span)

    def _label(self):
        t = self.next()
        if t.kind != "name":
            raise ParseError(f"expected a label, found {self._show(t)}", t.span)
        return t.value  # keywords are fine as labels

    def _starts(self, parent):
        self.next()  # 'start'
        children = [self.expect_name()]
        while self.at_op(","):
            self.next()
            children.append(self.expect_name())
        return [Start(parent.value, c.value, span=c.span) for c in children]

    def _com(self, sender):
        expr = self.parse_expr()
        self.expect_op("->")
        receiver = self.expect_name()
        fn = "id"
        if self.at_op("."):
            self.next()
            fname = self.expect_name()
            if fname.value not in RECV_FNS:
                raise ParseError(f"unknown receive function {fname.value!r}",
                                 fname.span)
            fn = fname.value
        return Com(sender.value, expr, receiver.value, fn, span=sender.span)

    def _chor_cond(self):
        kw = self.next()
        decider = self.expect_name()
        self.expect_op(".")
        expr = self.parse_expr()
        self._expect_kw("then")
        then_b = self.parse_chor_body()
        self._expect_kw("else")
        else_b = self.parse_chor_body()
        return Cond(decider.value, expr, then_b, else_b, span=kw.span)

    def _expect_kw(self, word):
        t = self.next()
        if t.kind != "name" or t.value != word:
            raise ParseError(f"expected {word!r}, found {self._show(t)}", t.span)

    # -- choreography programs -------------------------------------------------

    def parse_chor_program(self):
        defs = {}
        main = None
        processes = []
        graph = None
        adjacency = set()
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind != "name":
                raise ParseError(f"expected a declaration, found {self._show(t)}",
                                 t.span)
            if t.value == "processes":
                self.next()
                processes.append(self.expect_name().value)
                while self.at_op(","):
                    self.next()
                    processes.append(self.expect_name().value)
            elif t.value in ("graph", "adjacency"):
                self.next()
                edges = self._edge_block()
                if t.value == "graph":
                    graph = (graph or frozenset()) | edges
                else:
                    adjacency |= edges
            elif t.value == "main":
                if main is not None:
                    raise ParseError("main is defined twice", t.span)
                self.next()
                self.expect_op("=")
                main = self.parse_chor_body()
            else:
                d = self._chor_def()
                if d.name in defs:
                    raise ParseError(f"procedure {d.name} is defined twice", d.span)
                defs[d.name] = d
        if main is None:
            raise ParseError("program has no main")
        prog = ChorProgram(defs, main, tuple(processes),
                           graph if graph is None else frozenset(graph),
                           frozenset(adjacency))
        validate_chor(prog)
        return prog

    def _edge_block(self):
        self.expect_op("{")
        edges = set()
        while not self.at_op("}"):
            a = self.expect_name()
            self.expect_op("<->")
            b = self.expect_name()
            if a.value == b.value:
                raise ParseError(f"self edge on {a.value}", a.span)
            edges.add(frozenset((a.value, b.value)))
            if self.at_op(";") or self.at_op(","):
                self.next()
        self.expect_op("}")
        return frozenset(edges)

    def _chor_def(self):
        name = self.expect_name()
        params = []
        if self.at_op("("):
            self.next()
            if not self.at_op(")"):
                params.append(self.expect_name().value)
                while self.at_op(","):
                    self.next()
                    params.append(self.expect_name().value)
            self.expect_op(")")
        if len(set(params)) != len(params):
            raise ParseError(f"duplicate parameter in {name.value}", name.span)
        self.expect_op("=")
        body = self.parse_chor_body()
        return ProcDef(name.value, tuple(params), body, span=name.span)

    # -- process terms -----------------------------------------------------------

    def parse_pp_body(self):
        stmts = list(self._pp_stmt())
        while self.at_op(";"):
            self.next()
            stmts.extend(self._pp_stmt())
        return tuple(stmts)

    def _pp_stmt(self):
        t = self.peek()
        if t.kind == "int" and t.value == 0:
            self.next()
            return []
        if t.kind == "op" and t.value == "(":
            self.next()
            body = self.parse_pp_body()
            self.expect_op(")")
            return list(body)
        if t.kind == "name" and t.value == "if":
            self.next()
            expr = self.parse_expr()
            self._expect_kw("then")
            then_b = self.parse_pp_body()
            self._expect_kw("else")
            else_b = self.parse_pp_body()
            return [CondB(expr, then_b, else_b, span=t.span)]
        if t.kind == "name" and t.value == "start":
            self.next()
            child = self.expect_name()
            self.expect_op("|>")
            beh = self.parse_pp_body()
            return [StartB(child.value, beh, span=t.span)]
        name = self.expect_name()
        if self.at_op("!"):
            self.next()
            return [SendB(name.value, self.parse_expr(), span=name.span)]
        if self.at_op("?"):
            self.next()
            if self.at_op("("):
                self.next()
                bound = self.expect_name()
                self.expect_op(")")
                return [IntroRecvB(name.value, bound.value, span=name.span)]
            fn = self.expect_name()
            if fn.value not in RECV_FNS:
                raise ParseError(f"unknown receive function {fn.value!r}", fn.span)
            return [RecvB(name.value, fn.value, span=name.span)]
        if self.at_op("(+)"):
            self.next()
            return [SelB(name.value, self._label(), span=name.span)]
        if self.at_op("&"):
            self.next()
            self.expect_op("{")
            branches = []
            while True:
                label = self._label()
                self.expect_op(":")
                beh = self.parse_pp_body()
                branches.append((label, beh))
                if self.at_op(","):
                    self.next()
                    continue
                break
            self.expect_op("}")
            return [BranchB(name.value, tuple(branches), span=name.span)]
        if self.at_op("<->"):
            self.next()
            right = self.expect_name()
            return [IntroSendB(name.value, right.value, span=name.span)]
        if self.at_op("<") or self.at_op("("):
            args = self.parse_call_args()
            return [CallB(name.value, args, span=name.span)]
        if name.value.endswith("<") and len(name.value) > 1:
            args = self.parse_call_args(opened=True)
            return [CallB(name.value[:-1], args, span=name.span)]
        raise ParseError(f"expected a process action after {name.value!r}",
                         name.span)

    def parse_pp_program(self):
        defs = {}
        network = None
        graph = None
        adjacency = frozenset()
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "name" and t.value == "net":
                self.next()
                self.expect_op("=")
                network = self._net_entries()
            elif t.kind == "name" and t.value in ("graph", "adjacency"):
                self.next()
                edges = self._edge_block()
                if t.value == "graph":
                    graph = (graph or frozenset()) | edges
                else:
                    adjacency = adjacency | edges
            else:
                name = self.expect_name()
                params = []
                self.expect_op("(")
                if not self.at_op(")"):
                    params.append(self.expect_name().value)
                    while self.at_op(","):
                        self.next()
                        params.append(self.expect_name().value)
                self.expect_op(")")
                self.expect_op("=")
                body = self.parse_pp_body()
                defs[name.value] = PPProcDef(
                    name.value, tuple(params), body,
                    dispatch_position=_dispatch_from_name(name.value, params),
                    span=name.span)
        if network is None:
            raise ParseError("process program has no net declaration")
        return PPProgram(defs, network, graph, adjacency)

    def _net_entries(self):
        entries = []
        while True:
            name = self.expect_name()
            if any(name.value == n for n, _, _ in entries):
                raise ParseError(f"process {name.value} appears twice "
                                 "in the network", name.span)
            value = None
            if self.at_op("["):
                value = self._raw_value()
            self.expect_op("|>")
            beh = self.parse_pp_body()
            entries.append((name.value, value, beh))
            if self.at_op("|"):
                self.next()
                continue
            break
        return tuple(entries)

    def _raw_value(self):
        # values can contain commas and nested brackets, so slice the raw
        # source up to the matching bracket instead of re-tokenizing
        open_tok = self.expect_op("[")
        start = open_tok.pos
        depth, j = 0, start
        while j < len(self.src):
            if self.src[j] == "[":
                depth += 1
            elif self.src[j] == "]":
                depth -= 1
                if depth == 0:
                    break
            j += 1
        if depth != 0:
            raise ParseError("unterminated value", open_tok.span)
        text = self.src[start + 1:j]
        while self.peek().kind != "eof" and self.peek().pos <= j:
            self.next()
        try:
            return parse_value(text)
        except ValueError as e:
            raise ParseError(str(e), open_tok.span) from None


def _dispatch_from_name(name, params):
    """Recover which parameter drives unfolding from the name suffix.

    Projected procedures are named ``X_p`` where ``p`` is the
    parameter of ``X`` the body was projected onto; that parameter's
    argument decides whether a call unfolds or terminates.
    """
    if "_" in name:
        suffix = name.rsplit("_", 1)[1]
        if suffix in params:
            return params.index(suffix)
    return 0


# ---------------------------------------------------------------------------
# choreography validation: scoping, kinds, arities


def _arg_kind(arg, span=None):
    # returns "proc", "list" or "int"
    match arg:
        case NameArg(name=n):
            return "list" if is_list_param(n) else "proc"
        case ListLit():
            return "list"
        case ListFn(name="hd"):
            return "proc"
        case ListFn(name="len"):
            return "int"
        case ListFn():
            return "list"
        case IntArg():
            return "int"
    raise ParseError(f"bad argument {arg!r}", span)


def _arg_names(arg):
    match arg:
        case NameArg(name=n):
            yield n
        case ListLit(items=items):
            for it in items:
                yield from _arg_names(it)
        case ListFn(args=args):
            for a in args:
                yield from _arg_names(a)


def validate_chor(prog):
    for d in prog.defs.values():
        _check_body(prog, d.body, set(d.params), where=d.name)
    dupes = [p for p in prog.processes if prog.processes.count(p) > 1]
    if dupes:
        raise ParseError(f"process {dupes[0]} declared twice")
    _check_body(prog, prog.main, set(prog.processes), where="main")
    for e in prog.adjacency:
        for v in e:
            if v not in prog.processes:
                raise ParseError(f"adjacency mentions undeclared process {v}")
    if prog.graph is not None:
        for e in prog.graph:
            for v in e:
                if v not in prog.processes:
                    raise ParseError(f"graph mentions undeclared process {v}")
        # adjacency pairs outside the graph are the checker's business


def _check_body(prog, body, scope, where):
    scope = set(scope)
    for stmt in body:
        _check_stmt(prog, stmt, scope, where)
    return scope


def _require(name, scope, where, span):
    if name not in scope:
        raise ParseError(f"{name} is not bound in {where}", span)


def _require_proc(name, scope, where, span):
    _require(name, scope, where, span)
    if is_list_param(name):
        raise ParseError(f"list {name} used as a single process in {where}",
                         span)


def _check_stmt(prog, stmt, scope, where):
    match stmt:
        case Com(sender=s, receiver=r, span=span):
            _require_proc(s, scope, where, span)
            _require_proc(r, scope, where, span)
            if s == r:
                raise ParseError(f"{s} sends to itself in {where}", span)
        case Sel(sender=s, receiver=r, span=span):
            _require_proc(s, scope, where, span)
            _require_proc(r, scope, where, span)
            if s == r:
                raise ParseError(f"{s} selects at itself in {where}", span)
        case Start(parent=p, child=c, span=span):
            _require_proc(p, scope, where, span)
            if c in scope:
                raise ParseError(f"start of {c} shadows an existing name "
                                 f"in {where}", span)
            if is_list_param(c):
                raise ParseError(f"started process {c} must be lowercase", span)
            scope.add(c)
        case Intro(introducer=i, left=l, right=r, span=span):
            for n in (i, l, r):
                _require_proc(n, scope, where, span)
            if len({i, l, r}) != 3:
                raise ParseError(f"introduction needs three distinct processes "
                                 f"in {where}", span)
        case Call(name=name, args=args, span=span):
            target = prog.defs.get(name)
            if target is None:
                raise ParseError(f"call to undefined procedure {name}", span)
            if len(args) != len(target.params):
                raise ParseError(
                    f"{name} takes {len(target.params)} argument(s), "
                    f"got {len(args)}", span)
            for param, arg in zip(target.params, args):
                for n in _arg_names(arg):
                    _require(n, scope, where, span)
                want = "list" if is_list_param(param) else "proc"
                got = _arg_kind(arg, span)
                if got != want:
                    raise ParseError(
                        f"argument for {param} of {name} should be a "
                        f"{want} expression, got a {got} one", span)
        case Cond(decider=d, then_branch=tb, else_branch=eb, span=span):
            _require_proc(d, scope, where, span)
            # names started inside a branch are not visible afterwards
            _check_body(prog, tb, scope, where)
            _check_body(prog, eb, scope, where)


def parse_choreography(src):
    return _Parser(src).parse_chor_program()


def parse_processes(src):
    return _Parser(src).parse_pp_program()
