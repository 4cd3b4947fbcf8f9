"""Command line front door.

Subcommands: check, project, run, simulate, compare, corpus.  Results
go to stdout, every diagnostic to stderr.  Exit codes: 0 success, 1
diagnostics (parse, check, projection, usage, missing files), 2 a
stuck or deadlocked execution, 3 fuel exhaustion or a state mismatch.

The same invocation always produces the same bytes on both streams.
Set CHORUS_COLOR=1 to color diagnostics, 0 (or leave unset) for plain
text.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import random
import sys

from . import chor_engine, corpus, pp_engine
from .chor_engine import (
    ChorError, explore_choreography, format_trace, run_choreography,
)
from .checker import check_connections
from .epp import ProjectionError, check_projectable, project
from .parser import ParseError, parse_choreography, parse_processes
from .pp_engine import Deadlock, PPError, explore_processes, run_processes
from .printer import render_processes
from .values import render_value

TERMINATED = (chor_engine.Terminated, pp_engine.Terminated)

OK, DIAG, STUCK, MISMATCH = 0, 1, 2, 3

SHIPPED = corpus.EXAMPLES + ("fft_as_printed",)


class _Exit(Exception):
    def __init__(self, code):
        self.code = code


def _color():
    return os.environ.get("CHORUS_COLOR") == "1"


def _diag(msg):
    if _color():
        msg = f"\x1b[31m{msg}\x1b[0m"
    print(msg, file=sys.stderr)


def _fail(msg, code=DIAG):
    _diag(msg)
    raise _Exit(code)


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, but 2 means deadlock here
    def error(self, message):
        self.print_usage(sys.stderr)
        _diag(f"error: {message}")
        raise _Exit(DIAG)


def _read_program(path):
    """Text of a .pc/.pp file; a bare shipped name works too."""
    if os.path.exists(path):
        try:
            with open(path, encoding="utf-8") as f:
                return f.read()
        except OSError as e:
            _fail(f"cannot read {path}: {e.strerror}")
    name = path[:-3] if path.endswith(".pc") else path
    if os.sep not in path and name in SHIPPED:
        return corpus.source(name)
    _fail(f"cannot read {path}: no such file")


def _read_state(path):
    if path is None:
        return None
    if not os.path.exists(path):
        _fail(f"cannot read {path}: no such file")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        return corpus.read_state_text(text)
    except ValueError as e:
        _fail(f"{path}: {e}")


def _parse_chor(text, path):
    try:
        return parse_choreography(text)
    except ParseError as e:
        _fail(f"{path}: {e}")


def _print_state(state):
    sys.stdout.write(corpus.render_state_text(state))


def _refuse_large(prog, bound):
    if len(prog.processes) > bound:
        _fail(f"exhaustive mode needs at most {bound} declared processes, "
              f"found {len(prog.processes)} (raise with --max-processes)")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check(args):
    text = _read_program(args.file)
    prog = _parse_chor(text, args.file)
    problems = check_connections(prog) + check_projectable(prog)
    for p in problems:
        _diag(f"{args.file}: {p}")
    if problems:
        raise _Exit(DIAG)
    print(f"{args.file}: ok")


def _cmd_project(args):
    text = _read_program(args.file)
    prog = _parse_chor(text, args.file)
    try:
        pp = project(prog, prune=not args.no_prune)
    except ProjectionError as e:
        _fail(f"{args.file}: {e}")
    sys.stdout.write(render_processes(pp))


def _finish(result, args):
    if args.trace and result.trace:
        print(format_trace(result.trace))
        print()
    if isinstance(result, TERMINATED):
        _print_state(result.state)
        return
    if isinstance(result, Deadlock):
        _diag(f"deadlock after {result.steps} steps:")
        for line in result.report:
            _diag(f"  {line}")
        raise _Exit(STUCK)
    _fail(f"no termination within {result.steps} steps", MISMATCH)


def _cmd_run(args):
    text = _read_program(args.file)
    prog = _parse_chor(text, args.file)
    state = _read_state(args.state)
    if args.strategy == "exhaustive":
        _refuse_large(prog, args.max_processes)
        try:
            ex = explore_choreography(prog, state, bound=args.max_steps)
        except ChorError as e:
            _fail(f"stuck: {e}", STUCK)
        print(f"{len(ex.terminal_states)} terminal state(s) in "
              f"{ex.visited} configurations"
              + ("" if ex.complete else " (exploration cut off)"))
        for final in ex.terminal_states:
            print()
            _print_state(dict(final))
        if not ex.complete or len(ex.terminal_states) != 1:
            raise _Exit(MISMATCH)
        return
    try:
        result = run_choreography(prog, state, strategy=args.strategy,
                                  seed=args.seed, fuel=args.max_steps)
    except ChorError as e:
        _fail(f"stuck: {e}", STUCK)
    _finish(result, args)


def _cmd_simulate(args):
    text = _read_program(args.file)
    try:
        prog = parse_processes(text)
    except ParseError as e:
        _fail(f"{args.file}: {e}")
    state = _read_state(args.state)
    if args.strategy == "exhaustive":
        if len(prog.network) > args.max_processes:
            _fail(f"exhaustive mode needs at most {args.max_processes} "
                  f"processes, found {len(prog.network)} "
                  "(raise with --max-processes)")
        try:
            ex = explore_processes(prog, state, bound=args.max_steps)
        except PPError as e:
            _fail(f"stuck: {e}", STUCK)
        print(f"{len(ex.terminal_states)} terminal state(s), "
              f"{len(ex.deadlocks)} deadlock(s) in "
              f"{ex.visited} configurations"
              + ("" if ex.complete else " (exploration cut off)"))
        for final in ex.terminal_states:
            print()
            _print_state(dict(final))
        for _cells, report in ex.deadlocks:
            _diag("deadlock:")
            for line in report:
                _diag(f"  {line}")
        if ex.deadlocks:
            raise _Exit(STUCK)
        if not ex.complete or len(ex.terminal_states) != 1:
            raise _Exit(MISMATCH)
        return
    try:
        result = run_processes(prog, state, strategy=args.strategy,
                               seed=args.seed, fuel=args.max_steps)
    except PPError as e:
        _fail(f"stuck: {e}", STUCK)
    _finish(result, args)


def _cmd_compare(args):
    text = _read_program(args.file)
    prog = _parse_chor(text, args.file)
    state = _read_state(args.state)
    strategy = args.strategy if args.strategy != "exhaustive" else "seq"
    try:
        pp = project(prog, prune=not args.no_prune)
    except ProjectionError as e:
        _fail(f"{args.file}: {e}")
    try:
        chor = run_choreography(prog, state, strategy=strategy,
                                seed=args.seed, fuel=args.max_steps)
    except ChorError as e:
        _fail(f"choreography stuck: {e}", STUCK)
    if not isinstance(chor, TERMINATED):
        _fail(f"choreography did not terminate within {chor.steps} steps",
              MISMATCH)
    try:
        net = run_processes(pp, state, strategy=strategy,
                            seed=args.seed, fuel=args.max_steps)
    except PPError as e:
        _fail(f"network stuck: {e}", STUCK)
    if isinstance(net, Deadlock):
        _diag(f"network deadlock after {net.steps} steps:")
        for line in net.report:
            _diag(f"  {line}")
        raise _Exit(STUCK)
    if not isinstance(net, TERMINATED):
        _fail(f"network did not terminate within {net.steps} steps", MISMATCH)
    diffs = _state_diff(chor.state, net.state)
    if diffs:
        for d in diffs:
            _diag(d)
        raise _Exit(MISMATCH)
    print("states equal")


def _state_diff(chor_state, net_state):
    # started processes get #k names at the network level, so compare
    # source cells by name and the rest as multisets
    diffs = []
    chor_src = {n: v for n, v in chor_state.items() if "#" not in n}
    net_src = {n: v for n, v in net_state.items() if "#" not in n}
    for n in sorted(chor_src.keys() | net_src.keys()):
        a = chor_src.get(n)
        b = net_src.get(n)
        if a != b:
            left = "missing" if n not in chor_src else render_value(a)
            right = "missing" if n not in net_src else render_value(b)
            diffs.append(f"{n}: choreography {left}, network {right}")
    fresh_a = sorted(render_value(v) for n, v in chor_state.items()
                     if "#" in n)
    fresh_b = sorted(render_value(v) for n, v in net_state.items()
                     if "#" in n)
    if fresh_a != fresh_b:
        diffs.append(f"started cells differ: choreography {fresh_a}, "
                     f"network {fresh_b}")
    return diffs


def _cmd_corpus(args):
    rng = random.Random(args.seed)
    failures = 0
    worst = OK
    for kind in corpus.EXAMPLES:
        good = 0
        trials = 5
        for trial in range(trials):
            inst = corpus.random_instance(kind, rng)
            src, state = corpus.encode_instance(inst)
            prog = parse_choreography(src)
            try:
                chor = run_choreography(prog, state, fuel=args.max_steps)
            except ChorError as e:
                _diag(f"{kind}: choreography stuck: {e}")
                worst = max(worst, STUCK)
                failures += 1
                continue
            got = corpus.decode_result(inst, chor.state)
            want = corpus.oracle(inst)
            if not corpus.outputs_match(inst, got, want):
                _diag(f"{kind}: oracle mismatch on {inst.payload!r}")
                worst = max(worst, MISMATCH)
                failures += 1
                continue
            pp = project(prog, prune=not args.no_prune)
            net = run_processes(pp, state, strategy="random", seed=trial,
                                fuel=args.max_steps)
            if not isinstance(net, TERMINATED):
                _diag(f"{kind}: network did not terminate")
                worst = max(worst, STUCK)
                failures += 1
                continue
            if _state_diff(chor.state, net.state):
                _diag(f"{kind}: choreography and network disagree")
                worst = max(worst, MISMATCH)
                failures += 1
                continue
            good += 1
        print(f"{kind}: {good}/{trials} ok")
    if failures:
        raise _Exit(worst)


# ---------------------------------------------------------------------------


def _build_parser():
    ap = _ArgumentParser(prog="chorus",
                         description="choreographies, their projections, "
                                     "and twin simulators")
    sub = ap.add_subparsers(dest="command", required=True)
    specs = (
        ("check", _cmd_check, "parse a choreography and run every check"),
        ("project", _cmd_project, "project a choreography to processes"),
        ("run", _cmd_run, "execute a choreography"),
        ("simulate", _cmd_simulate, "execute a process network"),
        ("compare", _cmd_compare, "run both levels and diff final states"),
        ("corpus", _cmd_corpus, "run the shipped examples against oracles"),
    )
    for name, fn, help_text in specs:
        sp = sub.add_parser(name, help=help_text)
        if name != "corpus":
            sp.add_argument("file", help="program file, or a shipped "
                                         "example name")
        sp.add_argument("--state", metavar="FILE",
                        help="initial cells, one `name = value` line each")
        sp.add_argument("--strategy", choices=("seq", "random", "exhaustive"),
                        default="random")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-steps", type=int, default=10 ** 6,
                        metavar="N")
        sp.add_argument("--trace", action="store_true",
                        help="print the step trace before the final state")
        sp.add_argument("--no-prune", action="store_true",
                        help="keep unused procedure parameters when "
                             "projecting")
        sp.add_argument("--max-processes", type=int, default=10, metavar="N",
                        help="refusal threshold for exhaustive mode")
        sp.add_argument("-o", "--output", metavar="OUT",
                        help="write the result here instead of stdout")
        sp.set_defaults(fn=fn)
    return ap


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as f, \
                    contextlib.redirect_stdout(f):
                args.fn(args)
        else:
            args.fn(args)
    except _Exit as e:
        return e.code
    return OK


if __name__ == "__main__":
    sys.exit(main())
