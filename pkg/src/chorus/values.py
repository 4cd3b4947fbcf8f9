"""Runtime values and the expression language evaluated at processes.

A process owns a single memory cell.  Cell contents are plain Python
values: booleans, numbers (int/float/complex), and tuples standing in
for lists.  A cell that was never written holds UNDEF.

Expressions come in two flavours that share one AST:

* send expressions, written after the dot in ``p.e``, may mention the
  sender's cell (``Cell``) but not ``Received``;
* receive functions, the ``f`` in ``-> q.f``, are closed expressions
  over the receiver's cell and the incoming value (``Received``).
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass


class EvalError(Exception):
    pass


class _Undef:
    __slots__ = ()

    def __repr__(self):
        return "undef"


UNDEF = _Undef()


# ---------------------------------------------------------------------------
# expression AST


@dataclass(frozen=True)
class Cell:
    """The evaluating process's own memory cell."""


@dataclass(frozen=True)
class Received:
    """The incoming value, bound inside a receive function."""


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class BuiltinCall:
    name: str
    args: tuple


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


# ---------------------------------------------------------------------------
# builtins

def _as_list(v):
    # undefined cells read as the empty list under list operations
    if v is UNDEF:
        return ()
    if isinstance(v, tuple):
        return v
    raise EvalError(f"expected a list, got {render_value(v)}")


def _fst(v):
    if v is UNDEF:
        raise EvalError("fst of undefined")
    xs = _as_list(v)
    if not xs:
        raise EvalError("fst of empty list")
    return xs[0]


def _snd(v):
    if v is UNDEF:
        raise EvalError("snd of undefined")
    xs = _as_list(v)
    if len(xs) < 2:
        raise EvalError("snd of a list with fewer than two elements")
    return xs[1]


def _remove_second(v):
    xs = _as_list(v)
    if len(xs) < 2:
        raise EvalError("removeSecond of a list with fewer than two elements")
    return xs[:1] + xs[2:]


def _num(v, what):
    if isinstance(v, (int, float, complex)) and not isinstance(v, bool):
        return v
    raise EvalError(f"{what} of non-number {render_value(v)}")


BUILTINS = {
    "fst": _fst,
    "snd": _snd,
    "short": lambda v: len(_as_list(v)) <= 1,
    "length": lambda v: len(_as_list(v)),
    "half": lambda v: _num(v, "half") // 2,
    "square": lambda v: _num(v, "square") * _num(v, "square"),
    "is_one": lambda v: _num(v, "is_one") == 1,
    "removeSecond": _remove_second,
}


def eval_expr(expr, cell, received=None):
    """Evaluate an expression against a cell value.

    ``received`` is only supplied when evaluating a receive function
    body; a ``Received`` node outside that context is a bug in the
    caller and raises.
    """
    match expr:
        case Cell():
            return cell
        case Received():
            if received is None:
                raise EvalError("received value used outside a receive function")
            return received
        case Lit(value=v):
            return v
        case BuiltinCall(name=name, args=args):
            fn = BUILTINS.get(name)
            if fn is None:
                raise EvalError(f"unknown builtin {name}")
            vals = [eval_expr(a, cell, received) for a in args]
            return fn(*vals)
        case BinOp(op=op, left=l, right=r):
            lv = eval_expr(l, cell, received)
            rv = eval_expr(r, cell, received)
            return _binop(op, lv, rv)
    raise EvalError(f"bad expression node {expr!r}")


def _binop(op, lv, rv):
    try:
        if op == "+":
            return lv + rv
        if op == "-":
            return lv - rv
        if op == "*":
            return lv * rv
        if op == "/":
            return lv / rv
        if op == "=":
            return lv == rv
        if op == "<":
            return lv < rv
        if op == ">":
            return lv > rv
    except ZeroDivisionError:
        raise EvalError("division by zero") from None
    except TypeError as e:
        raise EvalError(str(e)) from None
    raise EvalError(f"unknown operator {op}")


# ---------------------------------------------------------------------------
# receive functions
#
# Each is an expression over Cell() (the receiver's current contents)
# and Received() (the value on the wire).  The result becomes the
# receiver's new cell value.

_C = Cell()
_R = Received()

RECV_FNS = {
    # overwrite
    "id": _R,
    # append one element to the cell's list, or add two numbers
    "add": BuiltinCall("__add_elem", (_C, _R)),
    # list concatenation, either side may be undefined
    "append": BuiltinCall("__append", (_C, _R)),
    "div": BinOp("/", _C, _R),
    "mult": BinOp("*", _C, _R),
    "minus": BinOp("-", _C, _R),
    "removeSecond": BuiltinCall("removeSecond", (_R,)),
}


def _add_elem(cell, received):
    # add is directed by the cell's current contents: lists grow by
    # one element, numbers add numerically
    if cell is UNDEF:
        return (received,)
    if isinstance(cell, tuple):
        return cell + (received,)
    return _num(cell, "add") + _num(received, "add")


def _append(cell, received):
    if cell is UNDEF:
        return received
    if received is UNDEF:
        return cell
    return _as_list(cell) + _as_list(received)


BUILTINS["__add_elem"] = _add_elem
BUILTINS["__append"] = _append


def apply_recv(fn_name, cell, received):
    body = RECV_FNS.get(fn_name)
    if body is None:
        raise EvalError(f"unknown receive function {fn_name}")
    return eval_expr(body, cell, received)


# ---------------------------------------------------------------------------
# rendering and parsing of values (state files, traces, CLI output)


def render_value(v):
    if v is UNDEF:
        return "undef"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        re_part = repr(v.real)
        im = v.imag
        sign = "+" if im >= 0 or im != im else "-"
        return f"{re_part}{sign}{repr(abs(im))}i"
    if isinstance(v, tuple):
        return "[" + ", ".join(render_value(x) for x in v) + "]"
    raise ValueError(f"cannot render {v!r}")


_ROOT_RE = re.compile(r"^e2pii/(\d+)$")
_NUM = r"[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?"
_COMPLEX_RE = re.compile(rf"^([+-]?{_NUM})([+-]{_NUM})i$")
_IMAG_RE = re.compile(rf"^([+-]?{_NUM})i$")


def parse_value(text):
    """Parse the textual value forms accepted in state files.

    Supports undef, booleans, ints, floats, complex numbers written
    ``a+bi``, lists in brackets, and the root-of-unity shorthand
    ``e2pii/N`` for exp(2*pi*i/N).
    """
    s = text.strip()
    if s == "undef":
        return UNDEF
    if s == "true":
        return True
    if s == "false":
        return False
    m = _ROOT_RE.match(s)
    if m:
        return cmath.exp(2j * cmath.pi / int(m.group(1)))
    if s.startswith("["):
        if not s.endswith("]"):
            raise ValueError(f"unterminated list in {text!r}")
        inner = s[1:-1].strip()
        if not inner:
            return ()
        return tuple(parse_value(p) for p in _split_top(inner))
    if s.endswith("i"):
        m = _COMPLEX_RE.match(s)
        if m:
            return complex(float(m.group(1)), float(m.group(2)))
        m = _IMAG_RE.match(s)
        if m:
            return complex(0.0, float(m.group(1)))
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        raise ValueError(f"cannot parse value {text!r}") from None


def _split_top(s):
    """Split on commas not nested inside brackets."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(s[start:i])
            start = i + 1
    parts.append(s[start:])
    return parts
