"""The executable corpus: the shipped algorithm sources plus what a
test harness needs around them — instance generators, encoders from
instances to source text and initial state, brute-force oracles
written directly against the mathematical definitions, and decoders
from final states back to plain results.
"""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass
from importlib import resources

from .values import UNDEF, parse_value, render_value

EXAMPLES = ("quicksort", "gauss", "fft", "broadcast")


def source(name):
    """Text of a shipped .pc file (the four examples plus
    fft_as_printed)."""
    return (resources.files("chorus") / "programs" / f"{name}.pc").read_text()


@dataclass(frozen=True)
class Instance:
    kind: str
    payload: object  # see the per-example constructors


# ---------------------------------------------------------------------------
# oracles
#
# Each oracle is written straight from the mathematical definition and
# never looks at the choreography.


def oracle(inst):
    if inst.kind == "quicksort":
        return sorted(inst.payload)
    if inst.kind == "gauss":
        return _triangular(inst.payload)
    if inst.kind == "fft":
        xs = inst.payload
        n = len(xs)
        w = cmath.exp(2j * cmath.pi / n)
        return [sum(xs[k] * w ** (k * j) for k in range(n)) for j in range(n)]
    if inst.kind == "broadcast":
        vertices, edges, start, _token = inst.payload
        return _bfs(vertices, edges, start)
    raise ValueError(f"unknown example {inst.kind}")


def _triangular(rows):
    # sequential elimination to a unit-diagonal upper triangular
    # augmented matrix
    m = [list(r) for r in rows]
    n = len(m)
    for k in range(n):
        pivot = m[k][k]
        for j in range(k + 1, n + 1):
            m[k][j] /= pivot
        m[k][k] = 1.0
        for i in range(k + 1, n):
            f = m[i][k]
            for j in range(k + 1, n + 1):
                m[i][j] -= f * m[k][j]
            m[i][k] = 0.0
    return m


def _bfs(vertices, edges, start):
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for a, b in edges:
                other = b if a == u else a if b == u else None
                if other is not None and other not in seen:
                    seen.add(other)
                    nxt.append(other)
        frontier = nxt
    return seen


def solve_system(rows):
    """Solution of the square system by cofactor expansion; the
    instances are tiny and well conditioned, so this is an exact
    independent reference."""
    n = len(rows)
    a = [r[:n] for r in rows]
    b = [r[n] for r in rows]
    det = _det(a)
    out = []
    for j in range(n):
        col = [[b[i] if k == j else a[i][k] for k in range(n)]
               for i in range(n)]
        out.append(_det(col) / det)
    return out


def _det(a):
    if len(a) == 1:
        return a[0][0]
    total = 0.0
    for j in range(len(a)):
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        total += (-1) ** j * a[0][j] * _det(minor)
    return total


def back_substitute(rows):
    """Solution read off a unit-diagonal upper triangular augmented
    matrix."""
    n = len(rows)
    x = [0.0] * n
    for i in reversed(range(n)):
        x[i] = rows[i][n] - sum(rows[i][j] * x[j] for j in range(i + 1, n))
    return x


# ---------------------------------------------------------------------------
# instances


def quicksort_instance(values):
    return Instance("quicksort", tuple(int(v) for v in values))


def gauss_instance(rows):
    rows = tuple(tuple(float(v) for v in r) for r in rows)
    n = len(rows)
    if any(len(r) != n + 1 for r in rows):
        raise ValueError("gauss instance must be n rows of n+1 entries")
    return Instance("gauss", rows)


def fft_instance(values):
    values = tuple(complex(v) for v in values)
    n = len(values)
    if n == 0 or n & (n - 1):
        raise ValueError("fft instance length must be a power of 2")
    return Instance("fft", values)


def broadcast_instance(vertices, edges, start, token=1):
    vertices = tuple(vertices)
    edges = tuple(tuple(e) for e in edges)
    if start not in vertices:
        raise ValueError(f"start vertex {start} not among the vertices")
    for a, b in edges:
        if a not in vertices or b not in vertices or a == b:
            raise ValueError(f"bad edge {a} <-> {b}")
    return Instance("broadcast", (vertices, edges, start, token))


def random_instance(kind, rng, size=None):
    if kind == "quicksort":
        length = rng.randint(0, 12) if size is None else size
        return quicksort_instance(rng.randint(0, 9) for _ in range(length))
    if kind == "gauss":
        n = rng.randint(1, 4) if size is None else size
        rows = []
        for i in range(n):
            row = [rng.uniform(-1.0, 1.0) for _ in range(n)]
            # diagonal dominance keeps elimination without pivoting stable
            row[i] = sum(abs(v) for v in row) + rng.uniform(1.0, 2.0)
            row.append(rng.uniform(-5.0, 5.0))
            rows.append(row)
        return gauss_instance(rows)
    if kind == "fft":
        n = rng.choice((1, 2, 4, 8)) if size is None else size
        return fft_instance(complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
                            for _ in range(n))
    if kind == "broadcast":
        n = rng.randint(1, 8) if size is None else size
        vertices = tuple(f"v{i}" for i in range(n))
        edges = [(a, b) for i, a in enumerate(vertices)
                 for b in vertices[i + 1:] if rng.random() < 0.35]
        if n > 1 and not edges:
            # neighb needs a declared adjacency, so keep one edge around
            edges = [tuple(rng.sample(vertices, 2))]
        return broadcast_instance(vertices, edges, rng.choice(vertices),
                                  token=rng.randint(1, 99))
    raise ValueError(f"unknown example {kind}")


# ---------------------------------------------------------------------------
# encoding into programs and decoding out of final states


def _replace_line(src, prefix, replacement):
    out = []
    hit = False
    for line in src.splitlines():
        if line.startswith(prefix):
            if replacement is not None:
                out.append(replacement)
            hit = True
        else:
            out.append(line)
    if not hit:
        raise ValueError(f"no line starting with {prefix!r}")
    return "\n".join(out) + "\n"


def _gauss_names(n):
    names = []
    for i in range(1, n + 1):
        names.extend(f"a{i}{j}" for j in range(1, n + 1))
        names.append(f"b{i}")
    return names


def encode_instance(inst):
    """Source text and initial state for an instance."""
    if inst.kind == "quicksort":
        return source("quicksort"), {"p": inst.payload}
    if inst.kind == "gauss":
        n = len(inst.payload)
        names = _gauss_names(n)
        src = source("gauss")
        src = _replace_line(src, "processes ", "processes " + ", ".join(names))
        src = _replace_line(src, "main = ",
                            f"main = gauss<[{', '.join(names)}]>")
        cells = [v for row in inst.payload for v in row]
        return src, dict(zip(names, cells))
    if inst.kind == "fft":
        n = len(inst.payload)
        xs = [f"x{i}" for i in range(n)]
        ys = [f"y{i}" for i in range(n)]
        src = source("fft")
        src = _replace_line(src, "processes ",
                            "processes " + ", ".join(xs + ys + ["n", "w"]))
        src = _replace_line(
            src, "main = ",
            f"main = fft<[{', '.join(xs)}], [{', '.join(ys)}], n, w>")
        state = dict(zip(xs, inst.payload))
        state["n"] = n
        state["w"] = cmath.exp(2j * cmath.pi / n)
        return src, state
    if inst.kind == "broadcast":
        vertices, edges, start, token = inst.payload
        rest = [v for v in vertices if v != start]
        src = source("broadcast")
        src = _replace_line(src, "processes ",
                            "processes " + ", ".join(vertices))
        src = _replace_line(src, "main = ",
                            f"main = broadcast<[{start}], "
                            f"[{', '.join(rest)}]>")
        block = "; ".join(f"{a} <-> {b}" for a, b in edges)
        for kw in ("graph", "adjacency"):
            line = f"{kw} {{ {block} }}" if edges else None
            src = _replace_line(src, kw + " ", line)
        return src, {start: token}
    raise ValueError(f"unknown example {inst.kind}")


def decode_result(inst, final):
    """Read the algorithm's output back out of a final state."""
    if inst.kind == "quicksort":
        cell = final["p"]
        if not isinstance(cell, tuple):
            raise ValueError(f"p holds {render_value(cell)}, not a list")
        return list(cell)
    if inst.kind == "gauss":
        n = len(inst.payload)
        names = iter(_gauss_names(n))
        rows = []
        for _ in range(n):
            row = []
            for _ in range(n + 1):
                v = final[next(names)]
                if not isinstance(v, (int, float)):
                    raise ValueError(f"grid cell holds {render_value(v)}")
                row.append(float(v))
            rows.append(row)
        return rows
    if inst.kind == "fft":
        out = []
        for i in range(len(inst.payload)):
            v = final[f"y{i}"]
            if v is UNDEF:
                raise ValueError(f"y{i} is undefined")
            out.append(complex(v))
        return out
    if inst.kind == "broadcast":
        vertices, _edges, _start, token = inst.payload
        return {v for v in vertices if final.get(v) == token}
    raise ValueError(f"unknown example {inst.kind}")


def outputs_match(inst, got, want, tol=1e-9):
    if inst.kind == "quicksort":
        return got == want
    if inst.kind == "gauss":
        return all(abs(a - b) <= tol
                   for ra, rb in zip(got, want) for a, b in zip(ra, rb))
    if inst.kind == "fft":
        return all(abs(a - b) <= tol for a, b in zip(got, want))
    if inst.kind == "broadcast":
        return got == want
    raise ValueError(f"unknown example {inst.kind}")


# ---------------------------------------------------------------------------
# state files: `name = value` lines


def read_state_text(text):
    state = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("--") or line.startswith("#"):
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"state line {i} has no '=': {line!r}")
        state[name.strip()] = parse_value(value)
    return state


def render_state_text(state):
    return "".join(f"{name} = {render_value(v)}\n"
                   for name, v in state.items())
