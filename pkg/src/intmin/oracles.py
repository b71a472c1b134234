"""Separation oracles, evaluation oracles for set functions, and brute-force baselines.

Set functions use the ground set ``{1, ..., n}``; sets are frozensets of
those labels and indicator vectors put element ``i`` at coordinate ``i - 1``.
"""

from __future__ import annotations

import itertools
import numbers
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import MalformedInstance, MalformedOracle, OracleInconsistency

BRUTE_FORCE_LIMIT = 20
BOX_TOL = 1e-9


class Halfspace(NamedTuple):
    """Cut ``{y : normal . y >= offset}``; ``offset=None`` means through the query point."""

    normal: np.ndarray
    offset: Optional[float] = None


class SeparationOracle:
    """Base class: ``query(x)`` returns None (YES) or a Halfspace.

    Subclasses may also provide ``value(x)`` returning the objective, which the
    solver only uses to break ties it cannot resolve from cuts alone.
    """

    def query(self, x) -> Optional[Halfspace]:
        raise NotImplementedError

    def value(self, x) -> Optional[float]:
        return None

    def __call__(self, x):
        return self.query(x)


class FunctionOracle(SeparationOracle):
    def __init__(self, fn: Callable, value: Optional[Callable] = None):
        self._fn = fn
        self._value = value

    def query(self, x):
        return self._fn(x)

    def value(self, x):
        return None if self._value is None else self._value(x)


def as_oracle(obj) -> SeparationOracle:
    if isinstance(obj, SeparationOracle):
        return obj
    if hasattr(obj, "query"):
        return FunctionOracle(obj.query, getattr(obj, "value", None))
    if callable(obj):
        return FunctionOracle(obj)
    raise TypeError("oracle must be callable or expose query(x)")


def normalize_response(resp, n: int) -> Optional[Halfspace]:
    """Validate an oracle answer; raw vectors and (normal, offset) pairs are accepted."""
    if resp is None:
        return None
    if isinstance(resp, Halfspace):
        normal, offset = resp
    elif isinstance(resp, tuple) and len(resp) == 2 and np.ndim(resp[0]) == 1 and np.ndim(resp[1]) == 0:
        normal, offset = resp
    else:
        normal, offset = resp, None
    normal = np.asarray(normal, dtype=float).reshape(-1)
    if normal.shape != (n,):
        raise OracleInconsistency(f"cut normal has shape {normal.shape}, expected ({n},)")
    if not np.all(np.isfinite(normal)) or not np.any(normal):
        raise OracleInconsistency("cut normal must be finite and nonzero")
    if offset is not None:
        offset = float(offset)
        if not np.isfinite(offset):
            raise OracleInconsistency("cut offset must be finite")
    return Halfspace(normal, offset)


# ---------------------------------------------------------------------------
# quadratic ground truth
# ---------------------------------------------------------------------------

class QuadraticOracle(SeparationOracle):
    """Separation oracle for ``f(x) = |x - target|^2``."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float).reshape(-1)

    def query(self, x):
        x = np.asarray(x, dtype=float)
        if np.array_equal(x, self.target):
            return None
        return Halfspace(self.target - x)

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.target
        return float(d @ d)


def quadratic_separation(target) -> QuadraticOracle:
    return QuadraticOracle(target)


# ---------------------------------------------------------------------------
# set functions
# ---------------------------------------------------------------------------

class EvalOracle:
    """Counting wrapper around a set function ``S -> int`` on ``{1..n}``.

    ``f(empty)`` is evaluated once and cached; ``call_count`` counts every
    other evaluation.
    """

    def __init__(self, n: int, evaluate: Callable):
        self.n = int(n)
        self.evaluate = evaluate
        self.call_count = 0
        self._empty = None

    def _checked(self, s):
        val = self.evaluate(s)
        if isinstance(val, (bool, np.bool_)) or not isinstance(val, numbers.Integral):
            if isinstance(val, float) and val.is_integer():
                return int(val)
            raise MalformedOracle(f"evaluation oracle returned non-integer {val!r}")
        return int(val)

    @property
    def empty_value(self) -> int:
        if self._empty is None:
            self._empty = self._checked(frozenset())
        return self._empty

    def __call__(self, s) -> int:
        s = frozenset(s)
        if not s:
            return self.empty_value
        self.call_count += 1
        return self._checked(s)

    def raw(self, s) -> int:
        """Evaluate without touching the counters."""
        return self._checked(frozenset(s))


def indicator(s, n: int) -> np.ndarray:
    x = np.zeros(n, dtype=int)
    for i in s:
        x[i - 1] = 1
    return x


def support(x) -> frozenset:
    return frozenset(int(i) + 1 for i in np.flatnonzero(np.asarray(x) > 0.5))


def _greedy(eo: EvalOracle, x):
    order = sorted(range(eo.n), key=lambda i: (-x[i], i))
    g = np.zeros(eo.n)
    prev = eo.empty_value
    chain = set()
    for i in order:
        chain.add(i + 1)
        cur = eo(chain)
        g[i] = cur - prev
        prev = cur
    return g


def lovasz_separation(eo: EvalOracle, x) -> Optional[Halfspace]:
    """Greedy-subgradient cut for the Lovasz extension of ``eo`` at ``x``.

    Outside ``[0,1]^n`` the most violated box facet is returned instead;
    violations up to BOX_TOL count as roundoff and are clipped away.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (eo.n,):
        raise OracleInconsistency(f"point has shape {x.shape}, expected ({eo.n},)")
    viol = np.maximum(-x, x - 1.0)
    i = int(np.argmax(viol))
    if viol[i] > BOX_TOL:
        a = np.zeros(eo.n)
        if x[i] < 0:
            a[i] = 1.0
            return Halfspace(a, 0.0)
        a[i] = -1.0
        return Halfspace(a, -1.0)
    g = _greedy(eo, np.clip(x, 0.0, 1.0))
    if not np.any(g):
        return None
    return Halfspace(-g)


def lovasz_value(eo: EvalOracle, x) -> float:
    """Lovasz extension by the greedy formula (costs n evaluations)."""
    x = np.clip(np.asarray(x, dtype=float).reshape(-1), 0.0, 1.0)
    return float(eo.empty_value + _greedy(eo, x) @ x)


class LovaszOracle(SeparationOracle):
    def __init__(self, eo: EvalOracle):
        self.eo = eo

    def query(self, x):
        return lovasz_separation(self.eo, x)

    def value(self, x):
        return lovasz_value(self.eo, x)


def perturbed(eo: EvalOracle) -> EvalOracle:
    """``(n+1) f(S) + |S|``: same counters, unique minimizer (the minimal one of f)."""
    n = eo.n

    def fn(s):
        return (n + 1) * eo(s) + len(s)

    out = EvalOracle(n, fn)
    out.base = eo
    return out


def brute_force_sfm(eo: EvalOracle):
    """Exact minimum over all subsets; returns ``(min_value, minimizers)``."""
    if eo.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}")
    best, sets = None, []
    labels = range(1, eo.n + 1)
    for r in range(eo.n + 1):
        for combo in itertools.combinations(labels, r):
            s = frozenset(combo)
            val = eo.raw(s)
            if best is None or val < best:
                best, sets = val, [s]
            elif val == best:
                sets.append(s)
    return best, sets


def make_graph_cut_oracle(n_vertices: int, edges) -> EvalOracle:
    """Cut function of an undirected graph on vertices ``1..n_vertices``."""
    clean = []
    for edge in edges:
        u, v, w = edge
        if not all(isinstance(t, numbers.Integral) for t in (u, v, w)):
            raise MalformedInstance(f"edge {edge!r} must hold integers")
        if not (1 <= u <= n_vertices and 1 <= v <= n_vertices):
            raise MalformedInstance(f"edge {edge!r} has an endpoint outside 1..{n_vertices}")
        if w < 0:
            raise MalformedInstance(f"edge {edge!r} has negative weight")
        clean.append((int(u), int(v), int(w)))

    def cut(s):
        return sum(w for u, v, w in clean if (u in s) != (v in s))

    eo = EvalOracle(n_vertices, cut)
    eo.edges = clean
    return eo


def make_table_oracle(n: int, values) -> EvalOracle:
    """Set function given by its values in subset-bitmask order (bit i-1 for element i)."""
    values = list(values)
    if len(values) != 2 ** n:
        raise MalformedInstance(f"table needs {2 ** n} values, got {len(values)}")

    def lookup(s):
        return values[sum(1 << (i - 1) for i in s)]

    return EvalOracle(n, lookup)


def is_submodular(eo: EvalOracle, samples: int = 0, rng=None) -> bool:
    """Check diminishing returns exhaustively, or on ``samples`` random (S, T, i) triples."""
    n = eo.n
    labels = list(range(1, n + 1))
    f = eo.raw

    def ok(s, t, i):
        return f(s | {i}) - f(s) >= f(t | {i}) - f(t)

    if samples:
        rng = np.random.default_rng(rng)
        for _ in range(samples):
            mask_t = rng.random(n) < 0.5
            i = int(rng.integers(1, n + 1))
            mask_t[i - 1] = False
            mask_s = mask_t & (rng.random(n) < 0.5)
            t = frozenset(j + 1 for j in np.flatnonzero(mask_t))
            s = frozenset(j + 1 for j in np.flatnonzero(mask_s))
            if not ok(s, t, i):
                return False
        return True
    for bits in itertools.product((0, 1, 2), repeat=n):
        # 0: outside T, 1: in T \ S, 2: in S
        s = frozenset(j + 1 for j, b in enumerate(bits) if b == 2)
        t = frozenset(j + 1 for j, b in enumerate(bits) if b >= 1)
        for i in labels:
            if i not in t and not ok(s, t, i):
                return False
    return True


def random_graph_cut(n: int, rng, density: float = 0.5, max_weight: int = 10) -> EvalOracle:
    rng = np.random.default_rng(rng)
    edges = [(u, v, int(rng.integers(1, max_weight + 1)))
             for u in range(1, n + 1) for v in range(u + 1, n + 1)
             if rng.random() < density]
    return make_graph_cut_oracle(n, edges)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

class Instance(NamedTuple):
    kind: str
    n: int
    eo: Optional[EvalOracle] = None
    target: Optional[np.ndarray] = None


def instance_from_json(data) -> Instance:
    if not isinstance(data, dict) or "type" not in data:
        raise MalformedInstance("instance must be an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "graph_cut":
            n = int(data["n"])
            return Instance(kind, n, eo=make_graph_cut_oracle(n, [tuple(e) for e in data["edges"]]))
        if kind == "table":
            n = int(data["n"])
            vals = data["values"]
            if not all(isinstance(v, numbers.Integral) for v in vals):
                raise MalformedInstance("table values must be integers")
            return Instance(kind, n, eo=make_table_oracle(n, vals))
        if kind == "quadratic":
            target = data["target"]
            if not isinstance(target, list) or not target or not all(
                    isinstance(t, numbers.Integral) and not isinstance(t, bool) for t in target):
                raise MalformedInstance("quadratic target must be a nonempty integer list")
            return Instance(kind, len(target), target=np.array(target, dtype=int))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedInstance):
            raise
        raise MalformedInstance(f"bad {kind} instance: {exc}") from exc
    raise MalformedInstance(f"unknown instance type {kind!r}")


def instance_to_json(inst: Instance) -> dict:
    if inst.kind == "quadratic":
        return {"type": "quadratic", "target": [int(t) for t in inst.target]}
    if inst.kind == "graph_cut":
        return {"type": "graph_cut", "n": inst.n, "edges": [list(e) for e in inst.eo.edges]}
    labels = range(1, inst.n + 1)
    values = [inst.eo.raw({i for i in labels if mask >> (i - 1) & 1}) for mask in range(2 ** inst.n)]
    return {"type": "table", "n": inst.n, "values": values}
