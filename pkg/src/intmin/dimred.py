"""Dimension reduction: restrict the search to a hyperplane holding every integral point.

Reduced coordinates ``y`` of the current affine subspace map to ambient points
as ``x = x0 + U y``.  Besides the float frame, the subspace keeps an exact
description ``Z x = J`` with integer rows ``Z`` (the preimages of the lattice
vectors used so far) and integer right-hand sides ``J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .barrier import BarrierState, Polytope, approx_volumetric_center
from .errors import EmptySlice, IntminError, InfeasibleSlab
from .lattice import LatticeState, as_fractions, as_integers, exact_solve, project_lattice, to_float

INT_TOL = 1e-7


class AmbiguousHyperplane(IntminError):
    """The polytope meets more than one integral level of the candidate normal."""

    def __init__(self, levels):
        super().__init__(f"polytope meets integral levels {levels}")
        self.levels = levels


@dataclass
class SubspaceState:
    """Affine subspace ``x0 + span(basis)``, also described exactly by ``Z x = J``."""

    x0: np.ndarray
    basis: np.ndarray
    normals: np.ndarray = field(default=None)
    offsets: list = field(default_factory=list)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        n = self.x0.size
        self.basis = np.asarray(self.basis, dtype=float).reshape(n, -1)
        if self.normals is None:
            self.normals = np.zeros((0, n), dtype=object)
        self.normals = as_integers(np.asarray(self.normals, dtype=object).reshape(-1, n))
        self.offsets = [int(j) for j in self.offsets]

    @classmethod
    def full(cls, n: int) -> "SubspaceState":
        return cls(np.zeros(n), np.eye(n))

    @property
    def n(self) -> int:
        return self.x0.size

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def to_ambient(self, y) -> np.ndarray:
        return self.x0 + self.basis @ np.asarray(y, dtype=float)

    def to_reduced(self, x) -> np.ndarray:
        return self.basis.T @ (np.asarray(x, dtype=float) - self.x0)

    def contains_exact(self, x) -> bool:
        """Exact membership of an integer or rational point in ``Z x = J``."""
        x = as_fractions(x)
        return all(sum(int(zi) * xi for zi, xi in zip(row, x)) == j
                   for row, j in zip(self.normals, self.offsets))

    def project_exact(self, x) -> np.ndarray:
        """Closest point of W to ``x``, computed over the rationals."""
        x = as_fractions(x)
        if not self.offsets:
            return x
        z = as_fractions(self.normals)
        resid = z @ x - np.array([Fraction(j) for j in self.offsets], dtype=object)
        lam = exact_solve(z @ z.T, resid)
        return x - z.T @ lam

    def orthonormality_error(self) -> float:
        if self.d == 0:
            return 0.0
        return float(np.abs(self.basis.T @ self.basis - np.eye(self.d)).max())

    def to_json(self) -> dict:
        return {
            "x0": self.x0.tolist(),
            "basis": self.basis.tolist(),
            "normals": [[int(t) for t in row] for row in self.normals],
            "offsets": list(self.offsets),
        }


@dataclass
class SlicedEllipsoid:
    """``{c + G u : u^T A u <= 1}`` with ``c`` in the parent frame and orthonormal ``G``."""

    center: np.ndarray
    shape: np.ndarray
    frame: np.ndarray
    radius_sq: float


def hyperplane_frame(v) -> np.ndarray:
    """Orthonormal basis of ``v^perp`` from QR of ``[v/|v|, I]``."""
    v = np.asarray(v, dtype=float)
    d = v.size
    q, r = np.linalg.qr(np.column_stack([v / np.linalg.norm(v), np.eye(d)]))
    q = q[:, :d]
    q = q * np.sign(np.diag(r)[:d] + (np.diag(r)[:d] == 0))
    return q[:, 1:]


def slice_ellipsoid(center, shape, v, t, frame=None) -> SlicedEllipsoid:
    """Intersect ``{y : (y-c)^T A (y-c) <= 1}`` with ``{y : v.y = t}``."""
    c = np.asarray(center, dtype=float)
    A = np.asarray(shape, dtype=float)
    v = np.asarray(v, dtype=float)
    ainv_v = linalg.solve(A, v, assume_a="pos")
    q = float(v @ ainv_v)
    if not q > 0:
        raise EmptySlice("hyperplane normal is degenerate for this ellipsoid")
    gap = float(t - v @ c)
    r2 = 1.0 - gap * gap / q
    if not r2 > 0:
        raise EmptySlice(f"hyperplane misses the ellipsoid (r^2 = {r2:.3e})")
    c_new = c + ainv_v * gap / q
    g = hyperplane_frame(v) if frame is None else np.asarray(frame, dtype=float)
    a_new = g.T @ A @ g / r2
    return SlicedEllipsoid(c_new, 0.5 * (a_new + a_new.T), g, r2)


def outer_scale(m: int, d: int) -> float:
    """Blow-up turning the Dikin ellipsoid at the center into an enclosing one."""
    return 3.0 * m ** 1.5 * d


def _lp_range(K: Polytope, c) -> tuple[float, float]:
    """``min`` and ``max`` of ``c.y`` over ``K``."""
    c = np.asarray(c, dtype=float)
    out = []
    for sign in (1.0, -1.0):
        res = optimize.linprog(sign * c, A_ub=-K.A, b_ub=-K.b, bounds=[(None, None)] * K.n,
                               method="highs")
        if res.status != 0:
            raise EmptySlice(f"range LP failed: {res.message}")
        out.append(sign * res.fun)
    return out[0], out[1]


def hyperplane_offset(v, z, x_k) -> float:
    """Right-hand side of ``{y : v.y = (v - z).x_K + round(z.x_K)}``.

    Within W this is the same hyperplane as ``z.x = round(z.x_K)``, because
    ``z - v`` is orthogonal to W's direction space.
    """
    v, z, x_k = (np.asarray(t, dtype=float) for t in (to_float(v), to_float(z), x_k))
    return float((v - z) @ x_k + round(float(z @ x_k)))


def integral_levels(sub: SubspaceState, K: Polytope, z) -> list[int]:
    """Integers ``k`` such that ``z.x = k`` meets ``K`` (mapped to ambient), with slack INT_TOL."""
    zf = to_float(z)
    base = float(zf @ sub.x0)
    lo, hi = _lp_range(K, sub.basis.T @ zf)
    scale = max(1.0, abs(base), abs(lo), abs(hi))
    tol = INT_TOL * scale
    return list(range(math.ceil(base + lo - tol), math.floor(base + hi + tol) + 1))


def restart_box(center, shape) -> Polytope:
    """``w + A^{-1/2} B_inf(1)`` as normalized rows ``+-A^{1/2}``."""
    w = np.asarray(center, dtype=float)
    evals, evecs = np.linalg.eigh(shape)
    root = (evecs * np.sqrt(evals)) @ evecs.T
    norms = np.linalg.norm(root, axis=1)
    rows = root / norms[:, None]
    d = w.size
    A = np.zeros((2 * d, d))
    A[0::2] = rows
    A[1::2] = -rows
    half = 1.0 / norms
    b = np.empty(2 * d)
    b[0::2] = rows @ w - half
    b[1::2] = -(rows @ w) - half
    return Polytope(A, b, w.copy())


def box_log_volume(shape) -> float:
    d = shape.shape[0]
    sign, logdet = np.linalg.slogdet(shape)
    return d * math.log(2.0) - 0.5 * logdet


@dataclass
class ReductionInfo:
    level: int
    scale: float
    radius_sq: float
    expanded: float
    log_volume: float
    clipped: bool = False


def reduce_dimension(sub: SubspaceState, K: Polytope, center: BarrierState, lat: LatticeState,
                     v, z, check: bool = True, info: Optional[list] = None, domain=None):
    """Move to the hyperplane ``z.x = round(z.x_K)`` inside W and restart there.

    Returns ``(sub, polytope, center, lattice)`` for the new subspace.  With
    ``check`` the range of ``z.x`` over K is computed by linear programming
    and the step is refused (AmbiguousHyperplane) unless exactly one integer
    level is met, and the restart box is widened if it fails to contain the
    slice of K.  ``domain = (lo, hi)`` is an ambient box known to hold the
    minimizers; the restart box is clipped to it when that leaves interior.
    ``info``, when given, receives a ReductionInfo.
    """
    d = sub.d
    if d < 2:
        raise ValueError("reduction needs dimension at least 2")
    z_int = as_integers(z)
    zf = to_float(z_int)
    x_k = sub.to_ambient(center.x)
    level = int(round(float(zf @ x_k)))
    if check:
        levels = integral_levels(sub, K, z_int)
        if not levels:
            raise InfeasibleSlab("the polytope holds no integral level of the lattice normal")
        if len(levels) > 1:
            raise AmbiguousHyperplane(levels)
        level = levels[0]
    v_red = sub.basis.T @ zf
    t = level - float(zf @ sub.x0)

    scale = outer_scale(K.m, d)
    outer = center.H / scale ** 2
    sl = slice_ellipsoid(center.x, outer, v_red, t)

    normals = np.vstack([sub.normals, z_int.reshape(1, -1)]) if sub.offsets else z_int.reshape(1, -1)
    new_sub = SubspaceState(sub.to_ambient(sl.center), sub.basis @ sl.frame,
                            normals, sub.offsets + [level])
    new_sub.x0 = to_float(new_sub.project_exact(new_sub.x0))
    proj = _float_projector(new_sub)
    q, r = np.linalg.qr(proj @ new_sub.basis)
    q = q * np.sign(np.diag(r) + (np.diag(r) == 0))
    m_map = q.T @ new_sub.basis  # frame coordinates -> corrected frame, ~ identity
    new_sub.basis = q
    shape = np.linalg.solve(m_map.T, np.linalg.solve(m_map.T, sl.shape).T).T
    shape = 0.5 * (shape + shape.T)
    w = np.zeros(d - 1)

    expanded = 1.0
    if check:
        expanded = _box_cover_factor(sub, K, new_sub, shape)
        if expanded > 1.0:
            shape = shape / expanded ** 2
    box = restart_box(w, shape)
    new_center = approx_volumetric_center(box, w, 0.0)
    clipped = False
    if domain is not None:
        clipped_box = clip_to_domain(box, new_sub, domain)
        if clipped_box is not None:
            box, clipped = clipped_box, True
            new_center = approx_volumetric_center(box, box.interior, center_tol(box.m))
    new_lat = project_lattice(lat, v)
    if info is not None:
        info.append(ReductionInfo(level, scale, sl.radius_sq, expanded,
                                  box_log_volume(shape), clipped))
    return new_sub, box, new_center, new_lat


def clip_to_domain(box: Polytope, sub: SubspaceState, domain) -> Optional[Polytope]:
    """Intersect ``box`` with the ambient box ``lo <= x <= hi`` restricted to the subspace.

    Rows that cannot cut the box are skipped.  Returns None when nothing is
    cut or the intersection has (numerically) empty interior.
    """
    lo, hi = (np.asarray(t, dtype=float) for t in domain)
    w = box.interior
    # half-widths of the box along a row u: sum_k |u . e_k| / |row_k|, rows come in +- pairs
    half = np.linalg.inv(box.A[0::2]) * ((box.A[0::2] @ w) - box.b[0::2])[None, :]
    rows, rhs = [], []
    for i in range(sub.n):
        u = sub.basis[i]
        norm = np.linalg.norm(u)
        if norm <= 1e-9:
            continue
        u = u / norm
        reach = float(np.abs(u @ half).sum())
        for a, beta in ((u, (lo[i] - sub.x0[i]) / norm), (-u, (sub.x0[i] - hi[i]) / norm)):
            if a @ w - reach < beta:
                rows.append(a)
                rhs.append(beta)
    if not rows:
        return None
    A = np.vstack([box.A, rows])
    b = np.concatenate([box.b, rhs])
    # Chebyshev center: maximize r subject to A y - r |A_j| >= b
    res = optimize.linprog(np.r_[np.zeros(sub.d), -1.0],
                           A_ub=np.column_stack([-A, np.ones(len(b))]), b_ub=-b,
                           bounds=[(None, None)] * sub.d + [(0, None)], method="highs")
    if res.status != 0:
        return None
    y, r = res.x[:-1], res.x[-1]
    if r <= 1e-6 * max(1.0, float(np.abs(hi - lo).max())):
        return None
    return Polytope(A, b, y)


def center_tol(m: int) -> float:
    return 1e-8 / (8.0 * m)


def _float_projector(sub: SubspaceState) -> np.ndarray:
    z = to_float(sub.normals)
    return np.eye(sub.n) - z.T @ np.linalg.solve(z @ z.T, z)


def _box_cover_factor(old: SubspaceState, K: Polytope, new: SubspaceState, shape) -> float:
    """Factor by which the restart box must grow to contain the slice of K."""
    p = old.basis.T @ (new.x0 - old.x0)
    L = old.basis.T @ new.basis
    A = K.A @ L
    b = K.b - K.A @ p
    evals, evecs = np.linalg.eigh(shape)
    root = (evecs * np.sqrt(evals)) @ evecs.T
    worst = 0.0
    bounds = [(None, None)] * new.d
    for row in root:
        for sign in (1.0, -1.0):
            res = optimize.linprog(-sign * row, A_ub=-A, b_ub=-b, bounds=bounds, method="highs")
            if res.status != 0:
                return 1.0
            worst = max(worst, -res.fun)
    return worst * (1 + 1e-9) if worst > 1.0 else 1.0
