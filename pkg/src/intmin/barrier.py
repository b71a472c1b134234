"""Log-barrier and volumetric-barrier analytics over an explicit polytope."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import InteriorViolation, NonConvergence, StructuralError

# Below these decrements the certificate is limited by double precision, not
# by the iteration; see approx_volumetric_center.
NEWTON_FLOOR = 1e-20
STALL_FLOOR = 1e-14


@dataclass
class Polytope:
    """The polytope ``{x : A x >= b}`` together with a strictly interior point."""

    A: np.ndarray
    b: np.ndarray
    interior: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.interior = np.asarray(self.interior, dtype=float).reshape(-1)
        m, n = self.A.shape
        if self.b.shape != (m,) or self.interior.shape != (n,):
            raise StructuralError("inconsistent polytope dimensions")
        if m < n + 1:
            raise StructuralError(f"a bounded polytope in R^{n} needs at least {n + 1} rows, got {m}")
        s = self.slacks(self.interior)
        bad = int(np.argmin(s))
        if s[bad] <= 0:
            raise InteriorViolation(bad, float(s[bad]))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def slacks(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float) - self.b

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.slacks(x) >= -tol))

    def add_row(self, a, beta, interior) -> "Polytope":
        return Polytope(np.vstack([self.A, np.asarray(a, dtype=float)]),
                        np.append(self.b, float(beta)), interior)

    def drop_row(self, index: int) -> "Polytope":
        keep = np.arange(self.m) != index
        return Polytope(self.A[keep], self.b[keep], self.interior)

    @classmethod
    def box(cls, center, radius) -> "Polytope":
        """Axis-aligned box ``center + radius * B_inf(1)``; rows ``x_i``, ``-x_i`` interleaved."""
        center = np.asarray(center, dtype=float).reshape(-1)
        radius = np.broadcast_to(np.asarray(radius, dtype=float), center.shape)
        n = center.size
        A = np.zeros((2 * n, n))
        A[0::2] = np.eye(n)
        A[1::2] = -np.eye(n)
        b = np.empty(2 * n)
        b[0::2] = center - radius
        b[1::2] = -(center + radius)
        return cls(A, b, center.copy())

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "interior": self.interior.tolist()}


@dataclass
class BarrierState:
    """Barrier quantities evaluated at a single interior point."""

    x: np.ndarray
    H: np.ndarray
    F: float
    sigma: np.ndarray
    gradF: np.ndarray
    Q: np.ndarray
    muLower: float
    slacks: np.ndarray
    scaled_rows: np.ndarray = field(repr=False)
    chol: tuple = field(repr=False)
    decrement: float = float("nan")
    iterations: int = 0

    @property
    def n(self) -> int:
        return self.x.size

    def solve_H(self, v) -> np.ndarray:
        return linalg.cho_solve(self.chol, v, check_finite=False)

    def H_inv(self) -> np.ndarray:
        return self.solve_H(np.eye(self.n))

    def inv_norm(self, v) -> float:
        """``||v||_{H^-1}``."""
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(max(v @ self.solve_H(v), 0.0)))

    def newton_decrement(self) -> float:
        g = self.gradF
        return float(g @ linalg.solve(self.Q, g, assume_a="pos"))


def evaluate_barrier(K: Polytope, x) -> BarrierState:
    """Evaluate H, F, leverage scores, the gradient of F, Q and min sigma at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    s = K.slacks(x)
    bad = int(np.argmin(s))
    if not s[bad] > 0:
        raise InteriorViolation(bad, float(s[bad]))
    ax = K.A / s[:, None]
    H = ax.T @ ax
    try:
        chol = linalg.cho_factor(H, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise StructuralError("barrier Hessian is singular; polytope is unbounded") from exc
    w = linalg.solve_triangular(chol[0], ax.T, lower=True, check_finite=False)
    sigma = np.einsum("ij,ij->j", w, w)
    F = float(np.sum(np.log(np.diag(chol[0]))))
    grad = -ax.T @ sigma
    Q = (ax * sigma[:, None]).T @ ax
    return BarrierState(x=x, H=H, F=F, sigma=sigma, gradF=grad, Q=Q,
                        muLower=float(sigma.min()), slacks=s, scaled_rows=ax, chol=chol)


def volumetric_value(K: Polytope, x) -> float:
    """``F(x)``, or ``+inf`` outside the interior."""
    s = K.slacks(x)
    if np.any(s <= 0):
        return np.inf
    ax = K.A / s[:, None]
    sign, logdet = np.linalg.slogdet(ax.T @ ax)
    return 0.5 * logdet if sign > 0 else np.inf


def exact_hessian(state: BarrierState) -> np.ndarray:
    """Hessian of F: ``Ax^T (3 Sigma - 2 P*P) Ax`` with ``P = Ax H^-1 Ax^T``."""
    ax = state.scaled_rows
    p = ax @ state.solve_H(ax.T)
    mid = 3.0 * np.diag(state.sigma) - 2.0 * p * p
    return ax.T @ mid @ ax


def mu_exact(state: BarrierState) -> float:
    """Smallest generalized eigenvalue of ``(Q, H)``."""
    return float(linalg.eigh(state.Q, state.H, eigvals_only=True)[0])


def approx_volumetric_center(K: Polytope, x_init, tol: float, max_iter: int = 500,
                             direction: str = "hessian") -> BarrierState:
    """Damped Newton on F until ``gradF^T Q^-1 gradF <= tol``.

    ``direction="hessian"`` steps along the exact Hessian of F, which
    converges quadratically; ``"q"`` uses the surrogate Q. Both use Armijo
    backtracking (factor 1/2, slope 1/4) with strict interiority checks.
    Requests below NEWTON_FLOOR are clamped to it, and once the decrement is
    under STALL_FLOOR and stops shrinking the current point is returned, since
    double precision cannot certify anything smaller.
    """
    if direction not in ("hessian", "q"):
        raise ValueError(f"unknown direction {direction!r}")
    target = max(float(tol), NEWTON_FLOOR)
    origin = np.asarray(x_init, dtype=float).reshape(-1)
    # iterate on x - x_init so slacks do not lose digits to cancellation
    local = Polytope(K.A, K.b - K.A @ origin, np.zeros_like(origin))
    K = local
    x = np.zeros_like(origin)
    state = evaluate_barrier(K, x)
    dec = np.inf
    best, stalled = np.inf, 0
    for it in range(max_iter + 1):
        g = state.gradF
        q_chol = linalg.cho_factor(state.Q, lower=True, check_finite=False)
        dec = float(g @ linalg.cho_solve(q_chol, g, check_finite=False))
        stalled = stalled + 1 if dec > 0.5 * best else 0
        best = min(best, dec)
        if dec <= target or (dec < STALL_FLOOR and stalled >= 3):
            return _finish(state, origin, dec, it)
        if it == max_iter:
            break
        if direction == "hessian":
            try:
                step = -linalg.solve(exact_hessian(state), g, assume_a="pos", check_finite=False)
            except (linalg.LinAlgError, ValueError):
                step = -linalg.cho_solve(q_chol, g, check_finite=False)
        else:
            step = -linalg.cho_solve(q_chol, g, check_finite=False)
        slope = float(g @ step)
        if slope >= 0:
            step = -linalg.cho_solve(q_chol, g, check_finite=False)
            slope = -dec
        t = 1.0
        nxt = None
        while t > 1e-12:
            cand = _try_evaluate(K, x + t * step)
            if cand is not None and (cand.F <= state.F + 0.25 * t * slope
                                     or (dec < 1e-8 and t == 1.0)):
                # below 1e-8 the predicted decrease is under the rounding in F
                nxt = cand
                break
            t *= 0.5
        if nxt is None:
            if dec < STALL_FLOOR:
                return _finish(state, origin, dec, it)
            break
        x, state = nxt.x, nxt
    raise NonConvergence(dec, it)


def _try_evaluate(K: Polytope, x) -> Optional[BarrierState]:
    try:
        return evaluate_barrier(K, x)
    except (InteriorViolation, StructuralError):
        return None


def _finish(state: BarrierState, origin, dec: float, it: int) -> BarrierState:
    state.x = origin + state.x
    state.decrement = dec
    state.iterations = it
    return state
