"""Vaidya's volumetric-center cutting plane method."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .barrier import BarrierState, Polytope, approx_volumetric_center
from .errors import OracleInconsistency
from .oracles import Halfspace, as_oracle, normalize_response
from .transcript import Transcript

DELTA = 1e-4
EPS_STRICT = 1e-7
EPS_MAIN = 0.01


class CutKind(str, Enum):
    ADD = "ADD"
    DROP = "DROP"
    TERMINATE = "TERMINATE"


@dataclass
class CutAction:
    kind: CutKind
    witness: np.ndarray
    added_row: Optional[tuple] = None
    dropped_index: Optional[int] = None
    next_start: Optional[np.ndarray] = None


@dataclass
class CpmResult:
    polytope: Polytope
    center: BarrierState
    transcript: list = field(default_factory=list)
    terminated: bool = False
    point: Optional[np.ndarray] = None
    so_calls: int = 0
    newton_iters: int = 0


def default_block_length(n: int, m: int) -> int:
    return max(1, math.ceil(4 * n * math.log(max(m, 3))))


def newton_tolerance(eps: float, m: int) -> float:
    """``eps^4 * mu / 2`` with mu replaced by its guaranteed lower bound ``1/(4m)``."""
    return eps ** 4 / (8.0 * m)


def _cut_offset(cut: Halfspace, x) -> float:
    """Central placement; a declared offset that fails to separate ``x`` is an error."""
    central = float(cut.normal @ x)
    if cut.offset is not None and cut.offset < central - 1e-9 * max(1.0, float(np.abs(x).max())):
        raise OracleInconsistency(
            f"cut offset {cut.offset!r} does not separate the query point (a.x = {central!r})")
    return central


def cpm_step(K: Polytope, center: BarrierState, oracle, eps: float, strict: bool = False,
             delta: float = DELTA) -> tuple[Polytope, CutAction]:
    """One add/drop decision of Vaidya's method at a certified center.

    ADD queries the oracle at the center.  The default places the new row
    through the center; ``strict`` backs it off so the new row's leverage
    score at the center is exactly ``delta``.
    """
    x = center.x
    if center.muLower >= eps:
        cut = normalize_response(as_oracle(oracle).query(x.copy()), K.n)
        if cut is None:
            return K, CutAction(CutKind.TERMINATE, x.copy())
        scale = float(np.linalg.norm(cut.normal))
        a = cut.normal / scale
        offset = None if cut.offset is None else cut.offset / scale
        beta = _cut_offset(Halfspace(a, offset), x)
        a_norm = center.inv_norm(a)
        if strict:
            # new leverage t/(1+t) with t = |a|^2_{H^-1}/s^2 equals delta
            beta -= a_norm * math.sqrt((1.0 - delta) / delta)
            start = x.copy()
        else:
            start = x + 0.5 * center.solve_H(a) / a_norm
        K2 = K.add_row(a, beta, start)
        return K2, CutAction(CutKind.ADD, x.copy(), added_row=(a, beta), next_start=start)
    idx = int(np.argmin(center.sigma))
    K2 = K.drop_row(idx)
    K2.interior = x.copy()
    return K2, CutAction(CutKind.DROP, x.copy(), dropped_index=idx, next_start=x.copy())


def cpm_block(oracle, K: Polytope, x_init, T: int, eps: float = EPS_MAIN, strict: bool = False,
              delta: float = DELTA, tol: Optional[float] = None, transcript: Optional[Transcript] = None,
              direction: str = "hessian", callback: Optional[Callable] = None,
              center: Optional[BarrierState] = None) -> CpmResult:
    """Run ``T`` iterations of re-center then add/drop.

    ``callback(K, action, center)`` is invoked after every step.  A
    certified ``center`` of ``K`` may be passed to skip the first centering.
    """
    oracle = as_oracle(oracle)
    if T < 1:
        raise ValueError("block length must be at least 1")

    def tol_for(P):
        return newton_tolerance(eps, P.m) if tol is None else tol

    rows = []
    newton = 0
    if center is None:
        center = approx_volumetric_center(K, x_init, tol_for(K), direction=direction)
        newton += center.iterations
    so_calls = 0
    for step in range(T):
        rho, min_sigma, m = center.F, center.muLower, K.m
        if center.muLower >= eps:
            so_calls += 1
        K_next, action = cpm_step(K, center, oracle, eps, strict=strict, delta=delta)
        if action.kind is CutKind.TERMINATE:
            row = dict(step=step, action=action.kind.value, rho=rho, rhoNext=rho,
                       minSigma=min_sigma, m=m, decrement=center.decrement)
            rows.append(row)
            if transcript is not None:
                transcript.record_step(**row)
            if callback is not None:
                callback(K, action, center)
            return CpmResult(K, center, rows, True, action.witness, so_calls, newton)
        K = K_next
        center = approx_volumetric_center(K, action.next_start, tol_for(K), direction=direction)
        newton += center.iterations
        row = dict(step=step, action=action.kind.value, rho=rho, rhoNext=center.F,
                   minSigma=min_sigma, m=m, decrement=center.decrement)
        rows.append(row)
        if transcript is not None:
            transcript.record_step(**row)
        if callback is not None:
            callback(K, action, center)
    return CpmResult(K, center, rows, False, None, so_calls, newton)
