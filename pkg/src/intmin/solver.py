"""Integral minimization: cutting-plane blocks interleaved with lattice dimension reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Callable, NamedTuple, Optional

import numpy as np

from .barrier import BarrierState, Polytope, approx_volumetric_center
from .cutting_plane import (DELTA, EPS_MAIN, EPS_STRICT, cpm_block, default_block_length,
                            newton_tolerance)
from .dimred import AmbiguousHyperplane, ReductionInfo, SubspaceState, outer_scale, reduce_dimension
from .errors import AmbiguousYes, InfeasibleSlab, NonTermination
from .lattice import LatticeState, approx_shortest_vector, integer_solutions
from .oracles import (EvalOracle, Halfspace, LovaszOracle, SeparationOracle, as_oracle,
                      normalize_response, perturbed, support)
from .transcript import Transcript

log = logging.getLogger("intmin")

POLICIES = ("lemma31", "paper1e", "tenN")
# relative size below which a projected cut normal counts as orthogonal to W
ORTHO_TOL = 1e-12


@dataclass
class SolverConfig:
    R: int = 16
    T: Optional[int] = None
    epsCpm: Optional[float] = None
    delta: float = DELTA
    strict: bool = False
    thresholdPolicy: str = "lemma31"
    gramBits: int = 64
    maxBlocks: Optional[int] = None
    seed: int = 0
    boxCenter: Optional[list] = None
    boxRadius: Optional[float] = None
    newtonDirection: str = "hessian"
    checkReductions: bool = True

    def __post_init__(self):
        if int(self.R) != self.R or self.R < 1:
            raise ValueError("R must be an integer >= 1")
        if self.T is not None and self.T < 1:
            raise ValueError("T must be >= 1")
        if self.thresholdPolicy not in POLICIES:
            raise ValueError(f"threshold policy must be one of {POLICIES}")

    @property
    def eps(self) -> float:
        if self.epsCpm is not None:
            return self.epsCpm
        return EPS_STRICT if self.strict else EPS_MAIN

    def block_budget(self, n: int) -> int:
        if self.maxBlocks is not None:
            return self.maxBlocks
        gamma = 2.0 ** ((n - 1) / 2)
        return math.ceil(32 * (n + math.log(gamma * n * self.R) / math.log(max(n, 2))))

    def to_json(self) -> dict:
        return asdict(self)


class Event(str, Enum):
    BLOCK = "BLOCK"
    REDUCE = "REDUCE"
    DONE = "DONE"


@dataclass
class SolverState:
    sub: SubspaceState
    K: Polytope
    center: BarrierState
    lat: LatticeState
    transcript: Transcript
    config: SolverConfig
    result: Optional[np.ndarray] = None
    last_norm: float = math.nan
    last_gamma: float = math.nan

    @property
    def n(self) -> int:
        return self.sub.n

    @property
    def d(self) -> int:
        return self.sub.d

    @property
    def ambient_center(self) -> np.ndarray:
        return self.sub.to_ambient(self.center.x)


class ReducedOracle(SeparationOracle):
    """Presents an ambient oracle in the reduced coordinates of a subspace."""

    def __init__(self, oracle, sub: SubspaceState, transcript: Optional[Transcript] = None,
                 counter: str = "soCalls"):
        self.oracle = as_oracle(oracle)
        self.sub = sub
        self.transcript = transcript
        self.counter = counter
        self.restricted_yes = None

    def query(self, y):
        x = self.sub.to_ambient(y)
        cut = ambient_query(self.oracle, x, self.transcript)
        if cut is None:
            return None
        a = self.sub.basis.T @ cut.normal
        if np.linalg.norm(a) <= ORTHO_TOL * np.linalg.norm(cut.normal):
            # every subgradient component lies across W: x minimizes f on W,
            # and W holds a global minimizer
            self.restricted_yes = x
            return None
        return Halfspace(a)


def ambient_query(oracle, x, transcript: Optional[Transcript] = None) -> Optional[Halfspace]:
    if transcript is not None:
        transcript.bump("soCalls")
    return normalize_response(oracle.query(np.array(x, dtype=float)), len(x))


def threshold(policy: str, n: int, d: int, m: int) -> float:
    if policy == "lemma31":
        return 1.0 / (20.0 * outer_scale(m, d))
    if policy == "tenN":
        return 1.0 / (10.0 * n)
    # 2^(-100 n log2 n); a float underflows to 0 for n >= 5
    return 2.0 ** (-100 * n * math.log2(max(n, 2)))


def domain_box(n: int, config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """The initial search box as ``(lo, hi)``; it holds every minimizer."""
    center = np.zeros(n) if config.boxCenter is None else np.asarray(config.boxCenter, dtype=float)
    radius = config.R if config.boxRadius is None else config.boxRadius
    return center - radius, center + radius


def initial_state(n: int, config: SolverConfig) -> SolverState:
    sub = SubspaceState.full(n)
    lo, hi = domain_box(n, config)
    center, radius = 0.5 * (lo + hi), 0.5 * float((hi - lo).max())
    K = Polytope.box(center, radius)
    tr = Transcript()
    bc = approx_volumetric_center(K, K.interior, newton_tolerance(config.eps, K.m),
                                  direction=config.newtonDirection)
    tr.bump("newtonIters", bc.iterations)
    tr.record_potential("init", n, n * math.log(2.0 * radius), 0.0)
    return SolverState(sub, K, bc, LatticeState.standard(n), tr, config)


def _resolve_yes(state: SolverState, oracle, x) -> np.ndarray:
    """Turn a YES at ``x`` into a verified integral point, or raise AmbiguousYes."""
    r = np.rint(x)
    if np.array_equal(r, x):
        return r.astype(np.int64)
    if state.sub.contains_exact(r.astype(np.int64)):
        if ambient_query(oracle, r, state.transcript) is None:
            return r.astype(np.int64)
        fr, fx = oracle.value(r), oracle.value(x)
        if fr is not None and fx is not None and fr <= fx + 1e-9 * max(1.0, abs(fx)):
            return r.astype(np.int64)
    raise AmbiguousYes(np.asarray(x, dtype=float))


def main_loop_step(state: SolverState, oracle, callback: Optional[Callable] = None):
    """One iteration of the outer loop; returns ``(state, event)``."""
    oracle = as_oracle(oracle)
    cfg, tr = state.config, state.transcript
    U = state.sub.basis
    norm_matrix = U @ state.center.H_inv() @ U.T
    sv = approx_shortest_vector(state.lat, norm_matrix, bits=cfg.gramBits)
    tr.bump("lllCalls")
    state.lat = sv.lattice
    state.last_norm, state.last_gamma = sv.norm, sv.gamma
    thr = threshold(cfg.thresholdPolicy, state.n, state.d, state.K.m)
    if sv.norm <= thr:
        info: list[ReductionInfo] = []
        try:
            sub, K, center, lat = reduce_dimension(state.sub, state.K, state.center, state.lat,
                                                   sv.vector, sv.preimage,
                                                   check=cfg.checkReductions, info=info,
                                                   domain=domain_box(state.n, cfg))
        except AmbiguousHyperplane as exc:
            tr.record_event("SKIP_REDUCE", dim=state.d, norm=sv.norm, levels=exc.levels)
        else:
            state.sub, state.K, state.center, state.lat = sub, K, center, lat
            tr.bump("dimReductions")
            ri = info[0]
            tr.record_event("REDUCE", dim=state.d, norm=sv.norm, gamma=sv.gamma,
                            normal=[int(t) for t in sv.preimage], level=ri.level,
                            radiusSq=ri.radius_sq, boxExpanded=ri.expanded, clipped=ri.clipped)
            tr.record_potential("restart", state.d, ri.log_volume, lat.log_det())
            log.info("reduced to dimension %d (|v| = %.3e)", state.d, sv.norm)
            if callback is not None:
                callback("reduce", state)
            return state, Event.REDUCE
    T = cfg.T or default_block_length(state.d, state.K.m)
    adapter = ReducedOracle(oracle, state.sub, tr)

    def on_step(K, action, center):
        if callback is not None:
            callback("step", state, K=K, action=action, center=center)

    res = cpm_block(adapter, state.K, state.center.x, T, eps=cfg.eps, strict=cfg.strict,
                    delta=cfg.delta, transcript=tr, direction=cfg.newtonDirection,
                    callback=on_step, center=state.center)
    tr.bump("blocks")
    tr.bump("newtonIters", res.newton_iters)
    for row in res.transcript:
        row["block"] = tr.counts["blocks"]
        row["dim"] = state.d
    state.K, state.center = res.polytope, res.center
    tr.record_event("BLOCK", dim=state.d, norm=sv.norm, gamma=sv.gamma, steps=len(res.transcript),
                    m=state.K.m, terminated=res.terminated)
    log.debug("block %d in dimension %d: |v| = %.3e, m = %d", tr.counts["blocks"], state.d,
              sv.norm, state.K.m)
    if res.terminated:
        x = adapter.restricted_yes if adapter.restricted_yes is not None else state.sub.to_ambient(res.point)
        state.result = _resolve_yes(state, oracle, x)
        if callback is not None:
            callback("done", state)
        return state, Event.DONE
    recenter_frame(state)
    if callback is not None:
        callback("block", state)
    return state, Event.BLOCK


def recenter_frame(state: SolverState):
    """Move the origin of the reduced frame to the current center."""
    c = state.center.x
    state.sub.x0 = state.sub.to_ambient(c)
    state.K = Polytope(state.K.A, state.K.b - state.K.A @ c, np.zeros_like(c))
    state.center.x = np.zeros_like(c)


def _interval(K: Polytope) -> tuple[float, float]:
    a = K.A[:, 0]
    ratios = K.b / np.where(a == 0, np.nan, a)
    lo = np.nanmax(np.where(a > 0, ratios, -np.inf))
    hi = np.nanmin(np.where(a < 0, ratios, np.inf))
    return float(lo), float(hi)


def finish_low_dim(state: SolverState, oracle) -> np.ndarray:
    """Exact search once the subspace is a point or a line."""
    oracle = as_oracle(oracle)
    sub, tr = state.sub, state.transcript
    n = sub.n
    sol = integer_solutions(sub.normals, sub.offsets, n)
    if sol is None:
        raise InfeasibleSlab("the subspace contains no integral point")
    p, ker = sol
    p = np.array([int(t) for t in p], dtype=np.int64)
    if sub.d == 0 or ker.shape[0] == 0:
        return p
    if sub.d != 1 or ker.shape[0] != 1:
        raise ValueError("finish_low_dim needs dimension at most 1")
    q = np.array([int(t) for t in ker[0]], dtype=np.int64)
    u = float(sub.basis[:, 0] @ q)
    yp = float(sub.to_reduced(p)[0])
    lo_y, hi_y = _interval(state.K)
    slack = 1e-7 * max(1.0, abs(lo_y), abs(hi_y), abs(yp))
    ends = sorted(((lo_y - slack - yp) / u, (hi_y + slack - yp) / u))
    lo, hi = math.ceil(ends[0]), math.floor(ends[1])
    if lo > hi:
        raise InfeasibleSlab(f"no integral point in [{lo_y:.6g}, {hi_y:.6g}] along the line")

    def point(k):
        return p + k * q

    def direction(x):
        """Sign of the cut along the line: +1 means the minimizer is further along q."""
        cut = ambient_query(oracle, x, tr)
        if cut is None:
            return None
        s = float(cut.normal @ q)
        if abs(s) <= ORTHO_TOL * np.linalg.norm(cut.normal) * np.linalg.norm(q):
            return 0
        return 1 if s > 0 else -1

    while hi - lo >= 2:
        mid = (lo + hi) // 2
        sgn = direction(point(mid))
        if not sgn:
            return point(mid)
        if sgn > 0:
            lo = mid
        else:
            hi = mid
    if lo == hi:
        return point(lo)
    sgn = direction(point(lo))
    if not sgn or sgn < 0:
        return point(lo)
    sgn = direction(point(hi))
    if not sgn or sgn > 0:
        return point(hi)
    sgn = direction(p + (lo + 0.5) * q)
    if sgn:
        return point(hi) if sgn > 0 else point(lo)
    v_lo, v_hi = oracle.value(point(lo)), oracle.value(point(hi))
    if v_lo is None or v_hi is None:
        raise AmbiguousYes(p + (lo + 0.5) * q)
    return point(lo) if v_lo <= v_hi else point(hi)


def minimize(oracle, n: int, config: Optional[SolverConfig] = None,
             callback: Optional[Callable] = None) -> tuple[np.ndarray, Transcript]:
    """Integral minimizer of the convex function behind ``oracle``.

    ``callback(kind, state, **info)`` observes the run; ``kind`` is one of
    ``"step"``, ``"block"``, ``"reduce"``, ``"done"``, ``"finish"``.
    """
    oracle = as_oracle(oracle)
    config = config or SolverConfig()
    state = initial_state(n, config)
    budget = config.block_budget(n)
    while state.d > 1:
        if state.transcript.counts["blocks"] >= budget:
            raise NonTermination(f"block budget {budget} exhausted in dimension {state.d}",
                                 state.transcript)
        state, event = main_loop_step(state, oracle, callback)
        if event is Event.DONE:
            return state.result, state.transcript
    x = finish_low_dim(state, oracle)
    state.result = x
    if callback is not None:
        callback("finish", state)
    return x, state.transcript


class SfmResult(NamedTuple):
    minimizer: frozenset
    value: int
    point: np.ndarray
    transcript: Transcript


def minimize_submodular(eo: EvalOracle, config: Optional[SolverConfig] = None,
                        perturb: bool = True, callback: Optional[Callable] = None) -> SfmResult:
    """Minimize a set function through the Lovasz extension.

    With ``perturb`` the solver sees ``(n+1) f(S) + |S|``, whose unique
    minimizer is the smallest minimizer of ``f``.  The search box is
    ``[0,1]^n`` so every query lies in the domain of the extension.
    """
    n = eo.n
    config = config or SolverConfig(R=1)
    if config.boxCenter is None:
        config = replace(config, boxCenter=[0.5] * n, boxRadius=0.5)
    target = perturbed(eo) if perturb else eo
    before = eo.call_count
    x, tr = minimize(LovaszOracle(target), n, config, callback)
    tr.counts["eoCalls"] = eo.call_count - before
    s = support(x)
    return SfmResult(s, eo.raw(s), x, tr)
