"""Property suites shared by ``intmin verify`` and the test-suite.

Each suite returns a list of CheckResult rows.  Suites are deterministic for
a given seed.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Optional

import numpy as np

from .barrier import (Polytope, approx_volumetric_center, evaluate_barrier, mu_exact,
                      volumetric_value)
from .cutting_plane import DELTA, EPS_STRICT, CutKind, cpm_block, default_block_length
from .lattice import (GramForm, LatticeState, brute_force_shortest, enumeration_bound,
                      exact_projector, lll_reduce, same_lattice)
from .oracles import (EvalOracle, LovaszOracle, brute_force_sfm, is_submodular, lovasz_separation,
                      lovasz_value, quadratic_separation, random_graph_cut)
from .solver import SolverConfig, minimize, minimize_submodular


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


# ---------------------------------------------------------------- instances

def random_lattice(rng, k: int):
    """Random full-rank integer basis with entries in [-100, 100] and a diagonally dominant gram."""
    while True:
        basis = rng.integers(-100, 101, size=(k, k))
        if round(abs(np.linalg.det(basis))) != 0:
            break
    off = np.triu(rng.integers(-3, 4, size=(k, k)), 1)
    off = off + off.T
    gram = off + np.diag(np.abs(off).sum(axis=1) + rng.integers(1, 6, size=k))
    return LatticeState(basis.tolist(), basis.tolist()), GramForm.exact(gram.tolist())


def random_polytope(rng, n: int, m: int) -> Polytope:
    """A box ``[-1, 1]^n`` plus ``m - 2n`` random rows, all strictly satisfied at a random point."""
    x0 = rng.uniform(-0.5, 0.5, size=n)
    K = Polytope.box(np.zeros(n), 1.0)
    extra = rng.normal(size=(m - 2 * n, n))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    b = extra @ x0 - rng.uniform(0.05, 1.0, size=m - 2 * n)
    return Polytope(np.vstack([K.A, extra]), np.concatenate([K.b, b]), x0)


def random_interior_point(rng, K: Polytope) -> np.ndarray:
    """A point on a random segment from the interior point, at most 90% of the way to the boundary."""
    d = rng.normal(size=K.n)
    Ad = K.A @ d
    s = K.slacks(K.interior)
    with np.errstate(divide="ignore"):
        t = np.where(Ad < 0, s / -Ad, np.inf).min()
    return K.interior + rng.uniform(0, 0.9) * t * d


def sample_dikin(rng, x, H, count: int) -> np.ndarray:
    """Uniform samples of ``{y : (y-x)^T H (y-x) <= 1}``."""
    n = x.size
    u = rng.normal(size=(count, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    u *= rng.uniform(size=(count, 1)) ** (1.0 / n)
    L = np.linalg.cholesky(H)
    return x + np.linalg.solve(L.T, u.T).T


def central_gradient(f: Callable, x, h: float) -> np.ndarray:
    """Fourth-order central differences."""
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def fd_hessian(K: Polytope, x, h: float) -> np.ndarray:
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((evaluate_barrier(K, x + e).gradF - evaluate_barrier(K, x - e).gradF) / (2 * h))
    H = np.column_stack(cols)
    return 0.5 * (H + H.T)


# ------------------------------------------------------------------ barrier

def barrier_point_checks(K: Polytope, x, rng=None, dikin_samples: int = 0) -> dict:
    """Worst-case margins of the barrier properties at ``x``; every value should be ``<= 0``."""
    st = evaluate_barrier(K, x)
    out = {"sigmaSum": abs(st.sigma.sum() - K.n) - 1e-9}
    mu = mu_exact(st)
    out["muLower"] = (1.0 / (4 * K.m) - 1e-8) - mu
    out["muUpper"] = mu - (1.0 + 1e-8)
    out["muVsSigma"] = (st.sigma.min() - 1e-8) - mu
    if dikin_samples:
        ys = sample_dikin(rng, st.x, st.H, dikin_samples)
        out["dikin"] = float((K.A @ ys.T - K.b[:, None] < 0).sum())
    return out


def derivative_checks(K: Polytope, x) -> dict:
    st = evaluate_barrier(K, x)
    scale = max(1.0, float(np.abs(x).max()))
    fd = central_gradient(lambda y: volumetric_value(K, y), x, 1e-4 * scale * st.slacks.min())
    rel = np.linalg.norm(fd - st.gradF) / np.linalg.norm(st.gradF)
    H = fd_hessian(K, x, 1e-6 * st.slacks.min())
    tol = 1e-3 * np.linalg.norm(st.Q, 2)
    low = np.linalg.eigvalsh(H - st.Q).min()
    high = np.linalg.eigvalsh(5 * st.Q - H).min()
    return {"gradRelErr": float(rel), "sandwichLow": float(-low - tol), "sandwichHigh": float(-high - tol)}


def barrier_suite(seed: int = 0, polytopes: int = 20, points: int = 10,
                  dikin_samples: int = 1000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(polytopes):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(2 * n + 1, 13))
        K = random_polytope(rng, n, m)
        xs = [random_interior_point(rng, K) for _ in range(points)]
        center = approx_volumetric_center(K, K.interior, 1e-12)
        for x in xs:
            for key, val in derivative_checks(K, x).items():
                worst[key] = max(worst.get(key, -np.inf), val)
        for x in xs + [center.x]:
            for key, val in barrier_point_checks(K, x, rng, dikin_samples if x is center.x else 0).items():
                worst[key] = max(worst.get(key, -np.inf), val)
    return [
        CheckResult("gradient", worst["gradRelErr"] <= 1e-5,
                    f"max relative error {worst['gradRelErr']:.2e}"),
        CheckResult("hessian sandwich", max(worst["sandwichLow"], worst["sandwichHigh"]) <= 0,
                    f"worst margins {worst['sandwichLow']:.2e}, {worst['sandwichHigh']:.2e}"),
        CheckResult("leverage sum", worst["sigmaSum"] <= 0, f"worst excess {worst['sigmaSum']:.2e}"),
        CheckResult("mu bounds", max(worst["muLower"], worst["muUpper"], worst["muVsSigma"]) <= 0,
                    f"worst margins {worst['muLower']:.2e}, {worst['muUpper']:.2e}, "
                    f"{worst['muVsSigma']:.2e}"),
        CheckResult("dikin containment", worst["dikin"] == 0,
                    f"{int(worst['dikin'])} violations in {polytopes}x{dikin_samples} samples"),
    ]


# ---------------------------------------------------------------------- lll

def lll_suite(seed: int = 0, lattices: int = 100, max_rank: int = 6) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    bad_factor = bad_lattice = 0
    for _ in range(lattices):
        k = int(rng.integers(1, max_rank + 1))
        lat, gram = random_lattice(rng, k)
        red, nsq = lll_reduce(lat, gram)
        lam = brute_force_shortest(red, gram, enumeration_bound(red, gram))
        bad_factor += not nsq <= 2 ** (k - 1) * lam
        bad_lattice += not (same_lattice(red.basis, lat.basis) and (red.basis == red.preimages).all())
    return [
        CheckResult("lll factor", bad_factor == 0, f"{lattices - bad_factor}/{lattices} within 2^(k-1)"),
        CheckResult("lll lattice", bad_lattice == 0, f"{lattices - bad_lattice}/{lattices} preserved"),
    ]


# ---------------------------------------------------------------------- cpm

def in_polytope(K: Polytope, y, rtol: float = 1e-9) -> bool:
    scale = max(1.0, float(np.abs(K.b).max()), float(np.abs(y).max()))
    return bool((K.A @ y - K.b >= -rtol * scale).all())


def strict_run(n: int = 2, blocks: int = 50, seed: int = 0, eps: float = EPS_STRICT,
               delta: float = DELTA) -> dict:
    """Run ``blocks`` strict-mode blocks of a quadratic oracle and collect the rho accounting."""
    rng = np.random.default_rng(seed)
    target = rng.integers(-3, 4, size=n)
    oracle = quadratic_separation(target)
    # box centered off the integer grid so the first query is never the target
    K = Polytope.box(np.full(n, 0.5), 4.0)
    center = None
    gains, losses, block_ok, retained = [], [], True, True
    for _ in range(blocks):
        T = default_block_length(n, K.m)
        res = cpm_block(oracle, K, K.interior, T, eps=eps, strict=True, delta=delta, center=center)
        rows = res.transcript
        for row in rows:
            diff = row["rhoNext"] - row["rho"]
            (gains if row["action"] == CutKind.ADD.value else losses).append(diff)
        if rows and not res.terminated:
            block_ok &= rows[-1]["rhoNext"] >= rows[0]["rho"] + 0.5 * len(rows) * eps
        K, center = res.polytope, res.center
        retained &= in_polytope(K, target.astype(float))
        if res.terminated:
            break
    return {"gains": gains, "losses": losses, "blockOk": block_ok, "retained": retained,
            "m": K.m, "bound": math.sqrt(delta * eps) / 5}


def cpm_suite(seed: int = 0, blocks: int = 50) -> list[CheckResult]:
    r = strict_run(blocks=blocks, seed=seed)
    eps = EPS_STRICT
    min_gain = min(r["gains"]) if r["gains"] else math.inf
    drops = [-d for d in r["losses"]]
    max_loss = max(drops) if drops else 0.0
    return [
        CheckResult("strict ADD gain", min_gain >= r["bound"],
                    f"{len(r['gains'])} ADD steps, min gain {min_gain:.3e} vs {r['bound']:.3e}"),
        CheckResult("strict DROP loss", max_loss <= 5 * eps,
                    f"{len(drops)} DROP steps, max loss {max_loss:.3e} vs {5 * eps:.1e}"),
        CheckResult("block potential", r["blockOk"], "rho_T >= rho_0 + T eps / 2 on every block"),
        CheckResult("cpm retention", r["retained"], f"target kept through {blocks} blocks, m = {r['m']}"),
    ]


# ------------------------------------------------------------------- dimred

class RetentionMonitor:
    """Solver callback asserting that a known minimizer survives every step and reduction."""

    def __init__(self, target, lattice_check: bool = True):
        self.target = np.asarray(target)
        self.lattice_check = lattice_check
        self.steps = self.reductions = 0
        self.failures: list[str] = []
        self.sigma_err = 0.0

    def __call__(self, kind, state, **info):
        sub = state.sub
        if kind == "step":
            self.steps += 1
            K, center = info["K"], info["center"]
            y = sub.to_reduced(self.target)
            if not in_polytope(K, y):
                self.failures.append(f"step {self.steps}: target left K")
            self.sigma_err = max(self.sigma_err, abs(center.sigma.sum() - K.n))
        elif kind == "reduce":
            self.reductions += 1
            if not sub.contains_exact(self.target):
                self.failures.append(f"reduction {self.reductions}: target left W")
            if not in_polytope(state.K, sub.to_reduced(self.target)):
                self.failures.append(f"reduction {self.reductions}: target left the restart box")
            y = np.linspace(-1, 1, sub.d)
            if np.abs(sub.to_reduced(sub.to_ambient(y)) - y).max() > 1e-12:
                self.failures.append(f"reduction {self.reductions}: frame round trip")
            if self.lattice_check and not same_lattice(state.lat.basis,
                                                       exact_projector(sub.normals, sub.n)):
                self.failures.append(f"reduction {self.reductions}: lattice differs from projection")


def dimred_suite(seed: int = 0, runs: int = 10, max_n: int = 5) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    monitors, wrong = [], 0
    for _ in range(runs):
        n = int(rng.integers(2, max_n + 1))
        target = rng.integers(-10, 11, size=n)
        mon = RetentionMonitor(target)
        x, _ = minimize(quadratic_separation(target), n, SolverConfig(R=16), callback=mon)
        wrong += not np.array_equal(x, target)
        monitors.append(mon)
    fails = [f for m in monitors for f in m.failures]
    reductions = sum(m.reductions for m in monitors)
    return [
        CheckResult("retention", not fails,
                    f"{sum(m.steps for m in monitors)} steps, {reductions} reductions"
                    + (f", first failure: {fails[0]}" if fails else "")),
        CheckResult("recovery", wrong == 0, f"{runs - wrong}/{runs} targets recovered"),
    ]


# ---------------------------------------------------------------------- sfm

def subgradient_check(rng, trials: int = 200, max_n: int = 6) -> float:
    """Largest violation of ``f_L(y) >= f_L(x) + g.(y - x)`` over random triples."""
    worst = -math.inf
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        eo = random_graph_cut(n, rng)
        w = rng.integers(-5, 6, size=n)
        f = EvalOracle(n, lambda s, eo=eo, w=w: eo.raw(s) + int(sum(w[i - 1] for i in s)))
        x, y = rng.uniform(size=n), rng.uniform(size=n)
        cut = lovasz_separation(f, x)
        g = np.zeros(n) if cut is None else -cut.normal
        worst = max(worst, lovasz_value(f, x) + g @ (y - x) - lovasz_value(f, y))
    return worst


def sfm_suite(seed: int = 0, instances: int = 5, sizes=(4, 6)) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = subgradient_check(rng)
    wrong = bad_count = nonsub = 0
    total = 0
    for n in sizes:
        for _ in range(instances):
            eo = random_graph_cut(n, rng)
            nonsub += not is_submodular(eo)
            best, _ = brute_force_sfm(eo)
            r = minimize_submodular(eo)
            total += 1
            wrong += r.value != best
            c = r.transcript.counts
            bad_count += c["eoCalls"] != n * c["soCalls"]
    return [
        CheckResult("subgradient", worst <= 1e-9, f"worst violation {worst:.2e} over 200 triples"),
        CheckResult("submodular instances", nonsub == 0, f"{total - nonsub}/{total} submodular"),
        CheckResult("sfm recovery", wrong == 0, f"{total - wrong}/{total} exact"),
        CheckResult("eo accounting", bad_count == 0, f"{total - bad_count}/{total} with EO = n * SO"),
    ]


SUITES = {
    "lll": lll_suite,
    "barrier": barrier_suite,
    "cpm": cpm_suite,
    "dimred": dimred_suite,
    "sfm": sfm_suite,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed=seed)
