"""Recover a hidden integer point from a separation oracle, and watch the run."""

import numpy as np

from intmin import SolverConfig, minimize, quadratic_separation

# the oracle for f(x) = |x - target|^2 answers "minimizer" only at the target,
# otherwise it returns the half-space {y : (target - x).(y - x) >= 0}
target = np.array([37, -12, 5, 88])
oracle = quadratic_separation(target)
print("first cut at the origin:", oracle.query(np.zeros(4)).normal)


def watch(kind, state, **info):
    # only print the interesting events
    if kind == "reduce":
        print(f"  reduce: now in dimension {state.d}, hyperplane offsets {state.sub.offsets}")
    elif kind == "block":
        print(f"  block done, {state.K.m} constraints")


x, tr = minimize(oracle, 4, SolverConfig(R=128), callback=watch)
print("found:", x, "exact:", np.array_equal(x, target))
print("counts:", tr.counts)

# the potential log(vol K) + log det(lattice) drops every time the dimension shrinks
for p in tr.potentials:
    print(f"  {p['phase']:>8}  dim {p['dim']}  potential {p['phi']:8.3f}  (log vol {p['logVolume']:.3f}, log det {p['logDet']:.3f})")


# oracle calls grow roughly like n^2 on this family
for n in range(2, 8):
    rng = np.random.default_rng(n)
    t = rng.integers(-16, 17, size=n)
    _, tr = minimize(quadratic_separation(t), n, SolverConfig(R=16))
    print(f"n = {n}: {tr.counts['soCalls']:4d} SO calls, {tr.counts['soCalls'] / n**2:.1f} per n^2")
