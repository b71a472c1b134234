"""Minimize a submodular set function with only an evaluation oracle."""

import numpy as np

from intmin import EvalOracle, brute_force_sfm, lovasz_separation, make_graph_cut_oracle, minimize_submodular

# a path 1 - 2 - 3 - 4 with a pull on the ends: f(S) = cut(S) - 4 [1 in S] - 3 [4 in S] + |S|
cut = make_graph_cut_oracle(4, [(1, 2, 2), (2, 3, 5), (3, 4, 1)])
f = EvalOracle(4, lambda s: cut.raw(s) - 4 * (1 in s) - 3 * (4 in s) + len(s))

# the greedy subgradient of the Lovasz extension costs n evaluations
h = lovasz_separation(f, np.array([0.9, 0.2, 0.6, 0.4]))
print("subgradient cut normal:", h.normal, "EO calls so far:", f.call_count)

res = minimize_submodular(f)
best, sets = brute_force_sfm(f)
print("solver:", sorted(res.minimizer), "value", res.value)
print("brute force:", best, [sorted(s) for s in sets])

c = res.transcript.counts
print(f"SO calls {c['soCalls']}, EO calls {c['eoCalls']} (= n * SO: {c['eoCalls'] == 4 * c['soCalls']})")


# ties: the plain cut on two nodes has two minimizers; the perturbation returns the smaller one
two = make_graph_cut_oracle(2, [(1, 2, 1)])
print("cut2 minimizer:", sorted(minimize_submodular(two).minimizer), brute_force_sfm(two))
