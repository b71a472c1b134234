import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intmin.checks import subgradient_check
from intmin.errors import MalformedInstance, MalformedOracle, OracleInconsistency
from intmin.oracles import (EvalOracle, LovaszOracle, as_oracle, brute_force_sfm,
                            indicator, instance_from_json, instance_to_json, is_submodular,
                            lovasz_separation, lovasz_value, make_graph_cut_oracle,
                            make_table_oracle, normalize_response, perturbed, quadratic_separation,
                            random_graph_cut, support)


def cut2():
    return make_table_oracle(2, [0, 1, 1, 0])


def modular(weights):
    return EvalOracle(len(weights), lambda s: sum(weights[i - 1] for i in s))


def test_lovasz_cut_example():
    eo = cut2()
    cut = lovasz_separation(eo, [0.7, 0.3])
    np.testing.assert_array_equal(cut.normal, [-1, 1])
    assert cut.offset is None
    assert eo.call_count == 2


def test_lovasz_box_facet():
    eo = cut2()
    cut = lovasz_separation(eo, [1.5, 0.2])
    np.testing.assert_array_equal(cut.normal, [-1, 0])
    assert cut.offset == -1.0
    cut = lovasz_separation(eo, [0.5, -0.25])
    np.testing.assert_array_equal(cut.normal, [0, 1])
    assert cut.offset == 0.0
    assert eo.call_count == 0


def test_lovasz_roundoff_is_clipped():
    eo = cut2()
    cut = lovasz_separation(eo, [1 + 1e-12, 0.3])
    assert cut.offset is None and eo.call_count == 2


def test_lovasz_modular():
    eo = modular([1, 1])
    rng = np.random.default_rng(0)
    for x in rng.uniform(0.01, 0.99, size=(20, 2)):
        np.testing.assert_array_equal(lovasz_separation(eo, x).normal, [-1, -1])


def test_lovasz_yes_when_flat():
    eo = EvalOracle(3, lambda s: 5)
    assert lovasz_separation(eo, [0.2, 0.9, 0.5]) is None


def test_lovasz_tie_breaking():
    eo = make_table_oracle(2, [0, 3, 5, 4])
    # tie: element 1 comes first, g = (f({1}) - f(), f({1,2}) - f({1}))
    np.testing.assert_array_equal(lovasz_separation(eo, [0.5, 0.5]).normal, [-3, -1])


def test_lovasz_value_at_vertices():
    eo = make_table_oracle(3, list(range(8)))
    for mask in range(8):
        s = {i + 1 for i in range(3) if mask >> i & 1}
        assert lovasz_value(eo, indicator(s, 3)) == mask


def test_eo_accounting():
    calls = []
    eo = EvalOracle(4, lambda s: calls.append(s) or len(s))
    lovasz_separation(eo, [0.1, 0.2, 0.3, 0.4])
    lovasz_separation(eo, [0.4, 0.3, 0.2, 0.1])
    assert eo.call_count == 8
    # f(empty) evaluated once, on first use
    assert sum(1 for s in calls if not s) == 1


def test_eo_rejects_non_integer():
    eo = EvalOracle(1, lambda s: 0.5)
    with pytest.raises(MalformedOracle):
        eo({1})
    assert EvalOracle(1, lambda s: 2.0)({1}) == 2


def test_perturbed_counts_base_calls():
    base = cut2()
    p = perturbed(base)
    assert p({1}) == 3 * 1 + 1
    assert p({1, 2}) == 2
    assert base.call_count == 2


def test_brute_force_examples():
    assert brute_force_sfm(cut2()) == (0, [frozenset(), frozenset({1, 2})])
    assert brute_force_sfm(modular([1, -1])) == (-1, [frozenset({2})])
    best, sets = brute_force_sfm(EvalOracle(3, lambda s: 5))
    assert best == 5 and len(sets) == 8
    with pytest.raises(ValueError):
        brute_force_sfm(EvalOracle(21, lambda s: 0))


def test_graph_cut_examples():
    assert make_graph_cut_oracle(2, [(1, 2, 1)])({1}) == 1
    tri = make_graph_cut_oracle(3, [(1, 2, 1), (2, 3, 1), (1, 3, 1)])
    assert tri({1}) == 2 and tri({1, 2}) == 2 and tri(set()) == 0
    with pytest.raises(MalformedInstance):
        make_graph_cut_oracle(2, [(1, 2, -1)])
    with pytest.raises(MalformedInstance):
        make_graph_cut_oracle(2, [(1, 3, 1)])


def test_table_oracle_order():
    eo = make_table_oracle(2, [10, 11, 12, 13])
    assert [eo.raw(s) for s in (set(), {1}, {2}, {1, 2})] == [10, 11, 12, 13]
    with pytest.raises(MalformedInstance):
        make_table_oracle(2, [1, 2, 3])


def test_quadratic_examples():
    q = quadratic_separation([3, -2])
    np.testing.assert_array_equal(q.query([0, 0]).normal, [3, -2])
    assert q.query([3, -2]) is None
    np.testing.assert_array_equal(q.query([3, -1.5]).normal, [0, -0.5])
    assert q.value([0, 0]) == 13


def test_subgradient_validity():
    assert subgradient_check(np.random.default_rng(7), trials=200) <= 1e-9


@pytest.mark.parametrize("n", [1, 2, 4, 6])
def test_random_cuts_are_submodular(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        assert is_submodular(random_graph_cut(n, rng))


def test_submodularity_checker_rejects():
    # supermodular: f(S) = |S|^2
    eo = EvalOracle(3, lambda s: len(s) ** 2)
    assert not is_submodular(eo)
    assert not is_submodular(eo, samples=200, rng=1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_lovasz_matches_extension_definition(n, seed):
    # f_L(x) = sum over thresholds of f({i : x_i >= t}) integrated over t in [0, 1]
    rng = np.random.default_rng(seed)
    eo = random_graph_cut(n, rng)
    x = rng.uniform(size=n)
    ts = np.concatenate([[0.0], np.sort(x), [1.0]])
    ref = 0.0
    for lo, hi in zip(ts, ts[1:]):
        level = {i + 1 for i in range(n) if x[i] >= hi}
        ref += (hi - lo) * eo.raw(level)
    assert lovasz_value(eo, x) == pytest.approx(ref, abs=1e-9)


def test_support_and_indicator():
    assert support([1, 0, 1]) == frozenset({1, 3})
    np.testing.assert_array_equal(indicator({2}, 3), [0, 1, 0])


def test_normalize_response():
    assert normalize_response(None, 2) is None
    h = normalize_response([1, 2], 2)
    assert h.offset is None
    h = normalize_response((np.array([1.0, 0.0]), 0.5), 2)
    assert h.offset == 0.5
    for bad in ([0, 0], [1, np.nan], [1, 2, 3]):
        with pytest.raises(OracleInconsistency):
            normalize_response(bad, 2)


def test_as_oracle():
    o = as_oracle(lambda x: None)
    assert o.query([0]) is None and o.value([0]) is None
    lo = as_oracle(LovaszOracle(cut2()))
    assert lo.value([1, 1]) == 0
    with pytest.raises(TypeError):
        as_oracle(3)


@pytest.mark.parametrize("data", [
    {"type": "graph_cut", "n": 3, "edges": [[1, 2, 4], [2, 3, 1]]},
    {"type": "table", "n": 2, "values": [0, 1, 1, 0]},
    {"type": "quadratic", "target": [3, -2]},
])
def test_instance_round_trip(data):
    inst = instance_from_json(data)
    assert instance_to_json(inst) == data


@pytest.mark.parametrize("data", [
    None, [], {"n": 2}, {"type": "graph_cut", "n": 2},
    {"type": "graph_cut", "n": 2, "edges": [[1, 2]]},
    {"type": "table", "n": 2, "values": [0, 1, 1]},
    {"type": "table", "n": 1, "values": [0, 0.5]},
    {"type": "quadratic", "target": [1.5]}, {"type": "quadratic", "target": []},
    {"type": "lp"},
])
def test_malformed_instances(data):
    with pytest.raises(MalformedInstance):
        instance_from_json(data)
