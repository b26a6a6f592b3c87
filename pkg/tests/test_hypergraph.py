import numpy as np
import pytest

from asyncopt.hypergraph import (
    conflict_stats,
    conflict_stats_bruteforce,
    coordinate_weights,
    intersection_probability_bound,
    tau_bound_comparison,
)


def random_hypergraph(rng, n, d, max_size):
    edges = []
    for _ in range(n):
        k = int(rng.integers(1, max_size + 1))
        edges.append(rng.choice(d, size=min(k, d), replace=False))
    return edges


def test_matches_bruteforce_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(2, 60))
        d = int(rng.integers(3, 40))
        edges = random_hypergraph(rng, n, d, 5)
        fast = conflict_stats(edges, d)
        slow = conflict_stats_bruteforce(edges, d)
        assert fast.degrees.tolist() == slow.degrees.tolist()
        assert fast.avg_conflict_degree == slow.avg_conflict_degree
        assert fast.max_conflict_degree == slow.max_conflict_degree
        assert fast.max_left_degree == slow.max_left_degree
        assert fast.max_right_degree == slow.max_right_degree


def test_disjoint_edges_have_zero_degree():
    edges = [np.array([0]), np.array([1]), np.array([2, 3])]
    st = conflict_stats(edges, 4)
    assert st.avg_conflict_degree == 0.0
    assert st.max_conflict_degree == 0
    this_tau, _ = tau_bound_comparison(st, 3)
    assert this_tau == np.inf


def test_identical_edges_fully_conflict():
    edges = [np.array([0, 1])] * 5
    st = conflict_stats(edges, 2)
    assert st.max_conflict_degree == 4
    assert st.avg_conflict_degree == 4.0
    assert intersection_probability_bound(st, 5) == 1.0


def test_coordinate_weights_counting_identity():
    rng = np.random.default_rng(3)
    edges = random_hypergraph(rng, 40, 15, 4)
    w = coordinate_weights(edges, 15)
    counts = np.zeros(15, dtype=int)
    for e in edges:
        counts[e] += 1
    assert w.counts.tolist() == counts.tolist()
    np.testing.assert_allclose(w.p, counts / 40)
    covered = counts > 0
    np.testing.assert_allclose(w.d_inv[covered] * w.p[covered], 1.0)
    assert np.all(w.d_inv[~covered] == 0.0)
    assert w.all_covered == bool(covered.all())


def test_uncovered_coordinates_flagged():
    w = coordinate_weights([np.array([0, 2])], 4)
    assert not w.all_covered
    assert w.uncovered_indices.tolist() == [1, 3]


def test_bound_is_capped_at_one():
    edges = [np.array([0])] * 3
    st = conflict_stats(edges, 1)
    assert intersection_probability_bound(st, 3) == 1.0


def test_rejects_out_of_range_coordinate():
    with pytest.raises(ValueError):
        conflict_stats([np.array([5])], 3)
    with pytest.raises(ValueError):
        conflict_stats([], 3)
