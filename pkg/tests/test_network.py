import numpy as np
import pytest

from momab.network import (
    BaseGraph,
    RoundGraph,
    build_weight_matrix,
    estimate_spectral_gap,
    gossip_mix,
    sample_round_graph,
)


def graph_from_edges(n, edges):
    adj = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        adj[u, v] = adj[v, u] = True
    return RoundGraph(adjacency=adj)


class TestBaseGraph:
    def test_complete_edge_count(self):
        assert len(BaseGraph.complete(5).edges) == 10
        assert len(BaseGraph.complete(1).edges) == 0

    def test_edges_canonicalized(self):
        g = BaseGraph(n_agents=3, edges=((2, 0), (1, 0)))
        assert g.edges == ((0, 1), (0, 2))

    def test_rejects_disconnected(self):
        with pytest.raises(ValueError, match="connected"):
            BaseGraph(n_agents=4, edges=((0, 1), (2, 3)))

    def test_rejects_self_loop_and_duplicates(self):
        with pytest.raises(ValueError, match="self loop"):
            BaseGraph(n_agents=2, edges=((0, 0), (0, 1)))
        with pytest.raises(ValueError, match="duplicate"):
            BaseGraph(n_agents=2, edges=((0, 1), (1, 0)))

    def test_edge_array_shape(self):
        assert BaseGraph.complete(1).edge_array().shape == (0, 2)
        assert BaseGraph.complete(4).edge_array().shape == (6, 2)


class TestRoundGraph:
    def test_rejects_asymmetric(self):
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = True
        with pytest.raises(ValueError, match="symmetric"):
            RoundGraph(adjacency=adj)

    def test_rejects_diagonal(self):
        adj = np.eye(3, dtype=bool)
        with pytest.raises(ValueError, match="diagonal"):
            RoundGraph(adjacency=adj)

    def test_neighbors(self):
        g = graph_from_edges(4, [(0, 2), (0, 3)])
        np.testing.assert_array_equal(g.neighbors(0), [2, 3])
        np.testing.assert_array_equal(g.neighbors(1), [])


class TestSampling:
    def test_probability_one_keeps_every_edge(self):
        base = BaseGraph.complete(6)
        g = sample_round_graph(base, 1.0, np.random.default_rng(0))
        assert g.adjacency.sum() == 2 * len(base.edges)

    def test_same_stream_same_graph(self):
        base = BaseGraph.complete(5)
        a = sample_round_graph(base, 0.4, np.random.default_rng(3))
        b = sample_round_graph(base, 0.4, np.random.default_rng(3))
        np.testing.assert_array_equal(a.adjacency, b.adjacency)

    def test_respects_base_graph(self):
        base = BaseGraph(n_agents=4, edges=((0, 1), (1, 2), (2, 3)))
        rng = np.random.default_rng(1)
        for _ in range(50):
            g = sample_round_graph(base, 0.7, rng)
            assert not g.adjacency[0, 2] and not g.adjacency[0, 3]

    def test_edge_frequency(self):
        base = BaseGraph.complete(2)
        rng = np.random.default_rng(2)
        hits = sum(
            sample_round_graph(base, 0.3, rng).adjacency[0, 1] for _ in range(5000)
        )
        assert abs(hits / 5000 - 0.3) < 0.02


class TestWeightMatrix:
    def test_single_edge_hand_example(self):
        w = build_weight_matrix(graph_from_edges(3, [(0, 1)])).entries
        expected = np.array(
            [
                [2 / 3, 1 / 3, 0.0],
                [1 / 3, 2 / 3, 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        np.testing.assert_allclose(w, expected, atol=1e-15)

    def test_full_graph_hand_example(self):
        w = build_weight_matrix(graph_from_edges(3, [(0, 1), (0, 2), (1, 2)])).entries
        np.testing.assert_allclose(w, np.full((3, 3), 1 / 3), atol=1e-15)

    def test_empty_graph_is_identity(self):
        w = build_weight_matrix(graph_from_edges(4, [])).entries
        np.testing.assert_array_equal(w, np.eye(4))

    def test_doubly_stochastic_and_symmetric(self):
        base = BaseGraph.complete(7)
        rng = np.random.default_rng(5)
        for _ in range(300):
            w = build_weight_matrix(sample_round_graph(base, 0.5, rng)).entries
            np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-12)
            np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_allclose(w, w.T, atol=1e-12)
            assert np.min(w) >= 0.0


class TestGossipMix:
    def test_hand_example(self):
        weights = build_weight_matrix(graph_from_edges(2, [(0, 1)]))
        values = np.array([[2.0], [4.0]])
        inc = np.array([[0.5], [0.0]])
        out = gossip_mix(weights, values, inc)
        np.testing.assert_allclose(out, [[3.5], [3.0]])

    def test_preserves_network_average(self):
        rng = np.random.default_rng(8)
        base = BaseGraph.complete(5)
        values = rng.normal(size=(5, 3, 2))
        for _ in range(20):
            weights = build_weight_matrix(sample_round_graph(base, 0.5, rng))
            inc = rng.normal(size=(5, 3, 2))
            mixed = gossip_mix(weights, values, inc)
            np.testing.assert_allclose(
                mixed.mean(axis=0), values.mean(axis=0) + inc.mean(axis=0), atol=1e-12
            )
            values = mixed

    def test_identity_on_empty_graph(self):
        weights = build_weight_matrix(graph_from_edges(3, []))
        values = np.arange(6.0).reshape(3, 2)
        out = gossip_mix(weights, values, np.zeros((3, 2)))
        np.testing.assert_array_equal(out, values)

    def test_shape_validation(self):
        weights = build_weight_matrix(graph_from_edges(2, [(0, 1)]))
        with pytest.raises(ValueError, match="same shape"):
            gossip_mix(weights, np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ValueError, match="number of agents"):
            gossip_mix(weights, np.zeros((3, 2)), np.zeros((3, 2)))


class TestSpectralGap:
    # Exact enumeration over the 8 round graphs of the complete 3-node base:
    # rho(p=0.5) = 5/12 and rho(p=0.8) = 11/75.
    def test_matches_exact_enumeration_p_half(self):
        est = estimate_spectral_gap(
            BaseGraph.complete(3), 0.5, 40_000, np.random.default_rng(0)
        )
        assert abs(est - 5 / 12) < 0.02

    def test_matches_exact_enumeration_p_point_eight(self):
        est = estimate_spectral_gap(
            BaseGraph.complete(3), 0.8, 40_000, np.random.default_rng(1)
        )
        assert abs(est - 11 / 75) < 0.02

    def test_always_connected_graph_mixes_perfectly(self):
        est = estimate_spectral_gap(
            BaseGraph.complete(4), 1.0, 10, np.random.default_rng(2)
        )
        assert est < 1e-10

    def test_larger_link_prob_mixes_faster(self):
        base = BaseGraph.complete(5)
        slow = estimate_spectral_gap(base, 0.2, 20_000, np.random.default_rng(3))
        fast = estimate_spectral_gap(base, 0.9, 20_000, np.random.default_rng(4))
        assert fast < slow
