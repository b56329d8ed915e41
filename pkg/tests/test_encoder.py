import time

import numpy as np
import pytest
from hypothesis import given, settings

from rgee.encoder import ColumnBlock, DegenerateClassError, Embedding, gee_embed, one_hot_weights
from rgee.graph import SparseGraph
from rgee.sbm import SbmParams, builtin_model, sample_sbm

from conftest import graphs_and_labels, random_graph
from oracles import dense_oracle, concentration_check, distance_gap


class TestOneHotWeights:
    def test_column_sums(self):
        W = one_hot_weights([1, 1, 2, 2]).toarray()
        np.testing.assert_array_equal(W.sum(axis=0), [1.0, 1.0])
        assert W[0, 0] == 0.5

    def test_unknown_row_is_zero(self):
        W = one_hot_weights([1, 0, 2]).toarray()
        assert not W[1].any()
        assert W[0, 0] == 1 and W[2, 1] == 1

    def test_single_class(self):
        np.testing.assert_allclose(one_hot_weights([1, 1, 1]).toarray(), np.full((3, 1), 1 / 3))

    def test_empty_class_rejected(self):
        with pytest.raises(DegenerateClassError, match=r"\[2\]"):
            one_hot_weights([1, 3, 3])


class TestGeeEmbed:
    def test_path(self, path4):
        Z = gee_embed(path4, [1, 1, 2, 2])
        np.testing.assert_array_equal(Z.values, [[0.5, 0], [0.5, 0.5], [0.5, 0.5], [0, 0.5]])
        np.testing.assert_array_equal(Z.values, dense_oracle(path4.todense(), [1, 1, 2, 2]))
        assert Z.blocks == (ColumnBlock(0, 2, "gee"),)

    def test_empty_graph(self):
        Z = gee_embed(SparseGraph.from_edges(5, [], []), [1, 2, 1, 2, 0])
        assert Z.values.shape == (5, 2) and not Z.values.any()

    def test_weighted(self):
        g = SparseGraph.from_edges(3, [0, 0], [1, 2], [2.5, 4.0])
        np.testing.assert_array_equal(gee_embed(g, [1, 2, 2]).values, [[0, 3.25], [2.5, 0], [4.0, 0]])

    def test_matches_sparse_weights(self, rng):
        g = random_graph(rng, 40, weighted=True)
        y = rng.integers(1, 4, size=40)
        np.testing.assert_allclose(gee_embed(g, y).values, (g.adj @ one_hot_weights(y)).toarray(), rtol=1e-14)

    @given(graphs_and_labels())
    @settings(max_examples=100, deadline=None)
    def test_dense_oracle_property(self, data):
        g, y = data
        np.testing.assert_array_equal(gee_embed(g, y).values, dense_oracle(g.todense(), y))

    def test_degree_corrected_subsample_oracle(self):
        p, _ = builtin_model("sim1")
        g, latent = sample_sbm(p, 5000, 8)
        Z = gee_embed(g, latent).values
        rows = np.random.default_rng(0).choice(g.n, 40, replace=False)
        A = g.adj[rows].toarray()
        W = one_hot_weights(latent).toarray()
        np.testing.assert_allclose(Z[rows], A @ W, rtol=1e-12, atol=1e-15)
        # class-k column mean of a latent-y vertex is theta_i * E[theta] * B0(y, k)
        for y in range(1, 5):
            np.testing.assert_allclose(Z[latent == y].mean(axis=0), 0.55**2 * p.B0[y - 1], atol=0.01)


class TestEmbedding:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            Embedding(np.array([[np.nan]]))

    def test_block_width_checked(self):
        with pytest.raises(ValueError):
            Embedding(np.zeros((2, 3)), (ColumnBlock(0, 2, "a"),))

    def test_concat_offsets(self):
        a = Embedding(np.zeros((2, 2)), (ColumnBlock(0, 2, "a"),))
        b = Embedding(np.ones((2, 3)), (ColumnBlock(0, 3, "b"),))
        c = Embedding.concat([a, b])
        assert c.d == 5
        assert [(x.offset, x.width, x.tag) for x in c.blocks] == [(0, 2, "a"), (2, 3, "b")]


class TestLimitBehaviour:
    def test_concentration(self):
        worst_z, worst_var = concentration_check(2000, 31)
        assert worst_z < 3
        assert worst_var < 0.2

    def test_distance_gap_shrinks(self):
        small = np.mean([distance_gap(500, s) for s in range(3)])
        large = np.mean([distance_gap(2000, s) for s in range(3)])
        assert large < 0.6 * small


def test_runtime_linear_in_edges():
    B = np.full((2, 2), 0.05)
    timings = []
    for n in (2000, 2828):
        g, y = sample_sbm(SbmParams(B, [0.5, 0.5]), n, 0)
        best = np.inf
        for _ in range(5):
            t0 = time.perf_counter()
            gee_embed(g, y)
            best = min(best, time.perf_counter() - t0)
        timings.append((g.adj.nnz, best))
    (s0, t0), (s1, t1) = timings
    assert t1 / t0 <= 3 * s1 / s0
