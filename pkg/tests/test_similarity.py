import math

import mpmath
import numpy as np
import pytest

from conftest import grid_wasserstein

from wscluster import (
    Dataset,
    DistanceMatrix,
    SimilarityMatrix,
    TransactionBatch,
    build_similarity,
    knn_sparsify,
    pairwise_distances,
)
from wscluster.similarity import read_matrix_csv, write_matrix_csv
from wscluster.errors import K0OutOfRange, NoVariation


def _dataset(amount_lists):
    return Dataset.from_batches(
        [TransactionBatch(f"e{i}", a) for i, a in enumerate(amount_lists)])


def _dmatrix(entries):
    entries = np.asarray(entries, dtype=np.float64)
    return DistanceMatrix([f"e{i}" for i in range(entries.shape[0])], entries)


class TestPairwiseDistances:
    def test_singleton(self):
        d = pairwise_distances(_dataset([[1.0, 2.0]]))
        assert d.entries.shape == (1, 1)
        assert d.entries[0, 0] == 0.0

    def test_three_entity_example(self):
        d = pairwise_distances(_dataset([[1, 3], [2], [1, 3]]))
        expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        assert np.allclose(d.entries, expected, atol=1e-12)
        ds = _dataset([[1, 3], [2], [1, 3]])
        for i in range(3):
            for j in range(3):
                oracle = grid_wasserstein(ds.ecdfs[i], ds.ecdfs[j], points=10**5)
                assert d.entries[i, j] == pytest.approx(oracle, abs=1e-4)

    def test_exact_symmetry(self):
        gen = np.random.default_rng(0)
        ds = _dataset([gen.random(gen.integers(1, 20)) for _ in range(12)])
        d = pairwise_distances(ds)
        assert np.array_equal(d.entries, d.entries.T)
        assert np.all(np.diag(d.entries) == 0.0)

    def test_thread_count_does_not_change_results(self):
        gen = np.random.default_rng(1)
        ds = _dataset([gen.random(gen.integers(1, 20)) for _ in range(15)])
        d1 = pairwise_distances(ds, threads=1)
        d4 = pairwise_distances(ds, threads=4)
        assert np.array_equal(d1.entries, d4.entries)


class TestBuildSimilarity:
    def test_zero_distance_gives_one(self):
        s = build_similarity(_dmatrix([[0, 0.5], [0.5, 0]]))
        assert s.entries[0, 0] == 1.0

    def test_distance_equal_sigma(self):
        s = build_similarity(_dmatrix([[0, 2.0], [2.0, 0]]), sigma=2.0)
        assert s.entries[0, 1] == pytest.approx(math.exp(-1), rel=1e-15)

    def test_default_sigma_scalar_values(self):
        d = _dmatrix([[0, 0, 0.5], [0, 0, 1.0], [0.5, 1.0, 0]])
        s = build_similarity(d)
        assert s.sigma == 1.0
        # cross-checked against high-precision evaluation
        with mpmath.workdps(50):
            e_half = float(mpmath.e ** mpmath.mpf("-0.5"))
            e_one = float(mpmath.e ** mpmath.mpf("-1"))
        assert s.entries[0, 2] == pytest.approx(e_half, rel=1e-14)
        assert s.entries[1, 2] == pytest.approx(e_one, rel=1e-14)
        assert s.entries[0, 2] == pytest.approx(0.6065306597126334, rel=1e-12)
        assert s.entries[1, 2] == pytest.approx(0.36787944117144233, rel=1e-12)

    def test_no_variation(self):
        with pytest.raises(NoVariation):
            build_similarity(_dmatrix(np.zeros((3, 3))))

    def test_monotone_in_distance(self):
        gen = np.random.default_rng(2)
        raw = gen.random((10, 10))
        d = _dmatrix(np.triu(raw, 1) + np.triu(raw, 1).T)
        s = build_similarity(d)
        iu = np.triu_indices(10, 1)
        order_d = np.argsort(d.entries[iu])
        order_s = np.argsort(-s.entries[iu])
        assert np.array_equal(order_d, order_s)


class TestKnnSparsify:
    def test_full_neighborhood_keeps_everything(self):
        gen = np.random.default_rng(3)
        raw = gen.random((6, 6))
        d = _dmatrix(np.triu(raw, 1) + np.triu(raw, 1).T)
        s = build_similarity(d)
        s2 = knn_sparsify(s, d, k0=5)
        assert np.array_equal(s.entries, s2.entries)
        assert s2.sparsified and s2.k0 == 5

    def test_tie_broken_by_smaller_index(self):
        d = _dmatrix([[0, 0.1, 0.9], [0.1, 0, 0.9], [0.9, 0.9, 0]])
        s = build_similarity(d)
        s2 = knn_sparsify(s, d, k0=1)
        # entity 2 ties between neighbors 0 and 1; the tie goes to index 0,
        # so (0, 2) survives while (1, 2) is dropped
        assert s2.entries[0, 2] > 0
        assert s2.entries[2, 0] > 0
        assert s2.entries[1, 2] == 0.0
        assert s2.entries[2, 1] == 0.0
        assert s2.entries[0, 1] > 0

    def test_matches_brute_force_neighbor_rule(self):
        gen = np.random.default_rng(4)
        for _ in range(10):
            n = int(gen.integers(4, 12))
            raw = np.round(gen.random((n, n)), 1)  # coarse values force ties
            entries = np.triu(raw, 1) + np.triu(raw, 1).T
            d = _dmatrix(entries)
            s = build_similarity(d, sigma=1.0)
            k0 = int(gen.integers(1, n - 1))
            result = knn_sparsify(s, d, k0)

            def neighbors(j):
                order = sorted((entries[i, j], i) for i in range(n) if i != j)
                return {i for _, i in order[:k0]}

            nbrs = [neighbors(j) for j in range(n)]
            for i in range(n):
                for j in range(n):
                    keep = i == j or i in nbrs[j] or j in nbrs[i]
                    expected = s.entries[i, j] if keep else 0.0
                    assert result.entries[i, j] == expected

    def test_idempotent(self):
        gen = np.random.default_rng(5)
        raw = gen.random((9, 9))
        d = _dmatrix(np.triu(raw, 1) + np.triu(raw, 1).T)
        s = build_similarity(d)
        once = knn_sparsify(s, d, k0=3)
        twice = knn_sparsify(once, d, k0=3)
        assert np.array_equal(once.entries, twice.entries)

    def test_sparsity_bound(self):
        gen = np.random.default_rng(6)
        n, k0 = 30, 4
        raw = gen.random((n, n))
        d = _dmatrix(np.triu(raw, 1) + np.triu(raw, 1).T)
        s2 = knn_sparsify(build_similarity(d), d, k0)
        off_diag = s2.entries.copy()
        np.fill_diagonal(off_diag, 0.0)
        assert np.count_nonzero(off_diag) <= 2 * k0 * n

    def test_k0_out_of_range(self):
        d = _dmatrix([[0, 1], [1, 0]])
        s = build_similarity(d)
        with pytest.raises(K0OutOfRange):
            knn_sparsify(s, d, 0)
        with pytest.raises(K0OutOfRange):
            knn_sparsify(s, d, 2)


def test_matrix_csv_round_trip(tmp_path):
    gen = np.random.default_rng(7)
    raw = gen.random((4, 4))
    entries = np.triu(raw, 1) + np.triu(raw, 1).T
    path = tmp_path / "m.csv"
    write_matrix_csv(path, [f"e{i}" for i in range(4)], entries)
    ids, loaded = read_matrix_csv(path)
    assert ids == [f"e{i}" for i in range(4)]
    assert np.array_equal(loaded, entries)
