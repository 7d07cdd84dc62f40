import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crrbf.band_clustering import BandClustering, KMeansConfig, band_points, cluster_bands, kmeans
from crrbf.dataset import LabeledDataset
from oracles import best_two_partition_1d


def ds_from(features, labels=None):
    X = np.asarray(features, dtype=float)
    if labels is None:
        labels = np.arange(X.shape[0]) % 2
    return LabeledDataset(X, labels, 2)


class TestBandPoints:
    def test_transposed_zscores(self):
        P = band_points(ds_from([[1, 10], [2, 20], [3, 30]]))
        assert P.shape == (2, 3)
        np.testing.assert_allclose(P[0], [-1, 0, 1])
        np.testing.assert_allclose(P[1], [-1, 0, 1])

    def test_correlated_bands_identical(self):
        rng = np.random.default_rng(0)
        x = rng.random(8)
        P = band_points(ds_from(np.column_stack([x, 3 * x + 2])))
        np.testing.assert_allclose(P[0], P[1], atol=1e-12)

    def test_constant_band_zero_row(self):
        P = band_points(ds_from([[1, 4], [2, 4], [5, 4]]))
        np.testing.assert_array_equal(P[1], 0.0)


class TestKMeans:
    def test_exact_fit(self):
        pts = np.array([[0.0], [1.0], [5.0], [9.0]])
        res = kmeans(pts, KMeansConfig(k=4, seed=3))
        assert res.inertia == 0.0
        assert sorted(res.assignments.tolist()) == [0, 1, 2, 3]

    def test_two_clusters_match_brute_force(self):
        pts = [0.0, 0.1, 10.0, 10.1]
        best_inertia, best_parts = best_two_partition_1d(pts)
        res = kmeans(np.array(pts)[:, None], KMeansConfig(k=2, seed=0))
        parts = {frozenset(p for p, a in zip(pts, res.assignments) if a == c) for c in range(2)}
        assert parts == set(best_parts)
        assert res.inertia == pytest.approx(best_inertia, abs=1e-12)
        assert res.inertia == pytest.approx(0.01, abs=1e-12)

    def test_single_cluster(self):
        rng = np.random.default_rng(1)
        pts = rng.random((12, 3))
        res = kmeans(pts, KMeansConfig(k=1))
        np.testing.assert_allclose(res.centroids[0], pts.mean(axis=0))
        assert res.inertia == pytest.approx(pts.var(axis=0).sum() * 12)

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), KMeansConfig(k=4))

    def test_deterministic(self):
        pts = np.random.default_rng(2).random((30, 4))
        a = kmeans(pts, KMeansConfig(k=4, seed=11))
        b = kmeans(pts, KMeansConfig(k=4, seed=11))
        assert np.array_equal(a.assignments, b.assignments)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(6, 25))
    def test_inertia_non_increasing_and_dense(self, seed, k, m):
        pts = np.random.default_rng(seed).normal(size=(m, 3))
        res = kmeans(pts, KMeansConfig(k=k, seed=seed))
        h = np.array(res.inertia_history)
        assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))
        assert set(res.assignments.tolist()) == set(range(k))

    def test_duplicate_points_still_non_empty(self):
        pts = np.array([[0.0], [0.0], [0.0], [1.0]])
        res = kmeans(pts, KMeansConfig(k=3, seed=0))
        assert set(res.assignments.tolist()) == {0, 1, 2}

    def test_permutation_of_points(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(20, 2))
        init = pts[[0, 7, 13]]
        base = kmeans(pts, KMeansConfig(k=3), init_centroids=init)
        perm = rng.permutation(20)
        shuffled = kmeans(pts[perm], KMeansConfig(k=3), init_centroids=init)
        as_sets = lambda a, order: {frozenset(order[a == c].tolist()) for c in range(3)}  # noqa: E731
        assert as_sets(base.assignments, np.arange(20)) == as_sets(shuffled.assignments, perm)
        assert shuffled.inertia == pytest.approx(base.inertia, rel=1e-12)


class TestClusterBands:
    def test_k_equals_d_is_singletons(self):
        X = np.random.default_rng(0).random((10, 6))
        bc = cluster_bands(ds_from(X), 6, seed=1)
        assert bc.same_partition(BandClustering(np.arange(6)))

    def test_k_one(self):
        X = np.random.default_rng(0).random((10, 6))
        assert cluster_bands(ds_from(X), 1).assignments.tolist() == [0] * 6

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            cluster_bands(ds_from(np.zeros((4, 3)) + np.arange(4)[:, None]), 4)

    def test_recovers_correlated_blocks(self):
        # two independent latent signals, each copied (plus small noise) into a block of bands
        rng = np.random.default_rng(7)
        n = 200
        s1, s2 = rng.normal(size=n), rng.normal(size=n)
        block_a = s1[:, None] + 0.05 * rng.normal(size=(n, 5))
        block_b = s2[:, None] + 0.05 * rng.normal(size=(n, 7))
        X = np.hstack([block_a, block_b])
        assert abs(np.corrcoef(s1, s2)[0, 1]) < 0.2
        bc = cluster_bands(ds_from(X), 2, seed=0)
        assert bc.same_partition(BandClustering(np.array([0] * 5 + [1] * 7)))


class TestBandClusteringType:
    def test_rejects_gaps(self):
        with pytest.raises(ValueError):
            BandClustering(np.array([0, 2, 2]))

    def test_relabeled_canonical(self):
        bc = BandClustering(np.array([2, 0, 2, 1]))
        assert bc.relabeled().assignments.tolist() == [0, 1, 0, 2]
        assert bc.cluster_count == 3
