import numpy as np
import pytest
from sklearn.base import clone

from deepclust.cluster import (
    FeatureKMeans,
    FeatureMatrix,
    _assign_with_repair,
    kmeans,
    l2_normalize,
    pseudo_labels,
)


def brute_force_inertia(x, k, chunk=200_000):
    """Exhaustive minimum inertia over every assignment of n points to k clusters.

    Uses inertia(A) = sum_i ||x_i||^2 - sum_c ||sum_{i in c} x_i||^2 / n_c,
    which is exact because the optimal centroid of a fixed assignment is the
    cluster mean.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    total = k**n
    powers = k ** np.arange(n, dtype=np.int64)
    sq = float((x * x).sum())
    best = np.inf
    for start in range(0, total, chunk):
        ar = np.arange(start, min(start + chunk, total), dtype=np.int64)
        codes = (ar[:, None] // powers) % k
        reduction = np.zeros(ar.size)
        for c in range(k):
            mask = (codes == c).astype(np.float64)
            counts = mask.sum(axis=1)
            sums = mask @ x
            with np.errstate(divide="ignore", invalid="ignore"):
                contrib = (sums * sums).sum(axis=1) / counts
            reduction += np.where(counts > 0, contrib, 0.0)
        best = min(best, float((sq - reduction).min()))
    return best


def _norm_fm(x):
    return l2_normalize(np.asarray(x, dtype=np.float64))


class TestL2Normalize:
    def test_three_four_five(self):
        fm = _norm_fm([[3.0, 4.0]])
        np.testing.assert_allclose(fm.data, [[0.6, 0.8]], atol=1e-15)
        assert fm.normalized

    def test_unit_rows_unchanged(self):
        rows = np.array([[1.0, 0.0], [0.6, 0.8]])
        fm = _norm_fm(rows)
        np.testing.assert_allclose(fm.data, rows, atol=1e-12)
        again = l2_normalize(fm)
        np.testing.assert_allclose(again.data, rows, atol=1e-12)

    def test_row_norms_match_loop_oracle(self):
        rng = np.random.default_rng(0)
        fm = _norm_fm(rng.normal(size=(10, 5)))
        for i in range(10):
            norm = 0.0
            for j in range(5):
                norm += fm.data[i, j] ** 2
            assert abs(np.sqrt(norm) - 1.0) < 1e-6

    def test_zero_rows_flagged_and_kept_zero(self):
        fm = _norm_fm([[0.0, 0.0], [1.0, 1.0]])
        assert list(fm.zero_rows) == [0]
        assert not fm.data[0].any()

    def test_non_finite_names_row(self):
        bad = np.ones((3, 2))
        bad[1, 0] = np.inf
        with pytest.raises(ValueError, match="row 1"):
            l2_normalize(bad)


class TestKmeans:
    def test_k_equals_n_gives_zero_inertia(self):
        rng = np.random.default_rng(1)
        fm = _norm_fm(rng.normal(size=(6, 3)))
        result = kmeans(fm, 6, seed=0)
        assert result.inertia == pytest.approx(0.0, abs=1e-12)
        assert sorted(result.assignments) == list(range(6))

    def test_well_separated_pairs_match_brute_force(self):
        pts = np.array([[1.0, 0.02], [1.0, -0.02], [0.02, 1.0], [-0.02, 1.0]])
        fm = _norm_fm(pts)
        result = kmeans(fm, 2, seed=3, restarts=10)
        assert result.assignments[0] == result.assignments[1]
        assert result.assignments[2] == result.assignments[3]
        assert result.assignments[0] != result.assignments[2]
        assert result.inertia == pytest.approx(brute_force_inertia(fm.data, 2), abs=1e-9)

    def test_duplicated_dataset_matches_duplicated_brute_force(self):
        rng = np.random.default_rng(4)
        base = rng.normal(size=(5, 2))
        doubled = np.vstack([base, base])
        fm = _norm_fm(doubled)
        result = kmeans(fm, 2, seed=0, restarts=10)
        optimum = brute_force_inertia(fm.data, 2)
        assert result.inertia == pytest.approx(optimum, abs=1e-9)
        # per-point inertia equals the deduplicated problem's optimal per-point inertia
        dedup = _norm_fm(base)
        assert result.inertia / 10 == pytest.approx(brute_force_inertia(dedup.data, 2) / 5, abs=1e-9)

    def test_restart_optimality_rate_on_small_instances(self):
        # 2-D unit rows, matching the feature geometry kmeans sees in the engine
        rng = np.random.default_rng(7)
        hits = 0
        for _ in range(20):
            n = int(rng.integers(6, 13))
            k = int(rng.integers(2, 4))
            fm = _norm_fm(rng.normal(size=(n, 2)))
            result = kmeans(fm, k, seed=int(rng.integers(2**31)), restarts=10)
            optimum = brute_force_inertia(fm.data, k)
            assert result.inertia >= optimum - 1e-9  # can never beat exhaustive search
            if result.inertia <= optimum + 1e-9:
                hits += 1
        assert hits >= 19

    def test_final_assignments_nearest_centroid_consistent(self):
        rng = np.random.default_rng(9)
        fm = _norm_fm(rng.normal(size=(40, 4)))
        result = kmeans(fm, 5, seed=2)
        d = ((fm.data[:, None, :] - result.centroids[None]) ** 2).sum(axis=2)
        np.testing.assert_array_equal(result.assignments, d.argmin(axis=1))
        assert (np.bincount(result.assignments, minlength=5) >= 1).all()

    def test_seeded_determinism(self):
        rng = np.random.default_rng(10)
        fm = _norm_fm(rng.normal(size=(30, 4)))
        a = kmeans(fm, 4, seed=123, max_iters=15)
        b = kmeans(fm, 4, seed=123, max_iters=15)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia
        assert a.iterations_run == b.iterations_run

    def test_row_permutation_permutes_assignments(self):
        # no positional bias: on data with a unique optimal partition, a row
        # permutation changes nothing but the cluster labels
        rng = np.random.default_rng(11)
        groups = [rng.normal(loc=center, scale=0.05, size=(8, 2)) for center in ([3, 0], [0, 3], [-3, -3])]
        fm = _norm_fm(np.vstack(groups))
        perm = rng.permutation(24)
        base = kmeans(fm, 3, seed=5, restarts=10)
        permuted = kmeans(FeatureMatrix(fm.data[perm], normalized=True), 3, seed=5, restarts=10)
        # contingency between consistently permuted base labels and the new
        # labels must be a permutation matrix
        table = np.zeros((3, 3), dtype=int)
        for i in range(24):
            table[base.assignments[perm][i], permuted.assignments[i]] += 1
        assert (np.count_nonzero(table, axis=1) == 1).all()
        assert (np.count_nonzero(table, axis=0) == 1).all()
        assert permuted.inertia == pytest.approx(base.inertia, abs=1e-9)

    def test_empty_cluster_repair(self):
        # second centroid starts far from every point, so its cluster is empty
        x = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [1.0, 1.0]])
        centroids = np.array([[0.0, 0.0], [50.0, 50.0]])
        labels, _, repairs = _assign_with_repair(x, centroids)
        assert repairs == 1
        assert set(labels) == {0, 1}
        np.testing.assert_allclose(centroids[1], [1.0, 1.0])  # farthest point adopted

    def test_validation_errors(self):
        fm = _norm_fm(np.eye(3))
        with pytest.raises(ValueError, match="exceeds"):
            kmeans(fm, 4, seed=0)
        with pytest.raises(ValueError, match="k must be"):
            kmeans(fm, 0, seed=0)
        with pytest.raises(ValueError, match="normalized"):
            kmeans(np.eye(3), 2, seed=0)
        with pytest.raises(ValueError, match="max_iters"):
            kmeans(fm, 2, seed=0, max_iters=0)


class TestPseudoLabels:
    def test_single_cluster_all_zero(self):
        fm = _norm_fm(np.random.default_rng(0).normal(size=(5, 2)))
        result = kmeans(fm, 1, seed=0)
        assert list(pseudo_labels(result)) == [0] * 5

    def test_projection_roundtrip(self):
        fm = _norm_fm(np.random.default_rng(1).normal(size=(12, 3)))
        result = kmeans(fm, 3, seed=1)
        np.testing.assert_array_equal(pseudo_labels(result), result.assignments)

    def test_histogram_sums_to_n(self):
        fm = _norm_fm(np.random.default_rng(2).normal(size=(50, 3)))
        labels = pseudo_labels(kmeans(fm, 7, seed=2))
        count = 0
        for c in range(7):
            for lab in labels:
                if lab == c:
                    count += 1
        assert count == 50


class TestFeatureKMeans:
    def test_fit_predict_roundtrip(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(40, 6))
        est = FeatureKMeans(n_clusters=4, seed=9).fit(x)
        np.testing.assert_array_equal(est.predict(x), est.labels_)
        assert est.cluster_centers_.shape == (4, 6)
        assert est.inertia_ >= 0

    def test_sklearn_clone_and_params(self):
        est = FeatureKMeans(n_clusters=5, seed=3, restarts=2)
        params = est.get_params()
        assert params["n_clusters"] == 5 and params["restarts"] == 2
        twin = clone(est)
        assert twin.get_params() == params
