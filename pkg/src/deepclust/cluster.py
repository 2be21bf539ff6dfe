"""K-means over unit-normalized feature rows.

Lloyd iterations from k-means++ seeding, squared Euclidean distance,
deterministic under a seed. Clusters that fall empty are repaired by
stealing the point farthest from its centroid in the largest cluster, so
every returned cluster has at least one member.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted


@dataclass
class FeatureMatrix:
    """N x D feature rows plus the normalization bookkeeping kmeans needs."""

    data: np.ndarray
    normalized: bool = False
    zero_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclass
class ClusteringResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations_run: int
    empty_repairs: int


def l2_normalize(features):
    """Divide each row by its Euclidean norm; all-zero rows stay zero and are flagged."""
    data = features.data if isinstance(features, FeatureMatrix) else np.asarray(features)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {data.shape}")
    bad = np.where(~np.isfinite(data).all(axis=1))[0]
    if bad.size:
        raise ValueError(f"non-finite feature values in row {bad[0]}")
    norms = np.linalg.norm(data, axis=1)
    zero_rows = np.where(norms == 0.0)[0]
    safe = np.where(norms == 0.0, 1.0, norms)
    return FeatureMatrix(data / safe[:, None], normalized=True, zero_rows=zero_rows)


def _sq_dists(x, centroids):
    # ||x - c||^2 expanded; clamp tiny negatives from cancellation
    d = (x * x).sum(axis=1)[:, None] - 2.0 * (x @ centroids.T) + (centroids * centroids).sum(axis=1)
    np.maximum(d, 0.0, out=d)
    return d


def _kmeanspp(x, k, rng):
    """Greedy k-means++: D^2-sampled candidates, keep the potential minimizer."""
    n = x.shape[0]
    trials = 2 + int(np.log(k))
    centroids = np.empty((k, x.shape[1]), dtype=x.dtype)
    centroids[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centroids[:1]).ravel()
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            candidates = np.array([rng.integers(n)])  # remaining points coincide with centroids
        else:
            candidates = rng.choice(n, size=trials, p=closest / total)
        cand_dists = _sq_dists(x, x[candidates])
        potentials = np.minimum(closest[:, None], cand_dists).sum(axis=0)
        best = int(potentials.argmin())
        centroids[i] = x[candidates[best]]
        closest = np.minimum(closest, cand_dists[:, best])
    return centroids


def _assign_with_repair(x, centroids):
    """Nearest-centroid labels (ties to lowest index), repairing empty clusters."""
    k = centroids.shape[0]
    repairs = 0
    for _ in range(2 * k + 1):
        d = _sq_dists(x, centroids)
        labels = d.argmin(axis=1)
        sizes = np.bincount(labels, minlength=k)
        empties = np.where(sizes == 0)[0]
        if empties.size == 0:
            return labels, d, repairs
        taken = set()
        for e in empties:
            donor = int(sizes.argmax())
            members = np.where(labels == donor)[0]
            members = np.array([m for m in members if m not in taken])
            far = members[d[members, donor].argmax()]
            centroids[e] = x[far]
            taken.add(int(far))
            sizes[donor] -= 1
            sizes[e] += 1
            repairs += 1
    raise RuntimeError("empty-cluster repair failed to converge")


def kmeans(features, k, seed=0, max_iters=20, restarts=1):
    """Lloyd's algorithm on a normalized FeatureMatrix; best of ``restarts`` runs."""
    if not isinstance(features, FeatureMatrix) or not features.normalized:
        raise ValueError("kmeans expects an l2-normalized FeatureMatrix")
    x = np.ascontiguousarray(features.data, dtype=np.float64)
    n = x.shape[0]
    if k == 0:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points n={n}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    best = None
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6B6D, r]))
        result = _lloyd(x, k, rng, max_iters)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def _lloyd(x, k, rng, max_iters):
    centroids = _kmeanspp(x, k, rng)
    prev_labels = None
    prev_inertia = np.inf
    repairs = 0
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        labels, d, rep = _assign_with_repair(x, centroids)
        repairs += rep
        inertia = float(d[np.arange(x.shape[0]), labels].sum())
        if inertia > prev_inertia + 1e-9:
            raise AssertionError("inertia increased across Lloyd iterations")
        prev_inertia = inertia
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        prev_labels = labels
        for c in range(k):
            centroids[c] = x[labels == c].mean(axis=0)
    labels, d, rep = _assign_with_repair(x, centroids)
    repairs += rep
    inertia = float(d[np.arange(x.shape[0]), labels].sum())
    return ClusteringResult(
        centroids=centroids,
        assignments=labels.astype(np.int64),
        inertia=inertia,
        iterations_run=iterations,
        empty_repairs=repairs,
    )


def pseudo_labels(result):
    """Cluster assignments as the label vector used for classifier training."""
    return result.assignments


class FeatureKMeans(BaseEstimator, ClusterMixin):
    """Estimator wrapper so the clustering stage composes with sklearn pipelines.

    Parameters
    ----------
    n_clusters : int
        Number of clusters k.
    seed : int
        Seeding for k-means++ and restarts; identical seeds give
        bit-identical results.
    max_iters : int
        Lloyd iteration cap per restart.
    restarts : int
        Independent seedings; the lowest-inertia run wins.
    normalize : bool
        Apply row-wise l2 normalization before clustering.
    """

    def __init__(self, n_clusters=8, seed=0, max_iters=20, restarts=1, normalize=True):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iters = max_iters
        self.restarts = restarts
        self.normalize = normalize

    def _prepare(self, X):
        X = np.asarray(X, dtype=np.float64)
        if self.normalize:
            return l2_normalize(X)
        return FeatureMatrix(X, normalized=True)

    def fit(self, X, y=None):
        fm = self._prepare(X)
        result = kmeans(fm, self.n_clusters, seed=self.seed, max_iters=self.max_iters, restarts=self.restarts)
        self.cluster_centers_ = result.centroids
        self.labels_ = result.assignments
        self.inertia_ = result.inertia
        self.n_iter_ = result.iterations_run
        self.n_features_in_ = fm.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        fm = self._prepare(X)
        return _sq_dists(fm.data, self.cluster_centers_).argmin(axis=1).astype(np.int64)
