"""Scikit-learn style front end for the alternating deep-clustering engine."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validate import check_class_labels, check_images
from .cluster import _sq_dists, l2_normalize
from .data.augment import AugmentConfig, zscore
from .data.generate import ImageRecord
from .engine import RunConfig, RunState, epoch_step
from .nn.network import Network
from .nn.optim import SgdConfig


class DeepImageClusterer(BaseEstimator, ClusterMixin):
    """Cluster grayscale images by alternating K-means pseudo-labeling with
    training of a small convolutional network on those pseudo-labels.

    Parameters
    ----------
    n_clusters : int or None
        Cluster count k; None derives ``oversegmentation * classes_hint``.
    classes_hint : int
        Estimated number of semantic classes (used only to derive k).
    oversegmentation : int
        Clusters per estimated class; over-segmenting improves purity.
    epochs : int
        Number of cluster/train alternations; no early stopping, the last
        model is kept.
    batch_size : int
        Minibatch size for the SGD pass (also the forward chunk size).
    learning_rate, momentum, weight_decay : float
        SGD settings applied to every parameter.
    architecture : str
        Network preset, ``"mini"`` or ``"vgg16bn"``.
    rotation_degrees, scale_range, aspect_range, view_size :
        Augmentation applied for both training and clustering views.
    kmeans_max_iters, kmeans_restarts : int
        Per-epoch Lloyd iteration cap and restart count.
    seed : int
        Master seed; identical seeds give bit-identical runs.
    verbose : bool
        Print one line per epoch.

    Attributes
    ----------
    labels_ : (n_images,) final cluster assignments.
    cluster_centers_ : (k, D) final centroids in normalized feature space.
    inertia_ : final within-cluster sum of squared distances.
    metrics_ : list of per-epoch EpochMetrics rows.
    network_ : the trained network.

    Examples
    --------
    >>> import numpy as np
    >>> from deepclust import DeepImageClusterer
    >>> rng = np.random.default_rng(0)
    >>> images = rng.random((40, 16, 16)).astype("float32")
    >>> model = DeepImageClusterer(n_clusters=4, epochs=2, batch_size=16,
    ...                            view_size=16, seed=1)
    >>> labels = model.fit_predict(images)
    >>> labels.shape
    (40,)
    """

    def __init__(
        self,
        n_clusters=None,
        classes_hint=3,
        oversegmentation=8,
        epochs=200,
        batch_size=256,
        learning_rate=0.05,
        momentum=0.9,
        weight_decay=1e-5,
        architecture="mini",
        rotation_degrees=15.0,
        scale_range=(0.5, 1.0),
        aspect_range=(0.75, 4.0 / 3.0),
        view_size=32,
        kmeans_max_iters=20,
        kmeans_restarts=1,
        seed=0,
        verbose=False,
    ):
        self.n_clusters = n_clusters
        self.classes_hint = classes_hint
        self.oversegmentation = oversegmentation
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.architecture = architecture
        self.rotation_degrees = rotation_degrees
        self.scale_range = scale_range
        self.aspect_range = aspect_range
        self.view_size = view_size
        self.kmeans_max_iters = kmeans_max_iters
        self.kmeans_restarts = kmeans_restarts
        self.seed = seed
        self.verbose = verbose

    def _configs(self):
        cfg = RunConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            sgd=SgdConfig(self.learning_rate, self.momentum, self.weight_decay),
            num_classes_hint=self.classes_hint,
            oversegmentation_factor=self.oversegmentation,
            k=self.n_clusters or 0,
            seed=self.seed,
            architecture=self.architecture,
            kmeans_max_iters=self.kmeans_max_iters,
            kmeans_restarts=self.kmeans_restarts,
        )
        aug = AugmentConfig(
            rotation_degrees=self.rotation_degrees,
            scale_range=tuple(self.scale_range),
            aspect_range=tuple(self.aspect_range),
            output_size=self.view_size,
        )
        return cfg, aug

    def fit(self, X, y=None):
        """Run the full alternating optimization on a stack of images.

        ``y`` is never used for training; when given, it only fills the
        evaluation columns (NMI against labels, purity) of ``metrics_``.
        """
        images = check_images(X)
        truth = check_class_labels(y, images.shape[0])
        cfg, aug = self._configs()
        records = [
            ImageRecord(
                id=f"img{i:06d}",
                pixels=images[i],
                truth_class=int(truth[i]) if truth is not None else -1,
            )
            for i in range(images.shape[0])
        ]
        if cfg.effective_k > len(records):
            raise ValueError(f"k={cfg.effective_k} exceeds the number of images {len(records)}")
        net = Network.build(cfg.architecture, 1, cfg.effective_k, seed=cfg.seed)
        state = RunState(net=net, records=records)
        for _ in range(cfg.epochs):
            metrics = epoch_step(state, cfg, aug)
            if self.verbose:
                print(f"epoch {metrics.epoch}: loss={metrics.loss:.4f}")
        self.network_ = state.net
        self.labels_ = state.prev_assignments
        self.cluster_centers_ = state.last_clustering.centroids
        self.inertia_ = state.last_clustering.inertia
        self.metrics_ = state.metrics_log
        self.n_features_ = state.net.feature_dim
        return self

    def transform(self, X):
        """Feature vectors of images under the trained network (no augmentation)."""
        check_is_fitted(self, "network_")
        images = check_images(X)
        batch = np.stack([zscore(img) for img in images])[:, None]
        feats = np.empty((images.shape[0], self.n_features_), dtype=np.float32)
        step = max(1, self.batch_size)
        for start in range(0, images.shape[0], step):
            _, f, _ = self.network_.forward(batch[start : start + step], train=False)
            feats[start : start + step] = f
        return feats

    def predict(self, X):
        """Assign images to the nearest learned centroid in feature space."""
        check_is_fitted(self, "cluster_centers_")
        feats = l2_normalize(self.transform(X))
        return _sq_dists(feats.data.astype(np.float64), self.cluster_centers_).argmin(axis=1).astype(np.int64)
