"""deepclust: unsupervised image categorization via deep clustering.

Alternates K-means over learned CNN features with classifier training on
the resulting pseudo-labels, reporting NMI and cluster purity per epoch.
"""

from .cluster import ClusteringResult, FeatureKMeans, FeatureMatrix, kmeans, l2_normalize, pseudo_labels
from .data import AugmentConfig, DatasetConfig, ImageRecord, augment, generate_dataset, load_dataset, save_dataset, zscore
from .engine import RunConfig, RunState, epoch_step, extract_features, run
from .estimator import DeepImageClusterer
from .metrics import EpochMetrics, contingency, nmi, purity
from .nn import Network, SgdConfig, cross_entropy_loss, sgd_step

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "ClusteringResult",
    "DatasetConfig",
    "DeepImageClusterer",
    "EpochMetrics",
    "FeatureKMeans",
    "FeatureMatrix",
    "ImageRecord",
    "Network",
    "RunConfig",
    "RunState",
    "SgdConfig",
    "augment",
    "contingency",
    "cross_entropy_loss",
    "epoch_step",
    "extract_features",
    "generate_dataset",
    "kmeans",
    "l2_normalize",
    "load_dataset",
    "nmi",
    "pseudo_labels",
    "purity",
    "run",
    "save_dataset",
    "sgd_step",
    "zscore",
]
