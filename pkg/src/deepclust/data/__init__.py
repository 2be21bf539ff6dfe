from .augment import AugmentConfig, augment, resize, rotate, zscore
from .generate import (
    DatasetConfig,
    ImageRecord,
    class_counts,
    generate_dataset,
    load_dataset,
    record_id_hash,
    save_dataset,
)
from .sampler import balanced_epoch_indices, balanced_weights

__all__ = [
    "AugmentConfig",
    "DatasetConfig",
    "ImageRecord",
    "augment",
    "balanced_epoch_indices",
    "balanced_weights",
    "class_counts",
    "generate_dataset",
    "load_dataset",
    "record_id_hash",
    "resize",
    "rotate",
    "save_dataset",
    "zscore",
]
