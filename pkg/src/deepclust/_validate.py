"""Input validation helpers shared by the estimator-facing surfaces."""

import numpy as np


def check_images(X, min_hw=4):
    """Coerce to a float32 (N, H, W) stack of grayscale images."""
    if isinstance(X, (list, tuple)):
        X = np.stack([np.asarray(img) for img in X])
    arr = np.asarray(X, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"expected images of shape (n_images, height, width), got {arr.shape}")
    n, h, w = arr.shape
    if n < 1:
        raise ValueError("need at least one image")
    if h < min_hw or w < min_hw:
        raise ValueError(f"images must be at least {min_hw}x{min_hw}, got {h}x{w}")
    if not np.isfinite(arr).all():
        raise ValueError("images contain non-finite values")
    return arr


def check_class_labels(y, n):
    """Optional integer class labels for evaluation columns only."""
    if y is None:
        return None
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {arr.shape}")
    arr = arr.astype(np.int64)
    if (arr < 0).any():
        raise ValueError("class labels must be non-negative integers")
    return arr
