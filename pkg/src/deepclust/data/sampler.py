"""Pseudo-label-balanced sampling.

Each draw picks a nonempty pseudo-label uniformly, then a member of that
group uniformly. Equivalently every image carries weight
1 / (nonempty groups * its group size); drawing is with replacement, which
keeps the per-group draw probability exactly uniform whatever the group
sizes are. This is what stops the degenerate everything-in-one-cluster
solution from being self-reinforcing.
"""

import numpy as np


def balanced_weights(pseudo_labels):
    """Per-image draw probability; one group's weights always sum to 1/#groups."""
    labels = np.asarray(pseudo_labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("pseudo_labels must be a nonempty 1-D vector")
    uniq, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    n_groups = uniq.size
    return 1.0 / (n_groups * counts[inverse])


def balanced_epoch_indices(pseudo_labels, epoch_size, rng):
    """Draw epoch_size record indices with replacement under balanced_weights."""
    if epoch_size < 1:
        raise ValueError("epoch_size must be >= 1")
    weights = balanced_weights(pseudo_labels)
    return rng.choice(weights.size, size=int(epoch_size), replace=True, p=weights)
