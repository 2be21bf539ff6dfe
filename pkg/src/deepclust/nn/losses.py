"""Multinomial logistic loss on raw logits, with its exact gradient."""

import numpy as np


def cross_entropy_loss(logits, labels):
    """Mean negative log-softmax of the labelled class.

    Returns ``(loss, dlogits)`` where ``dlogits`` is the exact gradient of
    the batch-mean loss. Logits are max-shifted before exponentiation so
    large magnitudes cannot overflow.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise ValueError(f"expected logits of shape (B, K), got {logits.shape}")
    if labels.shape != (logits.shape[0],):
        raise ValueError(f"expected {logits.shape[0]} labels, got shape {labels.shape}")
    b, k = logits.shape
    if labels.min() < 0 or labels.max() >= k:
        bad = labels[(labels < 0) | (labels >= k)][0]
        raise ValueError(f"label {bad} out of range [0, {k})")

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    loss = float(-log_probs[np.arange(b), labels].mean())

    dlogits = np.exp(log_probs)
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b
    return loss, dlogits.astype(logits.dtype, copy=False)


def softmax(logits):
    shifted = np.asarray(logits) - np.asarray(logits).max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
