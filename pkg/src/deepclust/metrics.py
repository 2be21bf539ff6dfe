"""Clustering-quality scores computed from contingency tables.

NMI is 2*I(X;Y) / (H(X) + H(Y)) with plug-in entropies in natural log;
purity is the fraction of items belonging to the majority true class of
their cluster. Both treat labels as opaque ids, so any bijective
relabeling leaves the scores unchanged.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class ContingencyTable:
    counts: np.ndarray  # (R, C) non-negative ints
    x_labels: np.ndarray
    y_labels: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())


def _as_label_vector(v, name):
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D label vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    return arr


def contingency(x, y):
    """Cross-tabulation counts[i][j] = |{n : x_n = i-th x label and y_n = j-th y label}|."""
    x = _as_label_vector(x, "x")
    y = _as_label_vector(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"label vectors differ in length: {x.shape[0]} vs {y.shape[0]}")
    x_labels, xi = np.unique(x, return_inverse=True)
    y_labels, yi = np.unique(y, return_inverse=True)
    r, c = x_labels.size, y_labels.size
    counts = np.bincount(xi * c + yi, minlength=r * c).reshape(r, c)
    return ContingencyTable(counts=counts, x_labels=x_labels, y_labels=y_labels)


def _entropy(marginal):
    # marginals are strictly positive by construction; sorted summation keeps
    # the value invariant under any relabeling of the partition
    terms = marginal * np.log(marginal)
    return float(-np.sum(np.sort(terms)))


def nmi(x, y):
    """Normalized mutual information in [0, 1] between two partitions."""
    table = contingency(x, y)
    n = table.total
    p = table.counts / n
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    hx = _entropy(px)
    hy = _entropy(py)
    if hx == 0.0 and hy == 0.0:
        return 1.0  # two single-block partitions are identical
    if hx == 0.0 or hy == 0.0:
        return 0.0
    nz = p > 0
    terms = p[nz] * (np.log(p[nz]) - np.log(px[:, None] * py[None, :])[nz])
    mi = float(np.sum(np.sort(terms)))  # canonical order: symmetric in (x, y)
    return float(min(max(2.0 * mi / (hx + hy), 0.0), 1.0))


def purity(assignments, truth):
    """Fraction of items in the majority true class of their assigned cluster."""
    table = contingency(assignments, truth)
    return float(table.counts.max(axis=1).sum() / table.total)


@dataclass
class EpochMetrics:
    """One row of the training log."""

    epoch: int
    loss: float
    nmi_prev: Optional[float]  # absent at epoch 0
    nmi_labels: Optional[float]
    purity: Optional[float]
    min_cluster: int
    max_cluster: int
    nonempty_clusters: int


METRICS_HEADER = [
    "epoch",
    "loss",
    "nmi_prev",
    "nmi_labels",
    "purity",
    "min_cluster",
    "max_cluster",
    "nonempty_clusters",
]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def metrics_row(m):
    return ",".join(
        _fmt(v)
        for v in (
            m.epoch,
            m.loss,
            m.nmi_prev,
            m.nmi_labels,
            m.purity,
            m.min_cluster,
            m.max_cluster,
            m.nonempty_clusters,
        )
    )


def parse_metrics_csv(path):
    """Read a metrics log back into EpochMetrics rows; errors carry line numbers."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != METRICS_HEADER:
            raise ValueError(f"line 1: expected header {','.join(METRICS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(METRICS_HEADER):
                raise ValueError(f"line {lineno}: expected {len(METRICS_HEADER)} fields, got {len(row)}")
            try:
                rows.append(
                    EpochMetrics(
                        epoch=int(row[0]),
                        loss=float(row[1]),
                        nmi_prev=float(row[2]) if row[2] != "" else None,
                        nmi_labels=float(row[3]) if row[3] != "" else None,
                        purity=float(row[4]) if row[4] != "" else None,
                        min_cluster=int(row[5]),
                        max_cluster=int(row[6]),
                        nonempty_clusters=int(row[7]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    return rows
