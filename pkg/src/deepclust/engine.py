"""The alternating optimization loop.

Each epoch: extract features from one augmented view per image, l2-normalize
and cluster them, adopt the cluster assignments as pseudo-labels, score the
epoch (NMI against the previous assignments and against ground truth,
purity), re-draw the classifier head, then run one epoch of balanced-sampled
minibatch SGD against the pseudo-labels. There is no stopping criterion:
``run`` always executes the configured number of epochs and keeps the last
model.

Every random draw is derived from (seed, stream, epoch[, image id]), so a
run is bit-reproducible and a checkpoint restart continues the exact same
trajectory.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .cluster import ClusteringResult, kmeans, l2_normalize, pseudo_labels
from .data.augment import AugmentConfig, augment, zscore
from .data.generate import load_dataset, record_id_hash
from .data.sampler import balanced_epoch_indices
from .metrics import METRICS_HEADER, EpochMetrics, metrics_row, nmi, purity
from .nn.losses import cross_entropy_loss
from .nn.network import Network
from .nn.optim import SgdConfig, sgd_step

# stream tags keeping the independent random streams apart
STREAM_KMEANS = 2
STREAM_RESET = 3
STREAM_SAMPLER = 4
STREAM_AUG_TRAIN = 5
STREAM_AUG_CLUSTER = 6


class EngineError(Exception):
    """An epoch stage failed; the message names the stage."""


@contextmanager
def _stage(name):
    try:
        yield
    except EngineError:
        raise
    except Exception as exc:
        raise EngineError(f"stage '{name}': {exc}") from exc


def derived_seed(*parts):
    """Stable 64-bit seed from integer parts (seed, stream, epoch, ...)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


def _stream_rng(*parts):
    return np.random.default_rng(np.random.SeedSequence([int(p) for p in parts]))


@dataclass
class RunConfig:
    epochs: int = 200
    batch_size: int = 256
    sgd: SgdConfig = field(default_factory=SgdConfig)
    num_classes_hint: int = 3
    oversegmentation_factor: int = 8
    k: int = 0  # 0 derives k = oversegmentation_factor * num_classes_hint
    seed: int = 0
    checkpoint_every: int = 0  # 0 disables periodic checkpoints (final one still written)
    architecture: str = "mini"
    kmeans_max_iters: int = 20
    kmeans_restarts: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.effective_k < 2:
            raise ValueError("derived cluster count k must be >= 2")

    @property
    def effective_k(self):
        return self.k if self.k else self.oversegmentation_factor * self.num_classes_hint


@dataclass
class RunState:
    net: Network
    records: list
    prev_assignments: Optional[np.ndarray] = None
    metrics_log: list = field(default_factory=list)
    epoch: int = 0
    last_clustering: Optional[ClusteringResult] = None


def extract_features(net, records, aug, seed, epoch, batch_size=256):
    """One augmented view per image, forward in infer mode; rows in record order."""
    n = len(records)
    chunk = max(int(batch_size), 256)  # inference has no optimizer cost; use big chunks
    views = np.empty((n, 1, aug.output_size, aug.output_size), dtype=np.float32)
    for i, rec in enumerate(records):
        rng = _stream_rng(seed, STREAM_AUG_CLUSTER, epoch, record_id_hash(rec.id))
        views[i, 0] = zscore(augment(rec.pixels, aug, rng))
    feats = np.empty((n, net.feature_dim), dtype=np.float32)
    for start in range(0, n, chunk):
        _, f, _ = net.forward(views[start : start + chunk], train=False)
        feats[start : start + chunk] = f
    return feats


def _train_one_epoch(state, cfg, aug, labels):
    """Balanced-sampled minibatch SGD on pseudo-labels; returns the mean loss."""
    records = state.records
    n = len(records)
    idx = balanced_epoch_indices(labels, n, _stream_rng(cfg.seed, STREAM_SAMPLER, state.epoch))
    rng_aug = _stream_rng(cfg.seed, STREAM_AUG_TRAIN, state.epoch)
    total = 0.0
    size = aug.output_size
    for start in range(0, n, cfg.batch_size):
        chunk = idx[start : start + cfg.batch_size]
        batch = np.empty((len(chunk), 1, size, size), dtype=np.float32)
        for j, i in enumerate(chunk):
            batch[j, 0] = zscore(augment(records[i].pixels, aug, rng_aug))
        logits, _, cache = state.net.forward(batch, train=True)
        loss, dlogits = cross_entropy_loss(logits, labels[chunk])
        grads = state.net.backward(cache, dlogits)
        sgd_step(state.net, grads, cfg.sgd)
        total += loss * len(chunk)
    return total / n


def epoch_step(state, cfg, aug):
    """Run one full alternation; mutates state and returns the epoch's metrics.

    On any stage failure the metrics log, epoch counter, and previous
    assignments are left at the last completed epoch.
    """
    epoch = state.epoch
    k = cfg.effective_k

    with _stage("feature-extraction"):
        feats = extract_features(state.net, state.records, aug, cfg.seed, epoch, cfg.batch_size)
    with _stage("clustering"):
        result = kmeans(
            l2_normalize(feats),
            k,
            seed=derived_seed(cfg.seed, STREAM_KMEANS, epoch),
            max_iters=cfg.kmeans_max_iters,
            restarts=cfg.kmeans_restarts,
        )
    labels = pseudo_labels(result)
    for rec, lab in zip(state.records, labels):
        rec.pseudo_label = int(lab)

    with _stage("metrics"):
        truth = np.array([rec.truth_class for rec in state.records])
        has_truth = bool((truth >= 0).all())
        sizes = np.bincount(labels, minlength=k)
        nmi_prev = None if state.prev_assignments is None else nmi(labels, state.prev_assignments)
        nmi_labels = nmi(labels, truth) if has_truth else None
        pur = purity(labels, truth) if has_truth else None

    with _stage("classifier-reset"):
        state.net.reset_classifier(k, derived_seed(cfg.seed, STREAM_RESET, epoch))
    with _stage("training"):
        mean_loss = _train_one_epoch(state, cfg, aug, labels)

    metrics = EpochMetrics(
        epoch=epoch,
        loss=mean_loss,
        nmi_prev=nmi_prev,
        nmi_labels=nmi_labels,
        purity=pur,
        min_cluster=int(sizes.min()),
        max_cluster=int(sizes.max()),
        nonempty_clusters=int((sizes > 0).sum()),
    )
    state.prev_assignments = labels
    state.last_clustering = result
    state.metrics_log.append(metrics)
    state.epoch = epoch + 1
    return metrics


def write_assignments_csv(path, records, labels):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("image_id,cluster\n")
        for rec, lab in zip(records, labels):
            fh.write(f"{rec.id},{int(lab)}\n")


def run(cfg, dataset_path, out_dir, aug=None, write_assignments=False, resume=None, log=None):
    """Execute cfg.epochs alternations over a dataset directory.

    Writes metrics.csv (appended and flushed after every epoch), optional
    per-epoch assignment CSVs, and ckpt_<completed-epochs>.dcls checkpoints.
    """
    aug = aug or AugmentConfig()
    records = load_dataset(dataset_path)  # startup failure precedes any output
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if resume is not None:
        net, epoch0, prev, seed = load_checkpoint(resume)
        if net.num_classes != cfg.effective_k:
            raise EngineError(
                f"checkpoint was trained with k={net.num_classes}, config derives k={cfg.effective_k}"
            )
        cfg.seed = seed  # the stored seed owns the run's random streams
        state = RunState(net=net, records=records, prev_assignments=prev, epoch=epoch0)
    else:
        net = Network.build(cfg.architecture, 1, cfg.effective_k, seed=cfg.seed)
        state = RunState(net=net, records=records)

    metrics_path = out / "metrics.csv"
    fresh_log = not metrics_path.exists() or resume is None
    with open(metrics_path, "w" if fresh_log else "a", newline="", encoding="utf-8") as fh:
        if fresh_log:
            fh.write(",".join(METRICS_HEADER) + "\n")
            fh.flush()
        for _ in range(state.epoch, cfg.epochs):
            metrics = epoch_step(state, cfg, aug)
            fh.write(metrics_row(metrics) + "\n")
            fh.flush()
            if log is not None:
                log(
                    f"epoch {metrics.epoch}: loss={metrics.loss:.4f}"
                    + (f" purity={metrics.purity:.4f}" if metrics.purity is not None else "")
                    + (f" nmi_prev={metrics.nmi_prev:.4f}" if metrics.nmi_prev is not None else "")
                )
            if write_assignments:
                write_assignments_csv(
                    out / f"assignments_{metrics.epoch:04d}.csv", state.records, state.prev_assignments
                )
            if cfg.checkpoint_every and state.epoch % cfg.checkpoint_every == 0 and state.epoch < cfg.epochs:
                save_checkpoint(
                    out / f"ckpt_{state.epoch:04d}.dcls",
                    state.net,
                    epoch=state.epoch,
                    prev_assignments=state.prev_assignments,
                    seed=cfg.seed,
                )
        save_checkpoint(
            out / f"ckpt_{state.epoch:04d}.dcls",
            state.net,
            epoch=state.epoch,
            prev_assignments=state.prev_assignments,
            seed=cfg.seed,
        )
    return state
