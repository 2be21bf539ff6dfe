"""Synthetic dataset generation and the on-disk dataset layout.

Presets mirror the class-count regimes the engine is meant to handle: an
easy 3-class balanced set and two 13-class sets whose class proportions
follow the cardiac-MR sequence distributions (dominant class around 43%).
On disk a dataset is ``images/<id>.png`` (8-bit grayscale) plus
``labels.csv`` with header ``id,class``.
"""

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .families import FAMILIES

# class-count proportions of the large and small imbalanced source datasets
IMBALANCED13_LARGE_RATIOS = [7859, 7782, 7782, 7782, 7931, 7943, 7937, 7831, 83372, 7565, 7561, 7560, 23367]
IMBALANCED13_SMALL_RATIOS = [982, 971, 971, 971, 990, 992, 990, 979, 10339, 944, 944, 944, 2926]

PRESETS = ("balanced3", "imbalanced13-large", "imbalanced13-small", "custom")
DEFAULT_SIZES = {"balanced3": 900, "imbalanced13-large": 2400, "imbalanced13-small": 2400}


@dataclass
class ImageRecord:
    """One dataset item; truth_class is for evaluation reports only."""

    id: str
    pixels: np.ndarray  # (H, W) float32 in [0, 1]
    truth_class: int
    pseudo_label: int = -1


@dataclass
class DatasetConfig:
    preset: str = "balanced3"
    total: int = 0  # 0 means the preset default
    counts: list = field(default_factory=list)  # explicit per-class counts (custom preset)
    image_size: int = 32
    noise_level: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset '{self.preset}' (have {', '.join(PRESETS)})")
        if self.preset == "custom" and not self.counts:
            raise ValueError("custom preset requires explicit per-class counts")
        if self.image_size < 4:
            raise ValueError("image_size must be >= 4")
        if self.noise_level < 0:
            raise ValueError("noise_level must be >= 0")


def apportion(ratios, total):
    """Largest-remainder split of ``total`` into len(ratios) counts, each >= 1."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if total < ratios.size:
        raise ValueError(f"total {total} too small for {ratios.size} classes")
    quota = total * ratios / ratios.sum()
    counts = np.floor(quota).astype(int)
    counts = np.maximum(counts, 1)
    remainder = quota - np.floor(quota)
    order = np.argsort(-remainder, kind="stable")
    i = 0
    while counts.sum() < total:
        counts[order[i % ratios.size]] += 1
        i += 1
    while counts.sum() > total:
        j = int(np.argmax(counts))
        counts[j] -= 1
    return counts.tolist()


def class_counts(cfg):
    if cfg.preset == "custom":
        counts = [int(c) for c in cfg.counts]
        if any(c < 1 for c in counts):
            raise ValueError("all class counts must be >= 1")
        return counts
    total = cfg.total if cfg.total else DEFAULT_SIZES[cfg.preset]
    if cfg.preset == "balanced3":
        return apportion([1, 1, 1], total)
    if cfg.preset == "imbalanced13-large":
        return apportion(IMBALANCED13_LARGE_RATIOS, total)
    return apportion(IMBALANCED13_SMALL_RATIOS, total)


def _image_rng(seed, class_idx, item_idx):
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0x676E, class_idx, item_idx]))


def generate_dataset(cfg):
    """Deterministically draw ImageRecords per the config's class counts."""
    counts = class_counts(cfg)
    if len(counts) > len(FAMILIES):
        raise ValueError(f"{len(counts)} classes requested but only {len(FAMILIES)} pattern families exist")
    records = []
    for class_idx, count in enumerate(counts):
        _, draw = FAMILIES[class_idx]
        for item_idx in range(count):
            rng = _image_rng(cfg.seed, class_idx, item_idx)
            img = draw(rng, cfg.image_size)
            if cfg.noise_level:
                img = img + rng.normal(0.0, cfg.noise_level, size=img.shape)
            img = np.clip(img, 0.0, 1.0).astype(np.float32)
            records.append(
                ImageRecord(id=f"{class_idx:02d}_{item_idx:05d}", pixels=img, truth_class=class_idx)
            )
    return records


def save_dataset(records, out_dir):
    """Write images/*.png plus labels.csv; pixel values quantized to 8 bits."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    with open(out / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "class"])
        for rec in records:
            data = np.clip(np.rint(rec.pixels * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(data, mode="L").save(out / "images" / f"{rec.id}.png")
            writer.writerow([rec.id, rec.truth_class])


def load_dataset(path):
    """Read the images/ + labels.csv layout back; pixels scaled to [0, 1]."""
    root = Path(path)
    labels_file = root / "labels.csv"
    if not labels_file.is_file():
        raise FileNotFoundError(f"no labels.csv in dataset directory {root}")
    records = []
    with open(labels_file, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "class"]:
            raise ValueError(f"{labels_file}: expected header id,class")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValueError(f"{labels_file} line {lineno}: expected 2 fields")
            image_file = root / "images" / f"{row[0]}.png"
            if not image_file.is_file():
                raise FileNotFoundError(f"missing image file {image_file}")
            with Image.open(image_file) as im:
                pixels = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
            records.append(ImageRecord(id=row[0], pixels=pixels, truth_class=int(row[1])))
    if not records:
        raise ValueError(f"dataset at {root} is empty")
    return records


def record_id_hash(image_id):
    """Stable 64-bit hash of an image id, for deriving per-image seed streams."""
    digest = hashlib.blake2b(image_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
