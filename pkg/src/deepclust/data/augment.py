"""Per-image normalization and stochastic augmentation.

The augmentation chain is rotation (bilinear, zero-filled corners), then a
random crop whose area fraction and aspect ratio are drawn from configured
ranges, then a bilinear resize to the network input size. All randomness
comes from the caller's generator, so a seed pins the output exactly.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class AugmentConfig:
    rotation_degrees: float = 15.0
    scale_range: tuple = (0.5, 1.0)
    aspect_range: tuple = (0.75, 4.0 / 3.0)
    output_size: int = 32

    def __post_init__(self):
        for name in ("scale_range", "aspect_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.rotation_degrees < 0:
            raise ValueError("rotation_degrees must be >= 0")
        if self.output_size < 1:
            raise ValueError("output_size must be >= 1")


def zscore(image):
    """Normalize one image to mean 0, population std 1; constants map to zeros."""
    img = np.asarray(image, dtype=np.float32)
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    mean = img.mean(dtype=np.float64)
    std = img.std(dtype=np.float64)
    if std < 1e-8:
        return np.zeros_like(img)
    return ((img - mean) / std).astype(np.float32)


_ROTATE_GRIDS = {}
_RESIZE_GRIDS = {}


def _centered_grid(h, w):
    key = (h, w)
    if key not in _ROTATE_GRIDS:
        ys, xs = np.meshgrid(
            np.arange(h, dtype=np.float32), np.arange(w, dtype=np.float32), indexing="ij"
        )
        _ROTATE_GRIDS[key] = (ys - (h - 1) / 2.0, xs - (w - 1) / 2.0)
    return _ROTATE_GRIDS[key]


def rotate(image, degrees):
    """Rotate about the image center; samples outside the input become 0."""
    if degrees == 0.0:
        return np.array(image, dtype=np.float32)
    img = np.asarray(image, dtype=np.float32)
    h, w = img.shape
    theta = np.deg2rad(degrees)
    dy, dx = _centered_grid(h, w)
    cos_t, sin_t = np.float32(np.cos(theta)), np.float32(np.sin(theta))
    # inverse map: rotate output coordinates by -theta
    sx = cos_t * dx + sin_t * dy + np.float32((w - 1) / 2.0)
    sy = cos_t * dy - sin_t * dx + np.float32((h - 1) / 2.0)
    return _bilinear_sample(img, sy, sx, fill=0.0)


def _resize_grid(h, w, out_h, out_w):
    key = (h, w, out_h, out_w)
    if key not in _RESIZE_GRIDS:
        sy = (np.arange(out_h, dtype=np.float32) + 0.5) * (h / out_h) - 0.5
        sx = (np.arange(out_w, dtype=np.float32) + 0.5) * (w / out_w) - 0.5
        sy = np.clip(sy, 0.0, h - 1.0)
        sx = np.clip(sx, 0.0, w - 1.0)
        y0 = np.floor(sy).astype(np.int64)
        x0 = np.floor(sx).astype(np.int64)
        wy = (sy - y0).astype(np.float32)[:, None]
        wx = (sx - x0).astype(np.float32)[None, :]
        y0 = np.clip(y0, 0, h - 1)
        x0 = np.clip(x0, 0, w - 1)
        y1 = np.clip(y0 + 1, 0, h - 1)
        x1 = np.clip(x0 + 1, 0, w - 1)
        _RESIZE_GRIDS[key] = (y0[:, None], y1[:, None], x0[None, :], x1[None, :], wy, wx)
    return _RESIZE_GRIDS[key]


def resize(image, out_h, out_w):
    """Bilinear resize; same-size calls reproduce the input exactly."""
    img = np.asarray(image, dtype=np.float32)
    h, w = img.shape
    y0, y1, x0, x1, wy, wx = _resize_grid(h, w, out_h, out_w)
    return (
        img[y0, x0] * (1 - wy) * (1 - wx)
        + img[y0, x1] * (1 - wy) * wx
        + img[y1, x0] * wy * (1 - wx)
        + img[y1, x1] * wy * wx
    ).astype(np.float32)


def _bilinear_sample(img, sy, sx, fill):
    h, w = img.shape
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    wy = (sy - y0).astype(np.float32)
    wx = (sx - x0).astype(np.float32)
    y0c = np.clip(y0, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    v00 = img[y0c, x0c]
    v01 = img[y0c, x1c]
    v10 = img[y1c, x0c]
    v11 = img[y1c, x1c]
    out = (
        v00 * (1 - wy) * (1 - wx)
        + v01 * (1 - wy) * wx
        + v10 * wy * (1 - wx)
        + v11 * wy * wx
    )
    if fill is not None:
        inside = (sy >= 0) & (sy <= h - 1) & (sx >= 0) & (sx <= w - 1)
        out = np.where(inside, out, np.float32(fill))
    return out.astype(np.float32)


def _sample_crop(h, w, cfg, rng):
    """Pick a crop box (top, left, ch, cw); center square fallback after 10 misses."""
    area = h * w
    for _ in range(10):
        frac = rng.uniform(cfg.scale_range[0], cfg.scale_range[1])
        aspect = rng.uniform(cfg.aspect_range[0], cfg.aspect_range[1])
        cw = int(round(np.sqrt(area * frac * aspect)))
        ch = int(round(np.sqrt(area * frac / aspect)))
        if 1 <= cw <= w and 1 <= ch <= h:
            top = int(rng.integers(0, h - ch + 1))
            left = int(rng.integers(0, w - cw + 1))
            return top, left, ch, cw
    side = min(h, w)
    return (h - side) // 2, (w - side) // 2, side, side


def augment(image, cfg, rng):
    """Rotation, random resized crop, then resize to cfg.output_size."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    angle = rng.uniform(-cfg.rotation_degrees, cfg.rotation_degrees)
    rotated = rotate(img, float(angle))
    top, left, ch, cw = _sample_crop(*rotated.shape, cfg, rng)
    crop = rotated[top : top + ch, left : left + cw]
    return resize(crop, cfg.output_size, cfg.output_size)
