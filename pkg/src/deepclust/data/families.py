"""Parametric grayscale pattern families used as synthetic image classes.

Each family is a generator ``draw(rng, size) -> (size, size) float array in
[0, 1]`` with small per-image jitter in its parameters, so images within a
family look alike while the families stay visually distinct even under
rotation and cropping.
"""

import numpy as np

_GRIDS = {}


def _grid(size):
    if size not in _GRIDS:
        c = np.linspace(-1.0, 1.0, size)
        _GRIDS[size] = np.meshgrid(c, c, indexing="ij")
    return _GRIDS[size]


def _wave(phase_arg):
    return 0.5 + 0.5 * np.cos(phase_arg)


def grating(rng, size):
    yy, xx = _grid(size)
    theta = np.deg2rad(45.0 + rng.uniform(-6.0, 6.0))
    freq = 3.0 + rng.uniform(-0.3, 0.3)
    phase = rng.uniform(-0.5, 0.5)
    return _wave(2 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)


def rings(rng, size):
    yy, xx = _grid(size)
    cx, cy = rng.uniform(-0.08, 0.08, size=2)
    freq = 3.5 + rng.uniform(-0.3, 0.3)
    r = np.hypot(xx - cx, yy - cy)
    return _wave(2 * np.pi * freq * r)


def blob(rng, size):
    yy, xx = _grid(size)
    cx, cy = rng.uniform(-0.15, 0.15, size=2)
    sigma = 0.35 + rng.uniform(-0.05, 0.05)
    amp = 0.9 + rng.uniform(-0.1, 0.1)
    return amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2))


def checker(rng, size):
    yy, xx = _grid(size)
    cell = 0.28 + rng.uniform(-0.03, 0.03)
    ox, oy = rng.uniform(-0.05, 0.05, size=2)
    par = np.floor((xx + ox) / cell) + np.floor((yy + oy) / cell)
    return np.where(par % 2 == 0, 0.85, 0.15)


def wedges(rng, size):
    yy, xx = _grid(size)
    rot = rng.uniform(0, 2 * np.pi)
    ang = np.arctan2(yy, xx)
    return _wave(6 * ang + rot)


def bars(rng, size):
    yy, xx = _grid(size)
    freq = 2.6 + rng.uniform(-0.2, 0.2)
    off = rng.uniform(-0.1, 0.1)
    par = np.floor((yy + off) * freq)
    return np.where(par % 2 == 0, 0.9, 0.1)


def disk(rng, size):
    yy, xx = _grid(size)
    cx, cy = rng.uniform(-0.12, 0.12, size=2)
    radius = 0.5 + rng.uniform(-0.06, 0.06)
    return np.where(np.hypot(xx - cx, yy - cy) < radius, 0.95, 0.1)


def cross(rng, size):
    yy, xx = _grid(size)
    theta = np.deg2rad(rng.uniform(-8.0, 8.0))
    width = 0.18 + rng.uniform(-0.03, 0.03)
    xr = xx * np.cos(theta) - yy * np.sin(theta)
    yr = xx * np.sin(theta) + yy * np.cos(theta)
    return np.where((np.abs(xr) < width) | (np.abs(yr) < width), 0.9, 0.12)


def stripes(rng, size):
    yy, xx = _grid(size)
    freq = 1.5 + rng.uniform(-0.15, 0.15)
    off = rng.uniform(-0.1, 0.1)
    par = np.floor((xx + yy + off) * freq)
    return np.where(par % 2 == 0, 0.85, 0.15)


def dots(rng, size):
    yy, xx = _grid(size)
    spacing = 0.5 + rng.uniform(-0.04, 0.04)
    ox, oy = rng.uniform(-0.06, 0.06, size=2)
    ux = (np.mod(xx + ox + spacing / 2, spacing) - spacing / 2) / 0.09
    uy = (np.mod(yy + oy + spacing / 2, spacing) - spacing / 2) / 0.09
    return 0.1 + 0.85 * np.exp(-(ux**2 + uy**2) / 2)


def annulus(rng, size):
    yy, xx = _grid(size)
    cx, cy = rng.uniform(-0.08, 0.08, size=2)
    radius = 0.55 + rng.uniform(-0.05, 0.05)
    width = 0.12 + rng.uniform(-0.02, 0.02)
    r = np.hypot(xx - cx, yy - cy)
    return np.where(np.abs(r - radius) < width, 0.9, 0.1)


def ramp(rng, size):
    yy, xx = _grid(size)
    theta = np.deg2rad(90.0 + rng.uniform(-10.0, 10.0))
    t = xx * np.cos(theta) + yy * np.sin(theta)
    return np.clip(0.5 + 0.45 * t, 0.0, 1.0)


def box_rings(rng, size):
    yy, xx = _grid(size)
    freq = 3.0 + rng.uniform(-0.25, 0.25)
    r = np.maximum(np.abs(xx), np.abs(yy))  # Chebyshev distance: square rings
    return _wave(2 * np.pi * freq * r)


# balanced3 uses the first three; the 13-class presets use all of them
FAMILIES = [
    ("grating", grating),
    ("rings", rings),
    ("blob", blob),
    ("checker", checker),
    ("wedges", wedges),
    ("bars", bars),
    ("disk", disk),
    ("cross", cross),
    ("stripes", stripes),
    ("dots", dots),
    ("annulus", annulus),
    ("ramp", ramp),
    ("box_rings", box_rings),
]
