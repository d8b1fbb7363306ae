"""Procedural clean images standing in for a thermal dataset.

Each generator takes a numpy Generator and an image size and returns a
unit-range image stretched to the full [0, 1] range.
"""

import math

import numpy as np

DEFAULT_SIZE = 64


def _normalize(img):
    lo, hi = float(img.min()), float(img.max())
    if hi - lo < 1e-12:
        return np.full_like(img, 0.5)
    return (img - lo) / (hi - lo)


def _grid(size):
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return y / (size - 1), x / (size - 1)


def ramp(rng, size=DEFAULT_SIZE):
    y, x = _grid(size)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return _normalize(math.cos(theta) * x + math.sin(theta) * y)


def checkerboard(rng, size=DEFAULT_SIZE):
    cell = int(rng.integers(6, 17))
    y, x = np.mgrid[0:size, 0:size]
    board = ((y // cell + x // cell) % 2).astype(np.float64)
    lo, hi = sorted(rng.uniform(0.0, 1.0, size=2))
    img = lo + (hi - lo + 0.3) * board
    return _normalize(img + 0.2 * ramp(rng, size))


def thermal_scene(rng, size=DEFAULT_SIZE):
    """Cool background gradient, warm Gaussian blobs and hard-edged structures."""
    y, x = _grid(size)
    img = 0.3 * ramp(rng, size)
    for _ in range(int(rng.integers(2, 6))):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        s = rng.uniform(0.04, 0.15)
        img += rng.uniform(0.3, 0.8) * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * s * s))
    for _ in range(int(rng.integers(3, 7))):
        h, w = rng.integers(size // 8, size // 3, size=2)
        top, left = rng.integers(0, size - h), rng.integers(0, size - w)
        img[top : top + h, left : left + w] += rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
    return _normalize(img)


GENERATORS = {
    "ramp": ramp,
    "checkerboard": checkerboard,
    "thermal": thermal_scene,
}
# Thermal scenes dominate.  Pure ramps are left out of the corpus mix: blurring
# a linear ramp leaves it (almost) unchanged, so its blur label is unobservable.
SCENE_MIX = ("thermal", "thermal", "thermal", "checkerboard")


def make_scene(rng, size=DEFAULT_SIZE, kind=None):
    """Draw one clean image; returns ``(kind, image)``."""
    if kind is None:
        kind = SCENE_MIX[int(rng.integers(len(SCENE_MIX)))]
    return kind, GENERATORS[kind](rng, size)
