"""Gated residual restoration operators, one per degradation kind.

Each operator is applied in residual form::

    out = img - d * strength * (img - base_op(img))

so ``d = 0`` or ``strength = 0`` passes the input through untouched.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .degrade import Kind
from .images import as_image

STRETCH_PERCENTILES = (1.0, 99.0)
UNSHARP_SIGMA = 1.5
UNSHARP_AMOUNT = 1.0
BILATERAL_RADIUS = 2
BILATERAL_SIGMA_SPACE = 1.5
BILATERAL_SIGMA_RANGE = 0.1


def percentile_stretch(img):
    lo, hi = np.percentile(img, STRETCH_PERCENTILES)
    if hi - lo < 1e-6:
        return img.copy()
    return np.clip((img - lo) / (hi - lo), 0.0, 1.0)


def unsharp_mask(img):
    blurred = ndimage.gaussian_filter(img, UNSHARP_SIGMA, mode="reflect")
    return img + UNSHARP_AMOUNT * (img - blurred)


def range_weighted_smooth(img):
    """5x5 bilateral-style filter: spatial Gaussian times range Gaussian."""
    r = BILATERAL_RADIUS
    padded = np.pad(img, r, mode="symmetric")
    h, w = img.shape
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            ws = np.exp(-(dy * dy + dx * dx) / (2.0 * BILATERAL_SIGMA_SPACE**2))
            wr = np.exp(-((shifted - img) ** 2) / (2.0 * BILATERAL_SIGMA_RANGE**2))
            num += ws * wr * shifted
            den += ws * wr
    return num / den


def denoise(img):
    return range_weighted_smooth(ndimage.median_filter(img, size=3, mode="reflect"))


BASE_OPS = {
    Kind.CONTRAST: percentile_stretch,
    Kind.BLUR: unsharp_mask,
    Kind.NOISE: denoise,
}


@dataclass(frozen=True)
class OperatorBank:
    """Per-kind strengths in [0, 1]; a strength of 0 makes that operator the identity."""

    contrast: float = 1.0
    blur: float = 1.0
    noise: float = 1.0

    def __post_init__(self):
        for kind in Kind:
            _check_strength(self[kind])

    def __getitem__(self, kind):
        return getattr(self, Kind.parse(kind).name.lower())

    @classmethod
    def from_mapping(cls, strengths):
        return cls(**{Kind.parse(k).name.lower(): float(v) for k, v in strengths.items()})


def _check_strength(strength):
    strength = float(strength)
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength must lie in [0, 1], got {strength}")
    return strength


def apply_drm(img, kind, d, strength):
    kind = Kind.parse(kind)
    strength = _check_strength(strength)
    if d not in (0, 1):
        raise ValueError(f"gate must be 0 or 1, got {d}")
    if d == 0 or strength == 0.0:
        return np.array(img, dtype=np.float64)
    img = as_image(img)
    out = img - strength * (img - BASE_OPS[kind](img))
    return np.clip(out, 0.0, 1.0)


def apply_path(img, order, gates, strengths):
    """Run the operators in ``order``.

    ``gates`` maps kind -> 0/1 (a GateDecision works); ``strengths`` maps
    kind -> strength or is an OperatorBank.  Returns ``(final, intermediates)``
    where ``intermediates[i]`` is the image after the i-th step.
    """
    kinds = [Kind.parse(k) for k in order]
    if len(set(kinds)) != len(kinds):
        raise ValueError(f"duplicate kinds in restoration order {order!r}")
    out = as_image(img)
    steps = []
    for kind in kinds:
        out = apply_drm(out, kind, int(gates[kind]), strengths[kind])
        steps.append(out)
    return out, steps


def path_label(order):
    return "".join(Kind.parse(k).value for k in order)
