"""Seeded compound degradations: contrast compression, blur and sensor noise.

Every operation is a pure function of ``(image, severity, seed)``.  Random
draws come from :func:`segd.images.rng_stream`, keyed by the seed plus a
per-operation tag, so a step draws the same numbers whether it is called
directly or from :func:`synthesize`.
"""

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .images import as_image, clamp01, rng_stream

MID_GRAY = 0.5

# stream tags; never reuse a value
_TAG_BLUR = 1
_TAG_NOISE = 2
_TAG_ORDER = 3


class Kind(enum.Enum):
    CONTRAST = "c"
    BLUR = "b"
    NOISE = "n"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for kind in cls:
            if text in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown degradation kind {value!r}")


def _check_severity(severity):
    severity = float(severity)
    if not (0.0 < severity <= 1.0) or not math.isfinite(severity):
        raise ValueError(f"severity must lie in (0, 1], got {severity}")
    return severity


def gamma_adjust(img, gamma):
    """Odd-symmetric power curve about mid-gray.

    Maps ``0.5 + d`` to ``0.5 + sign(d) * 0.5 * |2d| ** gamma``; fixes 0, 0.5
    and 1 and flattens mid-tones for ``gamma > 1``.
    """
    d = 2.0 * (img - MID_GRAY)
    return MID_GRAY + 0.5 * np.sign(d) * np.abs(d) ** gamma


def apply_contrast(img, severity):
    severity = _check_severity(severity)
    img = as_image(img)
    scale = 1.0 - 0.8 * severity
    out = MID_GRAY + scale * (gamma_adjust(img, 1.0 + severity) - MID_GRAY)
    return clamp01(out)


def gaussian_kernel(sigma):
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def motion_kernel(length, angle):
    """Normalized line kernel of ``length`` pixels at ``angle`` radians.

    The segment [-length/2, length/2] is sampled finely and each sample is
    credited to its nearest pixel, so axis-aligned lines get equal taps.
    """
    size = length if length % 2 else length + 1
    c = size // 2
    k = np.zeros((size, size))
    n = 16 * length
    t = (np.arange(n) + 0.5) / n * length - length / 2.0
    rows = np.rint(c - t * math.sin(angle)).astype(int)
    cols = np.rint(c + t * math.cos(angle)).astype(int)
    ok = (rows >= 0) & (rows < size) & (cols >= 0) & (cols < size)
    np.add.at(k, (rows[ok], cols[ok]), 1.0)
    return k / k.sum()


def blur_kernel(severity, seed):
    """Kernel chosen by the seeded stream: Gaussian or linear motion."""
    severity = _check_severity(severity)
    rng = rng_stream(seed, _TAG_BLUR)
    if rng.random() < 0.5:
        return gaussian_kernel(0.5 + 2.5 * severity)
    length = 3 + int(round(8 * severity))
    return motion_kernel(length, rng.uniform(0.0, math.pi))


def convolve_reflect(img, kernel):
    return ndimage.convolve(img, kernel, mode="reflect")


def apply_blur(img, severity, seed):
    img = as_image(img)
    return clamp01(convolve_reflect(img, blur_kernel(severity, seed)))


def noise_field(shape, severity, seed):
    """Additive TIR noise: column stripes + readout noise + optics bias."""
    severity = _check_severity(severity)
    h, w = shape
    rng = rng_stream(seed, _TAG_NOISE)
    stripes = rng.normal(0.0, 0.05 * severity, size=w)
    readout = rng.normal(0.0, 0.1 * severity, size=(h, w))
    bias = ndimage.gaussian_filter(rng.normal(size=(h, w)), max(h, w) / 6.0, mode="reflect")
    bias -= bias.mean()
    spread = bias.std()
    if spread > 0:
        bias *= 0.03 * severity / spread
    return stripes[None, :] + readout + bias


def apply_noise(img, severity, seed):
    img = as_image(img)
    return clamp01(img + noise_field(img.shape, severity, seed))


@dataclass(frozen=True)
class DegradationRecipe:
    """Ordered degradation steps plus the seed that drives all random draws."""

    steps: tuple
    seed: int = 0
    order_randomized: bool = False

    def __post_init__(self):
        steps = tuple((Kind.parse(k), float(s)) for k, s in self.steps)
        if not 1 <= len(steps) <= 3:
            raise ValueError(f"a recipe needs 1-3 steps, got {len(steps)}")
        kinds = [k for k, _ in steps]
        if len(set(kinds)) != len(kinds):
            raise ValueError("at most one step per degradation kind")
        for _, s in steps:
            _check_severity(s)
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "order_randomized", bool(self.order_randomized))

    @property
    def kinds(self):
        return frozenset(k for k, _ in self.steps)

    def severity(self, kind):
        kind = Kind.parse(kind)
        for k, s in self.steps:
            if k is kind:
                return s
        return 0.0

    def effective_order(self):
        if not self.order_randomized:
            return self.steps
        perm = rng_stream(self.seed, _TAG_ORDER).permutation(len(self.steps))
        return tuple(self.steps[i] for i in perm)

    def to_dict(self):
        return {
            "steps": [{"kind": k.name.lower(), "severity": s} for k, s in self.steps],
            "seed": self.seed,
            "order_randomized": self.order_randomized,
        }

    @classmethod
    def from_dict(cls, data):
        steps = tuple((st["kind"], st["severity"]) for st in data["steps"])
        return cls(steps, int(data.get("seed", 0)), bool(data.get("order_randomized", False)))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


_STEP_FN = {
    Kind.CONTRAST: lambda img, s, seed: apply_contrast(img, s),
    Kind.BLUR: apply_blur,
    Kind.NOISE: apply_noise,
}


def apply_step(img, kind, severity, seed):
    return _STEP_FN[Kind.parse(kind)](img, severity, seed)


def synthesize(img, recipe):
    """Apply ``recipe`` to ``img``.

    Returns ``(degraded, applied_order)`` where ``applied_order`` is the
    tuple of kinds in the order they were actually applied.
    """
    out = as_image(img)
    applied = []
    for kind, severity in recipe.effective_order():
        out = apply_step(out, kind, severity, recipe.seed)
        applied.append(kind)
    return out, tuple(applied)
