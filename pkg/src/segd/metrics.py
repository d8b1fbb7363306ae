"""Full-reference image quality metrics on unit-range images."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .images import ImageError, same_shape

PSNR_CAP = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def mse(a, b):
    same_shape(a, b)
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))


def rmse(a, b):
    return math.sqrt(mse(a, b))


def mae(a, b):
    """Mean absolute error, the per-pixel l1 restoration objective."""
    same_shape(a, b)
    return float(np.mean(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def psnr_from_mse(err):
    if err <= 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / err))


def psnr(a, b):
    """PSNR in dB with peak 1.0; identical images give the 99 dB cap."""
    return psnr_from_mse(mse(a, b))


def ssim_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    g /= g.sum()
    return g


def ssim_map(a, b):
    same_shape(a, b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if min(a.shape) < SSIM_WINDOW:
        raise ImageError(f"SSIM needs both sides >= {SSIM_WINDOW}, got {a.shape}")
    g = ssim_window()

    def smooth(x):
        # separable Gaussian, half-sample symmetric boundary
        x = ndimage.correlate1d(x, g, axis=0, mode="reflect")
        return ndimage.correlate1d(x, g, axis=1, mode="reflect")

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a * mu_a
    var_b = smooth(b * b) - mu_b * mu_b
    cov = smooth(a * b) - mu_a * mu_b
    num = (2.0 * (mu_a * mu_b) + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return num / den


def ssim(a, b):
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5) and unit range."""
    return float(np.mean(ssim_map(a, b)))


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    rmse: float
    mae: float


def report(restored, reference):
    err = mse(restored, reference)
    return MetricReport(
        psnr=psnr_from_mse(err),
        ssim=ssim(restored, reference),
        rmse=math.sqrt(err),
        mae=mae(restored, reference),
    )
