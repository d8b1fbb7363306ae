"""Log-gamma, digamma, trigamma and log-Beta for positive real arguments.

Scalars in, floats out; numpy arrays are handled elementwise.  Used by the
Beta evidence loss and its gradients.
"""

import math

import numpy as np

__all__ = ["log_gamma", "digamma", "trigamma", "log_beta"]

# Lanczos approximation, g = 7, n = 9 (Numerical Recipes / Godfrey coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_{2k} / (2k) for the digamma asymptotic tail, k = 1..8
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)
# B_{2k} for the trigamma asymptotic tail, k = 1..8
_TRIGAMMA_TAIL = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)
_ASYMPTOTIC_FROM = 6.0


def _check(x, name="x"):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive and finite, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def log_gamma(x):
    """Return ln Gamma(x) for x > 0 (elementwise on arrays)."""
    x = _check(x)
    small = x < 0.5
    # Gamma(x) = Gamma(x + 1) / x keeps the series in its accurate range.
    xs = np.where(small, x + 1.0, x)
    z = xs - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)
    out = np.where(small, out - np.log(x), out)
    return _out(out)


def digamma(x):
    """Return psi(x) = d/dx ln Gamma(x) for x > 0.

    Upward recurrence psi(x) = psi(x + 1) - 1/x until x >= 6, then the
    asymptotic expansion in 1/x^2.
    """
    x = np.array(_check(x))
    shift = np.zeros_like(x)
    low = x < _ASYMPTOTIC_FROM
    while np.any(low):
        shift = np.where(low, shift - 1.0 / x, shift)
        x = np.where(low, x + 1.0, x)
        low = x < _ASYMPTOTIC_FROM
    inv2 = 1.0 / (x * x)
    tail = np.zeros_like(x)
    power = inv2
    for c in _DIGAMMA_TAIL:
        tail = tail + c * power
        power = power * inv2
    return _out(shift + np.log(x) - 0.5 / x - tail)


def trigamma(x):
    """Return psi'(x) for x > 0 (recurrence, then asymptotic series)."""
    x = np.array(_check(x))
    shift = np.zeros_like(x)
    low = x < _ASYMPTOTIC_FROM
    while np.any(low):
        shift = np.where(low, shift + 1.0 / (x * x), shift)
        x = np.where(low, x + 1.0, x)
        low = x < _ASYMPTOTIC_FROM
    inv = 1.0 / x
    inv2 = inv * inv
    tail = np.zeros_like(x)
    power = inv2 * inv
    for c in _TRIGAMMA_TAIL:
        tail = tail + c * power
        power = power * inv2
    return _out(shift + inv + 0.5 * inv2 + tail)


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)."""
    a = _check(a, "a")
    b = _check(b, "b")
    # ordered so that log_beta(a, b) and log_beta(b, a) take identical paths
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return _out(np.asarray(log_gamma(lo) + log_gamma(hi) - log_gamma(lo + hi)))
