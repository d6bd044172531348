"""Scalar special functions used across the package.

Log-gamma, digamma, and trigamma are computed by the classical recipe:
shift the argument above 10 with the recurrence formulas, then apply the
de Moivre / Stirling asymptotic series (Abramowitz & Stegun 6.1.40-6.4.12).
Each is accurate to better than 1e-12 relative over the positive reals,
which covers every shape parameter this package produces; the test suite
checks them against an independent library implementation.

Normal tail probabilities are exposed in log domain so that sieve bounds of
order exp(-exp(n^c)) remain representable: the moderate range uses erfc and
the far tail switches to the Mill's-ratio asymptotic expansion.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "logistic",
    "softplus",
    "inv_softplus",
    "log_gamma",
    "digamma",
    "trigamma",
    "normal_sf",
    "log_normal_sf",
    "log_two_sided_normal_tail",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Stirling-series coefficients B_{2k} / (2k (2k-1)) for log Gamma.
_LGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)

# B_{2k} / (2k) for the digamma asymptotic series.
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# B_{2k} for the trigamma asymptotic series.
_TRIGAMMA_SERIES = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_SHIFT_THRESHOLD = 10.0


def logistic(u):
    """Stable logistic 1/(1+exp(-u)); saturates to 0/1 at extreme arguments.

    Accepts scalars or arrays; evaluates exp only on the non-positive side
    of the argument so no overflow can occur.
    """
    arr = np.asarray(u, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    eu = np.exp(arr[~pos])
    out[~pos] = eu / (1.0 + eu)
    if np.ndim(u) == 0:
        return float(out)
    return out


def softplus(x):
    """log(1 + exp(x)) without overflow; 1-Lipschitz map onto (0, inf)."""
    arr = np.asarray(x, dtype=float)
    out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    if np.ndim(x) == 0:
        return float(out)
    return out


def inv_softplus(y):
    """Inverse of softplus: log(exp(y) - 1) for y > 0, evaluated stably."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("inv_softplus requires a positive argument")
    out = arr + np.log(-np.expm1(-arr))
    if np.ndim(y) == 0:
        return float(out)
    return out


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0 via upward recurrence plus Stirling series."""
    if x <= 0.0:
        raise ValueError("log_gamma requires x > 0")
    shift = 0.0
    while x < _SHIFT_THRESHOLD:
        shift -= math.log(x)
        x += 1.0
    inv_sq = 1.0 / (x * x)
    series = 0.0
    power = 1.0 / x
    for coeff in _LGAMMA_SERIES:
        series += coeff * power
        power *= inv_sq
    return shift + (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series


def digamma(x: float) -> float:
    """Digamma psi(x) = d/dx log Gamma(x) for x > 0."""
    if x <= 0.0:
        raise ValueError("digamma requires x > 0")
    shift = 0.0
    while x < _SHIFT_THRESHOLD:
        shift -= 1.0 / x
        x += 1.0
    inv_sq = 1.0 / (x * x)
    series = 0.0
    power = inv_sq
    for coeff in _DIGAMMA_SERIES:
        series += coeff * power
        power *= inv_sq
    return shift + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """Trigamma psi'(x) for x > 0."""
    if x <= 0.0:
        raise ValueError("trigamma requires x > 0")
    shift = 0.0
    while x < _SHIFT_THRESHOLD:
        shift += 1.0 / (x * x)
        x += 1.0
    inv_sq = 1.0 / (x * x)
    series = 0.0
    power = inv_sq / x
    for coeff in _TRIGAMMA_SERIES:
        series += coeff * power
        power *= inv_sq
    return shift + 1.0 / x + 0.5 * inv_sq + series


def normal_sf(t: float) -> float:
    """Exact upper tail 1 - Phi(t) of the standard normal."""
    return 0.5 * math.erfc(t / math.sqrt(2.0))


def log_normal_sf(t: float) -> float:
    """log(1 - Phi(t)), valid far beyond the underflow point of the tail.

    For t < 30 the erfc route is exact to machine precision. Beyond that,
    1 - Phi(t) = phi(t)/t * (1 - 1/t^2 + 3/t^4 - 15/t^6 + 105/t^8 + ...),
    whose truncation error at t = 30 is below 1e-12 relative.
    """
    if math.isinf(t) and t > 0:
        return -math.inf
    if t < 30.0:
        return math.log(0.5 * math.erfc(t / math.sqrt(2.0)))
    inv_sq = 1.0 / (t * t)
    correction = inv_sq * (-1.0 + inv_sq * (3.0 + inv_sq * (-15.0 + inv_sq * 105.0)))
    return -0.5 * t * t - _HALF_LOG_2PI - math.log(t) + math.log1p(correction)


def log_two_sided_normal_tail(t: float) -> float:
    """log P(|Z| > t) = log 2 + log(1 - Phi(t)) for t >= 0."""
    if t < 0.0:
        raise ValueError("two-sided tail threshold must be non-negative")
    return math.log(2.0) + log_normal_sf(t)
