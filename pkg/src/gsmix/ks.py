"""Kolmogorov-Smirnov statistics and the Kolmogorov null distribution.

Critical values scale like ``1/sqrt(n)``: doubling the sample size shrinks
the alpha-level cutoff by a factor of ``sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, stats

from .errors import EmptySample, TooFewSamples

__all__ = [
    "KsResult",
    "SkewTestResult",
    "EXACT_NULL_MAX_N",
    "kolmogorov_sf",
    "kolmogorov_asymptotic_sf",
    "critical_value",
    "subsample_indices",
    "ks_statistic",
    "ks_one_sample",
    "ks_two_sample",
    "sample_skewness",
    "skew_pretest",
]

EXACT_NULL_MAX_N = 10_000
DEFAULT_SUBSAMPLE_CAP = 100_000


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n_effective: float
    p_value: float
    subsampled: bool = False


@dataclass(frozen=True)
class SkewTestResult:
    skew_estimate: float
    ci_low: float
    ci_high: float
    excluded: bool


def kolmogorov_asymptotic_sf(d: float, n: float, finite_n_correction: bool = False) -> float:
    """Limiting Kolmogorov survival function ``2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)``.

    ``lambda = sqrt(n) * d``; with ``finite_n_correction`` the argument is
    shifted by ``1 / (6 sqrt(n))``, which removes the leading O(n^-1/2) error
    of the limit law.
    """
    if d <= 0.0:
        return 1.0
    lam = math.sqrt(n) * d
    if finite_n_correction:
        lam += 1.0 / (6.0 * math.sqrt(n))
    if lam < 1.0:
        # Jacobi theta form of the CDF converges fast for small lambda
        c = math.pi ** 2 / (8.0 * lam * lam)
        cdf = math.sqrt(2.0 * math.pi) / lam * sum(
            math.exp(-(2 * k - 1) ** 2 * c) for k in range(1, 8)
        )
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-18:
            break
    return min(1.0, max(0.0, 2.0 * total))


def kolmogorov_sf(d: float, n: int) -> float:
    """``P(D_n >= d)`` for the one-sample statistic.

    Exact for ``n <= 10**4`` (Simard & L'Ecuyer's algorithm via
    :data:`scipy.stats.kstwo`); above that, the limiting series with the
    ``1/(6 sqrt(n))`` shift, whose absolute error is below 1e-4 there.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if d <= 0.0:
        return 1.0
    if d >= 1.0:
        return 0.0
    if n <= EXACT_NULL_MAX_N:
        return float(min(1.0, max(0.0, stats.kstwo.sf(d, int(n)))))
    return kolmogorov_asymptotic_sf(d, n, finite_n_correction=True)


def critical_value(alpha: float, n: int, sf: Callable[[float, int], float] = kolmogorov_sf) -> float:
    """Smallest ``d`` with ``P(D_n >= d) <= alpha``."""
    lo, hi = 1e-12, 1.0
    return optimize.brentq(lambda d: sf(d, n) - alpha, lo, hi, xtol=1e-12)


def subsample_indices(n: int, cap: int) -> np.ndarray:
    """Regularly spaced order-statistic indices, always including both ends."""
    if n <= cap:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, cap)).astype(np.int64))


def ks_statistic(x_sorted: np.ndarray, cdf_values: np.ndarray, ranks: np.ndarray, n: int) -> float:
    """KS statistic from CDF values at selected order statistics.

    ``ranks`` are 0-based positions in the full sorted sample of size ``n``.
    Restricting to a subset of ranks can only lower the value.
    """
    hi = (ranks + 1) / n
    lo = ranks / n
    return float(max(np.max(np.abs(hi - cdf_values)), np.max(np.abs(cdf_values - lo))))


def ks_one_sample(sample, cdf, subsample_cap: int = DEFAULT_SUBSAMPLE_CAP,
                  assume_sorted: bool = False) -> KsResult:
    """One-sample KS test against a CDF evaluator.

    Above ``subsample_cap`` points the statistic is evaluated on regularly
    spaced order statistics (with their full-sample ranks); the p-value always
    uses the original ``n``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("KS test needs at least one sample")
    if not assume_sorted:
        x = np.sort(x)
    n = x.size
    ranks = subsample_indices(n, subsample_cap)
    xs = x[ranks]
    d = ks_statistic(xs, np.asarray(cdf(xs), dtype=float), ranks, n)
    return KsResult(d, n, kolmogorov_sf(d, n), subsampled=ranks.size < n)


def ks_two_sample(a, b, assume_sorted: bool = False) -> KsResult:
    """Two-sample KS statistic with an asymptotic p-value at ``n = |a||b|/(|a|+|b|)``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptySample("two-sample KS needs two nonempty samples")
    if not assume_sorted:
        a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    en = a.size * b.size / (a.size + b.size)
    return KsResult(d, en, kolmogorov_asymptotic_sf(d, en), subsampled=False)


def sample_skewness(x) -> float:
    """Moment skewness ``m3 / m2**1.5`` (0 for a constant sample)."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    m2 = np.mean(c * c)
    if m2 == 0.0:
        return 0.0
    return float(np.mean(c ** 3) / m2 ** 1.5)


def _skew_rows(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    s = x[idx]
    c = s - s.mean(axis=1, keepdims=True)
    m2 = np.mean(c * c, axis=1)
    m3 = np.mean(c ** 3, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = m3 / m2 ** 1.5
    return np.where(m2 > 0, out, 0.0)


def skew_pretest(sample, n_boot: int = 200, seed: int = 0, level: float = 0.95) -> SkewTestResult:
    """Percentile-bootstrap confidence interval for the skewness.

    ``excluded`` is true when the interval does not contain 0.  The interval is
    widened to contain the point estimate if resampling puts it outside.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 30:
        raise TooFewSamples(f"skew pre-test needs >= 30 samples (got {x.size})")
    est = sample_skewness(x)
    rng = np.random.default_rng(seed)
    chunk = max(1, int(2_000_000 // x.size))
    boots = []
    done = 0
    while done < n_boot:
        m = min(chunk, n_boot - done)
        boots.append(_skew_rows(x, rng.integers(0, x.size, size=(m, x.size))))
        done += m
    boots = np.concatenate(boots)
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(boots, [tail, 100.0 - tail])
    lo, hi = min(float(lo), est), max(float(hi), est)
    return SkewTestResult(est, lo, hi, excluded=not (lo <= 0.0 <= hi))
