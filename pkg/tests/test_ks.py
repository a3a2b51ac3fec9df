import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special, stats

from gsmix.errors import EmptySample, TooFewSamples
from gsmix.ks import (
    EXACT_NULL_MAX_N,
    critical_value,
    kolmogorov_asymptotic_sf,
    kolmogorov_sf,
    ks_one_sample,
    ks_two_sample,
    skew_pretest,
)
from gsmix.prior import PriorParams, draw_samples, tabulate_cdf


def mtw_cdf(d: float, n: int) -> float:
    """P(D_n < d) by the Durbin matrix method (Marsaglia, Tsang and Wang)."""
    k = int(n * d) + 1
    m = 2 * k - 1
    h = k - n * d
    H = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i - j + 1 >= 0:
                H[i, j] = 1.0 / math.factorial(i - j + 1)
    for i in range(m):
        H[i, 0] -= h ** (i + 1) / math.factorial(i + 1)
        H[m - 1, i] -= h ** (m - i) / math.factorial(m - i)
    H[m - 1, 0] += (2 * h - 1) ** m / math.factorial(m) if 2 * h - 1 > 0 else 0.0
    P = np.linalg.matrix_power(H, n)
    return float(P[k - 1, k - 1] * math.factorial(n) / n ** n)


# ------------------------------------------------------------ one-sample

def test_single_point_statistic():
    res = ks_one_sample([0.0], lambda x: np.full_like(np.asarray(x, float), 0.3))
    assert res.statistic == pytest.approx(0.7)


@pytest.mark.parametrize("n", [1, 7, 100, 2500])
def test_quantile_placed_sample(n):
    x = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_one_sample(x, stats.norm.cdf).statistic == pytest.approx(0.5 / n, abs=1e-12)


def test_empty_sample():
    with pytest.raises(EmptySample):
        ks_one_sample([], stats.norm.cdf)


def test_p_value_uses_original_n():
    x = np.sort(np.random.default_rng(0).normal(size=300_000))
    res = ks_one_sample(x, stats.norm.cdf, subsample_cap=1000, assume_sorted=True)
    assert res.subsampled and res.n_effective == x.size
    assert res.p_value == pytest.approx(kolmogorov_sf(res.statistic, x.size))


@pytest.mark.parametrize("seed", range(3))
def test_subsampled_statistic_close_to_exact(seed):
    p = PriorParams(0.7, 0.5, 1.0)
    x = np.sort(draw_samples(p, 10**6, seed))
    cdf = tabulate_cdf(p)
    sub = ks_one_sample(x, cdf, subsample_cap=10**5, assume_sorted=True).statistic
    full = ks_one_sample(x, cdf, subsample_cap=10**6, assume_sorted=True).statistic
    assert abs(sub - full) <= 1e-4
    assert sub <= full + 1e-5 + 1e-6


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 400), a=st.floats(0.1, 5), b=st.floats(-3, 3))
def test_invariant_under_increasing_transform(seed, n, a, b):
    x = np.random.default_rng(seed).normal(size=n)
    d0 = ks_one_sample(x, stats.norm.cdf).statistic
    d1 = ks_one_sample(a * x + b, lambda y: stats.norm.cdf((np.asarray(y) - b) / a)).statistic
    assert d1 == pytest.approx(d0, abs=1e-12)
    assert 0 <= d0 <= 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 5000), cap=st.integers(2, 1000))
def test_subsample_never_exceeds_exact(seed, n, cap):
    x = np.random.default_rng(seed).normal(size=n)
    sub = ks_one_sample(x, stats.norm.cdf, subsample_cap=cap).statistic
    full = ks_one_sample(x, stats.norm.cdf, subsample_cap=n).statistic
    assert sub <= full + 1 / cap + 1 / n


def test_self_consistent_p_values():
    p = PriorParams(1.2, 0.8, 1.0)
    cdf = tabulate_cdf(p)
    passes = sum(ks_one_sample(draw_samples(p, 10**5, s), cdf).p_value > 0.05 for s in range(100))
    assert passes >= 90


# ------------------------------------------------------------ two-sample

def test_two_sample_identical():
    a = np.random.default_rng(1).normal(size=50)
    assert ks_two_sample(a, a).statistic == 0.0


def test_two_sample_disjoint():
    assert ks_two_sample([0.0], [1.0]).statistic == 1.0


def test_two_sample_empty():
    with pytest.raises(EmptySample):
        ks_two_sample([], [1.0])


def test_two_sample_matches_scipy():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=700), rng.normal(0.1, 1.2, size=450)
    assert ks_two_sample(a, b).statistic == pytest.approx(stats.ks_2samp(a, b).statistic)


def test_two_sample_null_calibration():
    rejections = 0
    for s in range(200):
        rng = np.random.default_rng(1000 + s)
        rejections += ks_two_sample(rng.normal(size=10**4), rng.normal(size=10**4)).p_value < 0.05
    assert 0.02 <= rejections / 200 <= 0.09


# ------------------------------------------------------------ null distribution

def test_sf_edges():
    assert kolmogorov_sf(0.0, 10) == 1.0
    assert kolmogorov_sf(1.0, 10) == 0.0
    assert kolmogorov_sf(1.5, 10**6) == 0.0


@pytest.mark.parametrize("n,d", [(5, 0.3), (10, 0.274), (20, 0.2), (50, 0.1), (80, 0.15)])
def test_exact_matches_durbin_matrix(n, d):
    assert kolmogorov_sf(d, n) == pytest.approx(1 - mtw_cdf(d, n), abs=1e-9)


def test_critical_value_n1000():
    root = optimize.brentq(lambda d: kolmogorov_asymptotic_sf(d, 1000) - 0.05, 1e-4, 0.5)
    assert abs(critical_value(0.05, 1000) - root) < 1e-3
    assert abs(critical_value(0.05, 1000) - 1.358 / math.sqrt(1000)) < 1e-3


def test_branches_agree_at_switchover():
    n = EXACT_NULL_MAX_N
    for d in np.linspace(0.002, 0.03, 30):
        assert abs(kolmogorov_sf(d, n) - kolmogorov_sf(d, n + 1)) < 1e-3


@settings(max_examples=50, deadline=None)
@given(n=st.sampled_from([1, 3, 30, 1000, 10**4, 10**4 + 1, 10**6]), d1=st.floats(0, 1), d2=st.floats(0, 1))
def test_sf_nonincreasing(n, d1, d2):
    lo, hi = sorted((d1, d2))
    assert kolmogorov_sf(hi, n) <= kolmogorov_sf(lo, n) + 1e-12


def test_asymptotic_series_limit():
    lam = 1.0
    want = 2 * sum((-1) ** (k - 1) * math.exp(-2 * k * k * lam * lam) for k in range(1, 50))
    assert kolmogorov_asymptotic_sf(lam / math.sqrt(400), 400) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(special.kolmogorov(lam), rel=1e-12)


# ------------------------------------------------------------ skew pre-test

def test_skew_symmetric_sample():
    x = np.repeat([-2.0, -1.0, 0.0, 1.0, 2.0], 1000)
    res = skew_pretest(x, seed=0)
    assert res.skew_estimate == pytest.approx(0.0, abs=1e-12)
    assert not res.excluded


def test_skew_exponential_excluded():
    res = skew_pretest(np.random.default_rng(3).exponential(size=10**4), seed=1)
    assert res.excluded
    assert res.ci_low <= res.skew_estimate <= res.ci_high
    assert 1.5 < res.skew_estimate < 2.5


def test_skew_gaussian_calibration():
    kept = sum(not skew_pretest(np.random.default_rng(s).normal(size=10**4), seed=s).excluded
               for s in range(100))
    assert kept >= 88


def test_skew_too_few():
    with pytest.raises(TooFewSamples):
        skew_pretest(np.arange(10.0))


def test_skew_deterministic():
    x = np.random.default_rng(4).gamma(2.0, size=500)
    assert skew_pretest(x, seed=9) == skew_pretest(x, seed=9)
