import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from gsmix.errors import InvalidParameter, MomentUndefined
from gsmix.prior import (
    PriorParams,
    TabulatedCdf,
    classical_cdf,
    draw_samples,
    mixing_cdf,
    moment,
    pdf,
    sample_mixing,
    tabulate_cdf,
    variance,
    variance_scale_law_check,
)
from gsmix.ks import critical_value, ks_one_sample, ks_two_sample


def laplace_cdf(x, b=1.0):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.5 * np.exp(x / b), 1 - 0.5 * np.exp(-x / b))


# ------------------------------------------------------------ params

def test_beta_is_derived():
    p = PriorParams(2.0, 0.5, 3.0)
    assert p.beta == pytest.approx(1.0)


@pytest.mark.parametrize("r,eta,scale", [(0.0, 0.0, 1.0), (1.0, -1.5, 1.0), (1.0, 0.0, 0.0),
                                         (-1.0, 0.0, 1.0), (1.0, 0.0, -2.0)])
def test_inadmissible_params_rejected(r, eta, scale):
    with pytest.raises(InvalidParameter):
        PriorParams(r, eta, scale)


def test_negative_r_needs_eta_below_minus_three_halves():
    assert PriorParams(-1.0, -2.0).beta == pytest.approx(0.5)


def test_lper_p():
    assert PriorParams(1.0, 0.0).lper_p == pytest.approx(1.0)
    assert PriorParams(0.5, 0.0).lper_p == pytest.approx(2 / 3)


# ------------------------------------------------------------ moments

def test_moment_laplace_variance_is_one():
    assert moment(PriorParams(1, -0.5, 1), 2) == pytest.approx(1.0, abs=1e-14)


def test_moment_integer_gamma_ratio():
    assert moment(PriorParams(1, 0.5, 1), 2) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("n", [1, 3, 5, 7])
def test_odd_moments_zero(n):
    assert moment(PriorParams(0.7, 1.3, 2.0), n) == 0.0


def test_moment_zero_is_one():
    assert moment(PriorParams(0.3, 2.0, 5.0), 0) == 1.0


def test_moment_against_closed_form():
    p = PriorParams(0.3, 2.0, 1.7)
    for n in (2, 4, 6):
        dfact = math.prod(range(n - 1, 0, -2))
        want = dfact * p.scale ** (n / 2) * special.gamma((p.eta + 1.5 + n / 2) / p.r) / special.gamma(p.beta)
        assert moment(p, n) == pytest.approx(want, rel=1e-10)


def test_moment_monte_carlo_agreement():
    p = PriorParams(0.5, 0.0, 1.0)
    x2 = draw_samples(p, 10**6, seed=11) ** 2
    se = x2.std(ddof=1) / math.sqrt(x2.size)
    assert abs(x2.mean() - moment(p, 2)) < 3 * se


def test_moment_undefined_for_heavy_tails():
    p = PriorParams(-1.0, -2.0)  # Cauchy-like mixing, beta = 0.5
    with pytest.raises(MomentUndefined):
        moment(p, 2)


@pytest.mark.parametrize("r,eta,k", [(1, -0.5, 4.0), (2, 1, 1.0), (0.3, 2, 7.0)])
def test_variance_scale_law_check(r, eta, k):
    a, b = variance_scale_law_check(PriorParams(r, eta), k)
    assert a == pytest.approx(b, rel=1e-14)
    assert a == pytest.approx(k * variance(PriorParams(r, eta)), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.05, 5), eta=st.floats(-1.4, 8), k=st.floats(0.01, 100))
def test_variance_scale_law_property(r, eta, k):
    a, b = variance_scale_law_check(PriorParams(r, eta), k)
    assert a == pytest.approx(b, rel=1e-12)


# ------------------------------------------------------------ sampling

def test_draws_deterministic_per_seed():
    p = PriorParams(0.8, 0.3, 1.2)
    assert np.array_equal(draw_samples(p, 100, 5), draw_samples(p, 100, 5))
    assert not np.array_equal(draw_samples(p, 100, 5), draw_samples(p, 100, 6))


def test_draws_mean_zero():
    p = PriorParams(1.5, 1.0, 2.0)
    x = draw_samples(p, 10**6, seed=3)
    assert abs(x.mean()) < 3 * x.std() / 1000


def test_laplace_draws_match_closed_form():
    x = draw_samples(PriorParams(1, -0.5, 2), 10**6, seed=1)
    res = ks_one_sample(x, laplace_cdf, subsample_cap=10**6)
    assert res.statistic < critical_value(0.01, 10**6)


def test_student_like_draws_match_t_cdf():
    # r = -1 gives inverse-gamma mixing: beta = 0.5 with eta = -2 -> t with 1 dof (Cauchy)
    p = PriorParams(-1.0, -2.0, 1.0)
    x = draw_samples(p, 2 * 10**5, seed=2)
    nu = 2 * p.beta
    s = math.sqrt(p.scale / p.beta)
    res = ks_one_sample(x, lambda v: stats.t.cdf(v / s, nu))
    assert res.p_value > 0.01
    assert stats.kurtosis(x) > 100


def test_mixing_sampler_matches_inverse_cdf_draws():
    p = PriorParams(0.7, 0.4, 1.3)
    theta = sample_mixing(p, 20000, seed=4)
    u = np.random.default_rng(9).random(20000)
    g = special.gammaincinv(p.beta, u)
    inv = p.scale * g ** (1 / p.r)
    res = ks_two_sample(theta, inv)
    assert res.statistic < critical_value(0.01, 10000)


def test_mixing_cdf_matches_empirical():
    p = PriorParams(2.0, 1.0, 0.5)
    theta = np.sort(sample_mixing(p, 50000, seed=8))
    res = ks_one_sample(theta, lambda t: mixing_cdf(p, t), assume_sorted=True)
    assert res.p_value > 0.01


# ------------------------------------------------------------ pdf

@settings(max_examples=30, deadline=None)
@given(x=st.floats(0.01, 20), r=st.floats(0.2, 3), eta=st.floats(-0.9, 5))
def test_pdf_even(x, r, eta):
    p = PriorParams(r, eta)
    assert pdf(p, x) == pytest.approx(pdf(p, -x), rel=1e-12)


def test_pdf_laplace_oracle():
    xs = np.linspace(-6, 6, 49)
    xs = xs[np.abs(xs) > 1e-9]
    got = pdf(PriorParams(1, -0.5, 2), xs)
    assert np.max(np.abs(got - 0.5 * np.exp(-np.abs(xs)))) < 1e-4


def test_pdf_normalized():
    p = PriorParams(0.8, 0.5, 1.0)
    tab = tabulate_cdf(p)
    b = tab.support_bound
    total, _ = integrate.quad(lambda v: float(pdf(p, v)), -b, b, points=[0.0], limit=200)
    mass = tab(b) - tab(-b)
    assert total == pytest.approx(mass, abs=1e-4)


# ------------------------------------------------------------ tabulation

def test_tabulated_at_zero_is_half():
    assert tabulate_cdf(PriorParams(0.6, 0.2, 3.0))(0.0) == 0.5


def test_tabulated_laplace_sup_error():
    tab = tabulate_cdf(PriorParams(1, -0.5, 2))
    xs = np.linspace(-12, 12, 20001)
    assert np.max(np.abs(tab(xs) - laplace_cdf(xs))) < 1e-3


def test_tabulated_against_own_draws():
    p = PriorParams(0.5, 1.0, 1.0)
    res = ks_one_sample(draw_samples(p, 10**6, seed=21), tabulate_cdf(p))
    assert res.p_value > 0.01


def test_table_invariants():
    tab = tabulate_cdf(PriorParams(0.4, -0.8, 1.0), tail_eps=1e-3)
    assert np.all(np.diff(tab.knots) > 0)
    assert np.all(np.diff(tab.cdf_values) >= 0)
    assert tab.cdf_values[0] <= 1e-3 and tab.cdf_values[-1] >= 1 - 1e-3
    assert tab(-1e9) == 0.0 or tab(-1e9) >= 0.0
    assert 0.0 <= tab(1e9) <= 1.0


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.1, 4), eta=st.floats(-1.2, 6))
def test_table_monotone_on_dense_grid(r, eta):
    tab = tabulate_cdf(PriorParams(r, eta))
    b = tab.support_bound
    v = tab(np.linspace(-1.5 * b, 1.5 * b, 10**4))
    assert np.all(np.diff(v) >= 0)
    assert np.all((v >= 0) & (v <= 1))


@pytest.mark.parametrize("r,eta", [(1, 0), (0.3, 2), (3, -1)])
def test_table_scale_law(r, eta):
    base = tabulate_cdf(PriorParams(r, eta, 1.0))
    for k in (0.1, 10.0):
        scaled = tabulate_cdf(PriorParams(r, eta, k))
        xs = np.linspace(-5, 5, 2001) * math.sqrt(k * variance(PriorParams(r, eta)))
        assert np.max(np.abs(scaled(xs) - base(xs / math.sqrt(k)))) < 1e-3


def test_table_rejects_infinite_variance():
    with pytest.raises(MomentUndefined):
        tabulate_cdf(PriorParams(-1.0, -2.0))


@pytest.mark.parametrize("eps", [0.0, 0.5, 0.7])
def test_table_tail_eps_domain(eps):
    with pytest.raises(InvalidParameter):
        tabulate_cdf(PriorParams(1, 0), tail_eps=eps)


def test_gsmc_round_trip(tmp_path):
    tab = tabulate_cdf(PriorParams(0.9, 0.1, 2.5))
    data = tab.to_bytes()
    assert data[:4] == b"GSMC"
    back = TabulatedCdf.from_bytes(data)
    assert np.array_equal(back.knots, tab.knots)
    assert np.array_equal(back.cdf_values, tab.cdf_values)
    xs = np.linspace(-5, 5, 101)
    assert np.allclose(back(xs), tab(xs), rtol=0, atol=1e-12)
    tab.save(tmp_path / "t.gsmc")
    assert TabulatedCdf.load(tmp_path / "t.gsmc").params == tab.params


# ------------------------------------------------------------ classical

def test_classical_closed_forms():
    assert classical_cdf("gaussian", 1.0)(0.0) == 0.5
    assert classical_cdf("laplace", 1.0)(1.0) == pytest.approx(1 - 0.5 * math.exp(-1))
    assert classical_cdf("student_t", 1.0, dof=1.0)(0.0) == 0.5


@pytest.mark.parametrize("kind,scale,dof", [("gaussian", 0.0, None), ("laplace", -1.0, None),
                                            ("student_t", 1.0, 0.0), ("cauchy", 1.0, None)])
def test_classical_domain(kind, scale, dof):
    with pytest.raises(InvalidParameter):
        classical_cdf(kind, scale, dof)
