"""Acceptance suite: one test per criterion, named ``test_criterion_NN_*``.

A terminal-summary hook in ``conftest.py`` prints one PASS/FAIL line per
criterion after the run.  Run just this file with::

    pytest tests/test_acceptance.py -v
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from scipy import optimize

from conftest import gaussian_field, pooled_by_frequency, shell_std
from gsmix.cli import main
from gsmix.fitter import GridSpec, TrimSpec, categorize, default_workers, failure_flags, fit_block
from gsmix.independence import bootstrap_covariance, pca_cosine_distances, rel_frobenius
from gsmix.ks import EXACT_NULL_MAX_N, critical_value, kolmogorov_asymptotic_sf, kolmogorov_sf, ks_one_sample
from gsmix.prior import PriorParams, draw_samples, moment, tabulate_cdf, variance, variance_scale_law_check
from gsmix.transforms import fourier_transform, haar_inverse, haar_transform, partition_bands

pytestmark = pytest.mark.acceptance


def laplace_cdf(x):
    x = np.asarray(x, float)
    return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0)), 1 - 0.5 * np.exp(-np.maximum(x, 0)))


# 1 ------------------------------------------------------------------------

def test_criterion_01_laplace_equivalence():
    t0 = time.perf_counter()
    tab = tabulate_cdf(PriorParams(1.0, -0.5, 2.0))
    xs = np.linspace(-15, 15, 30001)
    err = np.max(np.abs(tab(xs) - laplace_cdf(xs)))
    elapsed = time.perf_counter() - t0
    assert err < 1e-3, err
    assert elapsed < 10, elapsed


# 2 ------------------------------------------------------------------------

MOMENT_TRIPLES = [
    # r > 1, eta > 0
    (2.0, 1.0, 1.0), (1.5, 0.5, 2.0), (3.0, 2.0, 0.5),
    # r < 1, eta > 0
    (0.7, 1.0, 1.0), (0.5, 2.0, 3.0),
    # r < 1, eta < 0
    (0.6, -0.5, 1.0), (0.8, -1.0, 2.0),
    # r > 1, eta < 0
    (2.0, -0.5, 1.0), (1.5, -1.0, 0.5), (4.0, -1.2, 1.0),
]


@pytest.mark.parametrize("i", range(len(MOMENT_TRIPLES)))
def test_criterion_02_moments(i):
    p = PriorParams(*MOMENT_TRIPLES[i])
    x = draw_samples(p, 10**6, seed=200 + i)
    for n in (2, 4):
        xn = x ** n
        se = xn.std(ddof=1) / math.sqrt(xn.size)
        assert abs(xn.mean() - moment(p, n)) < 3 * se, (n, xn.mean(), moment(p, n), se)
    for n in (1, 3, 5):
        assert moment(p, n) == 0.0


# 3 ------------------------------------------------------------------------

SHAPES = [(1.0, -0.5), (0.5, 0.0), (2.0, 1.0), (0.3, 2.0), (3.0, -1.0)]


@pytest.mark.parametrize("r,eta", SHAPES)
def test_criterion_03_scale_law(r, eta):
    base = tabulate_cdf(PriorParams(r, eta, 1.0))
    v1 = variance(PriorParams(r, eta, 1.0))
    for k in (0.1, 1.0, 10.0):
        a, b = variance_scale_law_check(PriorParams(r, eta), k)
        assert a == pytest.approx(b, rel=1e-14) and a == pytest.approx(k * v1, rel=1e-14)
        scaled = tabulate_cdf(PriorParams(r, eta, k))
        xs = np.linspace(-8, 8, 4001) * math.sqrt(k * v1)
        assert np.max(np.abs(scaled(xs) - base(xs / math.sqrt(k)))) < 1e-3


# 4 ------------------------------------------------------------------------

def test_criterion_04_cdf_sampler_round_trip():
    rng = np.random.default_rng(4)
    passes, slowest = 0, 0.0
    for i in range(20):
        p = PriorParams(float(rng.uniform(0.3, 3.0)), float(rng.uniform(-1.0, 3.0)), float(10 ** rng.uniform(-1, 1)))
        t0 = time.perf_counter()
        tab = tabulate_cdf(p)
        slowest = max(slowest, time.perf_counter() - t0)
        passes += ks_one_sample(draw_samples(p, 10**5, seed=400 + i), tab).p_value > 0.01
    assert passes >= 18, passes
    assert slowest < 5, slowest


# 5 ------------------------------------------------------------------------

def test_criterion_05_subsampling_fidelity():
    p = PriorParams(0.7, 0.5, 1.0)
    cdf = tabulate_cdf(p)
    worst = 0.0
    for seed in range(10):
        x = np.sort(draw_samples(p, 10**6, seed=500 + seed))
        sub = ks_one_sample(x, cdf, assume_sorted=True).statistic
        full = ks_one_sample(x, cdf, subsample_cap=x.size, assume_sorted=True).statistic
        worst = max(worst, abs(sub - full))
    assert worst <= 1e-4, worst


# 6 ------------------------------------------------------------------------

def test_criterion_06_kolmogorov_null():
    root = optimize.brentq(lambda d: kolmogorov_asymptotic_sf(d, 1000) - 0.05, 1e-4, 0.5)
    assert abs(root - 1.358 / math.sqrt(1000)) < 1e-3
    assert abs(critical_value(0.05, 1000) - root) < 1e-3
    n = EXACT_NULL_MAX_N
    for d in np.linspace(0.001, 0.04, 80):
        assert abs(kolmogorov_sf(d, n) - kolmogorov_sf(d, n + 1)) < 1e-3


# 7 & 8 --------------------------------------------------------------------

TRUTHS = [(1.0, 0.5, 1.0), (0.5, 0.0, 2.0), (2.0, -0.5, 0.5)]


@pytest.fixture(scope="module")
def recovery_fits():
    t0 = time.perf_counter()
    fits = []
    for i, truth in enumerate(TRUTHS):
        x = draw_samples(PriorParams(*truth), 10**5, seed=700 + i)
        fits.append(fit_block(x, GridSpec(), TrimSpec(), seed=i, workers=default_workers()))
    return fits, time.perf_counter() - t0


def test_criterion_07_parameter_recovery(recovery_fits):
    fits, elapsed = recovery_fits
    assert elapsed < 30 * 60, elapsed
    for truth, res in zip(TRUTHS, fits):
        assert res.category in ("statistical_pass", "practical_pass"), (truth, res.category, res.ks)
        dr, de = res.refined_step
        near = [(r, e) for r, e in res.region if abs(r - truth[0]) <= dr + 1e-9 and abs(e - truth[1]) <= de + 1e-9]
        assert near, (truth, res.best)


def test_criterion_08_baseline_dominance(recovery_fits):
    for res in recovery_fits[0]:
        for name, base in res.baselines.items():
            assert res.ks <= base.ks + 1e-3, (name, res.ks, base.ks)
    x = np.random.default_rng(8).standard_t(3, size=10**5)
    res = fit_block(x, GridSpec(), TrimSpec(), workers=default_workers())
    assert res.ks + 0.01 <= res.baselines["gaussian"].ks, (res.ks, res.baselines["gaussian"].ks)


# 9 ------------------------------------------------------------------------

def test_criterion_09_transforms():
    rng = np.random.default_rng(9)
    for _ in range(100):
        img = rng.normal(size=(64, 64))
        dec = haar_transform(img, 5)
        assert np.max(np.abs(haar_inverse(dec) - img)) < 1e-10
        assert abs(dec.energy() - np.sum(img ** 2)) < 1e-10 * np.sum(img ** 2)
    for _ in range(10):
        vol = rng.normal(size=(16, 16, 16))
        dec = haar_transform(vol, 3)
        assert all(len(dec.layer(k)) == 7 for k in range(2, 5))
        assert np.max(np.abs(haar_inverse(dec) - vol)) < 1e-10
        assert abs(dec.energy() - np.sum(vol ** 2)) < 1e-10 * np.sum(vol ** 2)
    for _ in range(20):
        img = rng.normal(size=(48, 40))
        F = fourier_transform(img)
        assert abs(np.sum(np.abs(F) ** 2) - np.sum(img ** 2)) < 1e-10 * np.sum(img ** 2)
    wl, samples = pooled_by_frequency(gaussian_field(100, 64, shell_std(), 0))
    part = partition_bands(wl, samples, alpha=0.01)
    assert part.fit_residual < 0.05, part.fit_residual


# 10 -----------------------------------------------------------------------

def test_criterion_10_independence():
    n = 10**4
    rng = np.random.default_rng(10)
    sd = np.array([1.0, 1.0, 1.4, 1.8, 2.2, 2.6, 3.0, 3.4, 3.8, 4.2])
    z = rng.normal(size=(n, 10))
    z[:, 1] = 0.5 * z[:, 0] + math.sqrt(0.75) * z[:, 1]
    d = sorted(pca_cosine_distances(bootstrap_covariance(z * sd, n_boot=200, seed=1)), reverse=True)
    assert all(0.25 <= v <= 0.34 for v in d[:2]), d
    assert max(d[2:]) < 0.05, d
    indep = rng.normal(size=(n, 10)) * sd
    assert rel_frobenius(bootstrap_covariance(indep, n_boot=200, seed=2)) < 3 / math.sqrt(n)


# 11 -----------------------------------------------------------------------

def test_criterion_11_categorization():
    assert categorize(0.0008, 0.2, 10**6) == "statistical_pass"
    assert categorize(0.004, 1e-12, 10**6) == "practical_pass"
    assert categorize(0.018, 0.0, 10**6, {"skew": False, "multimodal": False, "zero_spike": False}) == "borderline"
    rng = np.random.default_rng(11)
    half = np.concatenate([np.zeros(40_000), rng.normal(size=60_000)])
    spike = np.concatenate([half, -half])
    assert failure_flags(spike)["zero_spike"]
    grid = GridSpec.small(np.round(np.arange(0.1, 2.05, 0.3), 10), np.round(np.arange(-1.4, 2.05, 0.3), 10))
    res = fit_block(spike, grid, TrimSpec((0, 25, 50, 100), (-25, 0, 25)), seed=1)
    assert res.category == "trivial_failure", (res.category, res.ks)


# 12 -----------------------------------------------------------------------

def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_12_determinism(tmp_path, capsys):
    rng = np.random.default_rng(12)
    (tmp_path / "img").mkdir()
    for i in range(32):
        Image.fromarray(rng.integers(0, 256, (32, 32)).astype(np.uint8)).save(tmp_path / "img" / f"{i:02d}.png")
    cfg = tmp_path / "fit.json"
    cfg.write_text(json.dumps({"grid": {"r_values": [0.5, 1.0, 2.0], "eta_values": [-0.5, 0.0, 1.0]},
                               "trims": {"t_grid": [0, 25], "refine_deltas": [0]}}))
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["transform", "--input", str(tmp_path / "img" / "*.png"), "--layers", "3",
                     "--out", str(out / "t"), "--seed", "5"]) == 0
        blocks = str(out / "t" / "blocks" / "*.gsmb")
        assert main(["fit", blocks, "--config", str(cfg), "--seed", "5", "--out", str(out / "f")]) == 0
        assert main(["report", str(out / "f" / "reports" / "*.json"), "--out", str(out / "r")]) == 0
        assert main(["independence", blocks, "--seed", "5", "--n-boot", "50",
                     "--out", str(out / "ind.json")]) == 0
        assert main(["dist", "sample", "--r", "0.8", "--eta", "0.2", "--n", "100", "--seed", "5",
                     "--out", str(out / "draws.csv")]) == 0
        assert main(["dist", "cdf", "--r", "0.8", "--eta", "0.2", "--out", str(out / "cdf.csv")]) == 0
        capsys.readouterr()
        runs.append(_tree(out))
    assert runs[0] == runs[1]
    assert len(runs[0]) > 10
