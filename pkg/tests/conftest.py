import numpy as np
import pytest

from gsmix.transforms import fourier_coefficients


def gaussian_field(n_img: int, size: int, std_of_wavelength, seed: int) -> np.ndarray:
    """Stationary Gaussian images whose Fourier std is ``std_of_wavelength(wl)``."""
    rng = np.random.default_rng(seed)
    ky, kx = np.meshgrid(np.fft.fftfreq(size), np.fft.fftfreq(size), indexing="ij")
    f = np.hypot(ky, kx)
    f[0, 0] = np.inf
    s = std_of_wavelength(1.0 / f)
    s[0, 0] = 0.0
    z = rng.normal(size=(n_img, size, size))
    return np.fft.ifft2(np.fft.fft2(z) * s).real


def shell_std(l0: float = np.sqrt(2), rho: float = np.sqrt(2)):
    """Piecewise-constant std, ``rho**k`` on wavelength shells ``[l0 rho^k, l0 rho^(k+1))``."""
    def fn(wl):
        k = np.floor(np.log(np.maximum(wl, 1e-12) / l0) / np.log(rho))
        return rho ** k
    return fn


def pooled_by_frequency(images) -> tuple[np.ndarray, list[np.ndarray]]:
    cs = [fourier_coefficients(im) for im in images]
    R = np.array([c.real for c in cs])
    I = np.array([c.imag for c in cs])
    return cs[0].wavelength, [np.concatenate([R[:, i], I[:, i]]) for i in range(R.shape[1])]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria suite")


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion."""
    status: dict[str, bool] = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            if key == "passed" and rep.when != "call":
                continue
            name = nodeid.split("::test_criterion_")[1].split("[")[0]
            status[name] = status.get(name, True) and key == "passed"
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(status):
        num, _, label = name.partition("_")
        terminalreporter.write_line(f"{'PASS' if status[name] else 'FAIL'}  criterion {int(num):2d}  {label}")
