"""Generalized-gamma scale mixtures of normals.

A draw from the mixture is produced hierarchically::

    g     ~ Gamma(beta, 1)
    theta = scale * g ** (1 / r)
    x     ~ Normal(0, theta)

with ``beta = (eta + 1.5) / r``.  The variance ``theta`` then follows the
generalized gamma law with density proportional to
``(theta / scale) ** (eta + 1/2) * exp(-(theta / scale) ** r)``.

The marginal CDF has no closed form.  It is evaluated by integrating the
standard normal density against the closed-form survival function of the
mixing law,

    F(T) = int_{-inf}^{0} phi(z) * (1 - F_gg((T / z) ** 2)) dz,   T <= 0,

and by reflection for ``T > 0``.  :func:`tabulate_cdf` evaluates this integral
on a dense logarithmic grid in one FFT convolution and wraps the result in a
monotone cubic interpolant; :func:`cdf_quadrature` evaluates it pointwise with
adaptive quadrature and serves as the reference route.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, signal, special
from scipy.interpolate import PchipInterpolator

from .errors import BlockFormatError, InvalidParameter, MomentUndefined, QuadratureFailure

__all__ = [
    "PriorParams",
    "TabulatedCdf",
    "ClassicalCdf",
    "moment",
    "log_moment",
    "variance",
    "variance_scale_law_check",
    "draw_samples",
    "sample_mixing",
    "mixing_cdf",
    "pdf",
    "cdf_quadrature",
    "tabulate_cdf",
    "classical_cdf",
]

# Outer integral truncation: Phi(-Z_MAX) ~ 1e-12.
Z_MAX = float(-special.ndtri(1e-12))
_LOG_Z_MIN = -30.0
_QUAD_RTOL = 1e-8
_KNOT_LOG_SPACING = 0.04
_MAX_REFINE_DEPTH = 20
_MAX_GRID = 1 << 18
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PriorParams:
    """Shape and scale of the mixture.

    Parameters
    ----------
    r : float
        Mixing-law power, nonzero.  ``r > 0`` gives exponential-type tails,
        ``r < 0`` power-law tails.
    eta : float
        Peak-shape parameter.  Requires ``beta = (eta + 1.5) / r > 0``.
    scale : float
        Positive variance scale (the hyperprior's ``vartheta``).
    """

    r: float
    eta: float
    scale: float = 1.0
    _log_scale: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r, eta = float(self.r), float(self.eta)
        if not (math.isfinite(r) and math.isfinite(eta)) or r == 0.0:
            raise InvalidParameter(f"r must be finite and nonzero, eta finite (r={r}, eta={eta})")
        if (eta + 1.5) / r <= 0.0:
            raise InvalidParameter(f"beta = (eta + 1.5) / r must be positive (r={r}, eta={eta})")
        if self._log_scale is None:
            if not (self.scale > 0.0 and math.isfinite(self.scale)):
                raise InvalidParameter(f"scale must be positive and finite (got {self.scale})")
            object.__setattr__(self, "_log_scale", math.log(self.scale))
        elif not math.isfinite(self._log_scale):
            raise InvalidParameter("log scale must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def with_log_scale(cls, r: float, eta: float, log_scale: float) -> PriorParams:
        """Build params from ``log(scale)``; exact even when ``scale`` under/overflows."""
        with np.errstate(over="ignore", under="ignore"):
            scale = float(np.exp(log_scale))
        return cls(r, eta, scale, _log_scale=float(log_scale))

    @property
    def beta(self) -> float:
        return (self.eta + 1.5) / self.r

    @property
    def log_scale(self) -> float:
        return self._log_scale

    @property
    def lper_p(self) -> float:
        """Exponent of the equivalent l_p penalty, ``2r / (1 + r)``."""
        return 2.0 * self.r / (1.0 + self.r)

    def with_scale(self, scale: float) -> PriorParams:
        return PriorParams(self.r, self.eta, scale)


# ---------------------------------------------------------------------------
# moments


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def log_moment(params: PriorParams, n: int) -> float:
    """Log of the ``n``-th (even) absolute moment ``E[X**n]``."""
    if n < 0 or int(n) != n:
        raise InvalidParameter(f"moment order must be a nonnegative integer (got {n})")
    n = int(n)
    if n % 2:
        raise InvalidParameter("log_moment is only defined for even orders")
    if n == 0:
        return 0.0
    arg = (params.eta + 1.5 + n / 2) / params.r
    if arg <= 0.0:
        raise MomentUndefined(
            f"E[X^{n}] is infinite for r={params.r}, eta={params.eta} "
            f"(gamma argument {arg:.4g} <= 0)"
        )
    return (
        math.log(_double_factorial(n - 1))
        + 0.5 * n * params.log_scale
        + special.gammaln(arg)
        - special.gammaln(params.beta)
    )


def moment(params: PriorParams, n: int) -> float:
    """``E[X**n]`` of the mixture; zero for odd ``n``.

    Raises
    ------
    MomentUndefined
        When ``(eta + 1.5 + n/2) / r <= 0``, i.e. the moment diverges.
    """
    if n < 0 or int(n) != n:
        raise InvalidParameter(f"moment order must be a nonnegative integer (got {n})")
    if n % 2:
        return 0.0
    if n == 0:
        return 1.0
    if n == 2 and 0.0 < params.scale < math.inf:
        # product form keeps the linear scale law bit-exact
        log_moment(params, 2)
        ratio = math.exp(special.gammaln((params.eta + 2.5) / params.r) - special.gammaln(params.beta))
        return params.scale * ratio
    try:
        return math.exp(log_moment(params, n))
    except OverflowError:
        return math.inf


def variance(params: PriorParams) -> float:
    return moment(params, 2)


def variance_scale_law_check(params: PriorParams, k: float) -> tuple[float, float]:
    """Return ``(Var at scale=k, k * Var at scale=1)`` for the shape of ``params``."""
    if not k > 0:
        raise InvalidParameter("k must be positive")
    at_k = variance(PriorParams(params.r, params.eta, k))
    at_1 = variance(PriorParams(params.r, params.eta, 1.0))
    return at_k, k * at_1


# ---------------------------------------------------------------------------
# sampling and the mixing law


def _log_gamma_draws(rng: np.random.Generator, beta: float, n: int) -> np.ndarray:
    # For beta < 1 use g = g' * U**(1/beta), g' ~ Gamma(beta + 1), in log space;
    # a direct gamma draw underflows to 0 for small beta.
    if beta < 1.0:
        g1 = rng.gamma(beta + 1.0, size=n)
        u = 1.0 - rng.random(size=n)
        return np.log(g1) + np.log(u) / beta
    return np.log(rng.gamma(beta, size=n))


def sample_mixing(params: PriorParams, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` variances ``theta`` from the generalized-gamma mixing law."""
    rng = np.random.default_rng(seed)
    log_g = _log_gamma_draws(rng, params.beta, int(n))
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(params.log_scale + log_g / params.r)


def draw_samples(params: PriorParams, n: int, seed: int) -> np.ndarray:
    """Seeded draws from the mixture.

    Deterministic given ``(params, n, seed)``.
    """
    n = int(n)
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    rng = np.random.default_rng(seed)
    log_g = _log_gamma_draws(rng, params.beta, n)
    log_theta = params.log_scale + log_g / params.r
    z = rng.standard_normal(n)
    with np.errstate(over="ignore", under="ignore"):
        return z * np.exp(0.5 * log_theta)


def _reg_gamma_pq(beta: float, log_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Regularized lower/upper incomplete gamma at ``y = exp(log_y)``."""
    log_y = np.asarray(log_y, dtype=float)
    p = np.empty_like(log_y)
    q = np.empty_like(log_y)
    lo = log_y < -700.0
    hi = log_y > 700.0
    mid = ~(lo | hi)
    y = np.exp(log_y[mid])
    p[mid] = special.gammainc(beta, y)
    q[mid] = special.gammaincc(beta, y)
    # leading term of the series; relative error O(y)
    p[lo] = np.exp(beta * log_y[lo] - special.gammaln(beta + 1.0))
    q[lo] = 1.0 - p[lo]
    p[hi] = 1.0
    q[hi] = 0.0
    return p, q


def _mixing_sf_log(r: float, beta: float, log_scale: float, log_theta: np.ndarray) -> np.ndarray:
    """``P(Theta > theta)`` as a function of ``log(theta)``."""
    p, q = _reg_gamma_pq(beta, r * (np.asarray(log_theta, dtype=float) - log_scale))
    return q if r > 0 else p


def mixing_cdf(params: PriorParams, theta) -> np.ndarray:
    """Closed-form generalized-gamma CDF of the variance, ``P(Theta <= theta)``."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    pos = theta > 0
    with np.errstate(divide="ignore"):
        lt = np.log(theta[pos])
    out[pos] = 1.0 - _mixing_sf_log(params.r, params.beta, params.log_scale, lt)
    return out


def _log_g_quantiles(beta: float, tail: float) -> tuple[float, float]:
    lo = special.gammaincinv(beta, tail)
    if lo > 1e-280:
        log_lo = math.log(lo)
    else:
        log_lo = (math.log(tail) + special.gammaln(beta + 1.0)) / beta
    hi = special.gammainccinv(beta, tail)
    return log_lo, math.log(hi)


def _log_theta_range(params: PriorParams, tail: float) -> tuple[float, float]:
    a, b = _log_g_quantiles(params.beta, tail)
    a, b = params.log_scale + a / params.r, params.log_scale + b / params.r
    return (a, b) if a <= b else (b, a)


# ---------------------------------------------------------------------------
# density


def _pdf_scalar(params: PriorParams, x: float) -> float:
    r, beta, log_scale = params.r, params.beta, params.log_scale
    ax = abs(x)
    if ax == 0.0:
        # E[theta^{-1/2}] is finite iff beta - 1/(2r) > 0
        a = beta - 0.5 / r
        if a <= 0.0:
            raise QuadratureFailure(
                f"density is infinite at 0 for eta={params.eta} <= -1 (r={r})"
            )
        return math.exp(
            -_LOG_SQRT_2PI - 0.5 * log_scale + special.gammaln(a) - special.gammaln(beta)
        )
    lgb = special.gammaln(beta)
    x2 = ax * ax

    def integrand(lg):
        lt = log_scale + lg / r
        return math.exp(
            beta * lg - math.exp(lg) - lgb - _LOG_SQRT_2PI - 0.5 * lt - 0.5 * x2 * math.exp(-lt)
        )

    g_lo, g_hi = _log_g_quantiles(beta, 1e-16)
    g_x = r * (2.0 * math.log(ax) - log_scale)
    if r > 0:
        g_lo = min(g_lo, g_x - 6.0 * r)
    else:
        g_hi = max(g_hi, g_x - 6.0 * r)
    g_hi = min(g_hi, 750.0)
    pts = sorted({p for p in (math.log(beta), g_x) if g_lo < p < g_hi})
    try:
        val, err = integrate.quad(
            integrand, g_lo, g_hi, points=pts or None, epsrel=_QUAD_RTOL, epsabs=0.0, limit=400
        )
    except OverflowError as exc:  # pragma: no cover - guarded by the range choice
        raise QuadratureFailure(str(exc)) from exc
    if not math.isfinite(val) or err > 100 * _QUAD_RTOL * abs(val) + 1e-300:
        raise QuadratureFailure(f"pdf quadrature did not converge at x={x} (err={err:.3g})")
    return val


def pdf(params: PriorParams, x):
    """Mixture density, by adaptive quadrature over the variance.

    Raises
    ------
    QuadratureFailure
        Near-singular regimes, e.g. ``x = 0`` with ``eta <= -1``.
    """
    xs = np.asarray(x, dtype=float)
    out = np.array([_pdf_scalar(params, float(v)) for v in xs.ravel()]).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# CDF


def _cdf_neg_quadrature(params: PriorParams, x: float) -> float:
    """F(x) for x < 0 by adaptive quadrature over log|z|."""
    r, beta, log_scale = params.r, params.beta, params.log_scale
    log_ax = math.log(-x)

    def integrand(w):
        u = math.exp(w)
        s = _mixing_sf_log(r, beta, log_scale, np.array([2.0 * (log_ax - w)]))[0]
        return math.exp(-0.5 * u * u - _LOG_SQRT_2PI + w) * s

    w_hi = math.log(Z_MAX)
    lt_lo, lt_hi = _log_theta_range(params, 1e-6)
    pts = sorted({w for w in (log_ax - 0.5 * lt_lo, log_ax - 0.5 * lt_hi, 0.0)
                  if _LOG_Z_MIN < w < w_hi})
    val, err = integrate.quad(
        integrand, _LOG_Z_MIN, w_hi, points=pts or None,
        epsrel=_QUAD_RTOL, epsabs=1e-14, limit=500,
    )
    if not math.isfinite(val) or err > 100 * (_QUAD_RTOL * abs(val) + 1e-14):
        raise QuadratureFailure(f"CDF quadrature did not converge at x={x} (err={err:.3g})")
    return val


def cdf_quadrature(params: PriorParams, x) -> np.ndarray | float:
    """Mixture CDF evaluated pointwise by adaptive quadrature (relative tol 1e-8)."""
    xs = np.asarray(x, dtype=float)
    out = np.empty(xs.size)
    for i, v in enumerate(xs.ravel()):
        if v == 0.0:
            out[i] = 0.5
        elif v < 0.0:
            out[i] = _cdf_neg_quadrature(params, v)
        else:
            out[i] = 1.0 - _cdf_neg_quadrature(params, -v)
    out = out.reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def _dense_negative_cdf(params: PriorParams, log_xmax: float):
    """F(-exp(s)) on a uniform grid in s, by one FFT convolution.

    With u = exp(w) and |T| = exp(s) the swapped-order integral becomes the
    convolution  F(-e^s) = int k(w) S(e^{2(s - w)}) dw  with
    k(w) = phi(e^w) e^w and S the survival function of the mixing law.
    Both factors are smooth in log coordinates, so the trapezoid rule on a
    fine uniform grid converges geometrically.
    """
    r, beta, log_scale = params.r, params.beta, params.log_scale
    lt_lo, lt_hi = _log_theta_range(params, 1e-12)
    w_hi = math.log(Z_MAX)
    s_hi = max(log_xmax, 0.5 * lt_hi + w_hi + 0.5)
    s_lo = max(0.5 * lt_lo - 21.0, s_hi - 200.0)
    # transition width of S in s-units
    width = 0.5 * math.sqrt(float(special.polygamma(1, beta))) / abs(r)
    h = min(0.02, max(width / 10.0, 1e-4))
    h = max(h, (s_hi - s_lo + w_hi - _LOG_Z_MIN) / _MAX_GRID)
    nw = int(math.ceil((w_hi - _LOG_Z_MIN) / h)) + 1
    ns = int(math.ceil((s_hi - s_lo) / h)) + 1
    w = _LOG_Z_MIN + h * np.arange(nw)
    s = s_lo + h * np.arange(ns)
    kernel = np.exp(-0.5 * np.exp(2.0 * w) - _LOG_SQRT_2PI + w)
    v = (s_lo - w[-1]) + h * np.arange(ns + nw - 1)
    surv = _mixing_sf_log(r, beta, log_scale, 2.0 * v)
    # F_i = h * sum_j kernel_j * surv[i + nw - 1 - j]
    F = h * signal.fftconvolve(surv, kernel, mode="valid")
    return s, np.clip(F, 0.0, 0.5), h


def _select_knots(params, s, F, h, refine_tol):
    """Decimate the dense grid and refine until adjacent CDF gaps <= refine_tol.

    Returns knot abscissae ``x < 0`` (ascending) and their CDF values.
    """
    n = len(s)
    stride = max(1, int(round(_KNOT_LOG_SPACING / h)))
    keep = np.zeros(n, dtype=bool)
    keep[::stride] = True
    keep[-1] = True
    # trim flat stretches: far tail (F ~ 0) and the core (F ~ 1/2)
    tail = np.nonzero(F > 1e-16)[0]
    last = tail[-1] + 1 if tail.size else 0
    keep[min(last + 1, n):] = False
    if last < n:
        keep[last] = True
    core = np.nonzero(F < 0.5 - 1e-15)[0]
    first = max(core[0] - 1, 0) if core.size else n - 1
    keep[:first] = False
    keep[first] = True

    idx = list(np.nonzero(keep)[0])

    def bisect(i, j, depth, out):
        if depth >= _MAX_REFINE_DEPTH or j - i < 2 or abs(F[i] - F[j]) <= refine_tol:
            return
        m = (i + j) // 2
        bisect(i, m, depth + 1, out)
        out.append(m)
        bisect(m, j, depth + 1, out)

    refined = [idx[0]]
    for a, b in zip(idx[:-1], idx[1:]):
        mids: list[int] = []
        bisect(a, b, 0, mids)
        refined.extend(mids)
        refined.append(b)
    idx = np.asarray(refined)
    xs = -np.exp(s[idx])
    fs = F[idx]
    # innermost gap to the pinned value F(0) = 1/2: refine with direct quadrature
    extra_x, extra_f = [], []
    x_in, f_in, depth = xs[0], fs[0], 0
    while 0.5 - f_in > refine_tol and depth < _MAX_REFINE_DEPTH:
        x_in = 0.5 * x_in
        f_in = min(_cdf_neg_quadrature(params, x_in), 0.5)
        extra_x.append(x_in)
        extra_f.append(f_in)
        depth += 1
    order = np.argsort(np.concatenate([xs, extra_x]))
    xs = np.concatenate([xs, extra_x])[order]
    fs = np.concatenate([fs, extra_f])[order]
    # xs ascending toward 0 means values should be nondecreasing
    fs = np.maximum.accumulate(fs)
    return xs, fs


class TabulatedCdf:
    """Monotone cubic table of a mixture CDF.

    Evaluation is clamped to ``[0, 1]``, equals ``0.5`` at the origin, and
    returns 0 / 1 outside the tabulated knot range.
    """

    def __init__(self, params: PriorParams, knots, cdf_values, support_bound: float,
                 tail_eps: float = 1e-3, refine_tol: float = 0.02, *, _interp=None,
                 _stretch: float = 1.0, _base_knots=None, _base_values=None):
        self.params = params
        self.support_bound = float(support_bound)
        self.tail_eps = tail_eps
        self.refine_tol = refine_tol
        if _interp is None:
            knots = np.asarray(knots, dtype=float)
            cdf_values = np.asarray(cdf_values, dtype=float)
            if knots.ndim != 1 or knots.size < 3 or np.any(np.diff(knots) <= 0):
                raise InvalidParameter("knots must be strictly increasing with >= 3 entries")
            if np.any(np.diff(cdf_values) < 0):
                raise InvalidParameter("cdf values must be nondecreasing")
            _interp = PchipInterpolator(knots, cdf_values, extrapolate=False)
            _base_knots, _base_values = knots, cdf_values
        self._interp = _interp
        self._stretch = float(_stretch)
        self._base_knots = _base_knots
        self._base_values = _base_values
        self._lo = _base_knots[0]
        self._hi = _base_knots[-1]

    @property
    def knots(self) -> np.ndarray:
        return self._base_knots * self._stretch

    @property
    def cdf_values(self) -> np.ndarray:
        return self._base_values.copy()

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        u = xs / self._stretch if self._stretch != 1.0 else xs
        # evaluate the lower half only and reflect; 1 - v is monotone in
        # floating point, whereas a spline plateau near 1 is not
        neg = -np.abs(u)
        low = np.clip(self._interp(np.maximum(neg, self._lo)), 0.0, 0.5)
        low = np.where(neg <= self._lo, 0.0, low)
        out = np.where(u > 0, 1.0 - low, low)
        out = np.where(u == 0, 0.5, out)
        return float(out) if out.ndim == 0 else out

    def rescaled(self, scale: float | None = None, *, log_scale: float | None = None) -> TabulatedCdf:
        """Same shape at a new scale, via ``F_new(x) = F(x * sqrt(scale_old / scale_new))``."""
        if log_scale is None:
            new = PriorParams(self.params.r, self.params.eta, scale)
        else:
            new = PriorParams.with_log_scale(self.params.r, self.params.eta, log_scale)
        factor = math.exp(0.5 * (new.log_scale - self.params.log_scale))
        return TabulatedCdf(
            new, None, None, self.support_bound * factor, self.tail_eps, self.refine_tol,
            _interp=self._interp, _stretch=self._stretch * factor,
            _base_knots=self._base_knots, _base_values=self._base_values,
        )

    # -- binary cache format ------------------------------------------------
    _MAGIC = b"GSMC"
    _VERSION = 1

    def to_bytes(self) -> bytes:
        knots = self.knots
        head = self._MAGIC + struct.pack(
            "<H3dQ", self._VERSION, self.params.r, self.params.eta, self.params.scale, knots.size
        )
        pairs = np.empty((knots.size, 2), dtype="<f8")
        pairs[:, 0] = knots
        pairs[:, 1] = self._base_values
        return head + pairs.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> TabulatedCdf:
        if data[:4] != cls._MAGIC:
            raise BlockFormatError("not a GSMC table (bad magic)")
        version, r, eta, scale, count = struct.unpack_from("<H3dQ", data, 4)
        if version != cls._VERSION:
            raise BlockFormatError(f"unsupported GSMC version {version}")
        off = 4 + struct.calcsize("<H3dQ")
        if len(data) != off + 16 * count:
            raise BlockFormatError("truncated GSMC table")
        pairs = np.frombuffer(data, dtype="<f8", offset=off).reshape(count, 2)
        params = PriorParams(r, eta, scale)
        var = variance(params)
        return cls(params, pairs[:, 0].copy(), pairs[:, 1].copy(),
                   support_bound=math.sqrt(var / 1e-3))

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> TabulatedCdf:
        return cls.from_bytes(Path(path).read_bytes())

    def __repr__(self):
        return f"TabulatedCdf({self.params!r}, knots={self._base_knots.size})"


@lru_cache(maxsize=256)
def _unit_table(r: float, eta: float, tail_eps: float, refine_tol: float) -> TabulatedCdf:
    # Tabulate at unit variance; any other scale is a rescaling of this table.
    log_v1 = log_moment(PriorParams(r, eta), 2)
    params = PriorParams.with_log_scale(r, eta, -log_v1)
    log_xmax = -0.5 * math.log(tail_eps)
    s, F, h = _dense_negative_cdf(params, log_xmax)
    xs, fs = _select_knots(params, s, F, h, refine_tol)
    knots = np.concatenate([xs, [0.0], -xs[::-1]])
    values = np.concatenate([fs, [0.5], 1.0 - fs[::-1]])
    return TabulatedCdf(params, knots, values, math.exp(log_xmax), tail_eps, refine_tol)


def tabulate_cdf(params: PriorParams, tail_eps: float = 1e-3, refine_tol: float = 0.02) -> TabulatedCdf:
    """Tabulate the mixture CDF.

    The support bound comes from Chebyshev's inequality,
    ``x_max = sqrt(Var / tail_eps)``.  Knots are refined until adjacent CDF
    gaps are at most ``refine_tol`` (capped at 20 bisection levels).

    Raises
    ------
    MomentUndefined
        The variance is infinite, so no Chebyshev bound exists.
    """
    if not 0.0 < tail_eps < 0.5:
        raise InvalidParameter("tail_eps must lie in (0, 0.5)")
    if not refine_tol > 0.0:
        raise InvalidParameter("refine_tol must be positive")
    log_moment(params, 2)  # raises MomentUndefined for infinite variance
    unit = _unit_table(params.r, params.eta, float(tail_eps), float(refine_tol))
    return unit.rescaled(log_scale=params.log_scale)


# ---------------------------------------------------------------------------
# classical baselines


@dataclass(frozen=True)
class ClassicalCdf:
    """Closed-form CDF of a Gaussian, Laplace or Student's t baseline."""

    kind: str
    scale: float = 1.0
    dof: float | None = None

    def __call__(self, x):
        xs = np.asarray(x, dtype=float) / self.scale
        if self.kind == "gaussian":
            out = special.ndtr(xs)
        elif self.kind == "laplace":
            out = np.where(xs < 0, 0.5 * np.exp(np.minimum(xs, 0)),
                           1.0 - 0.5 * np.exp(-np.maximum(xs, 0)))
        else:
            out = special.stdtr(self.dof, xs)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def variance(self) -> float:
        if self.kind == "gaussian":
            return self.scale ** 2
        if self.kind == "laplace":
            return 2.0 * self.scale ** 2
        return self.scale ** 2 * self.dof / (self.dof - 2.0) if self.dof > 2 else math.inf


def classical_cdf(kind: str, scale: float = 1.0, dof: float | None = None) -> ClassicalCdf:
    """Gaussian (``scale`` = sigma), Laplace (``scale`` = b) or Student's t."""
    if kind not in ("gaussian", "laplace", "student_t"):
        raise InvalidParameter(f"unknown baseline kind {kind!r}")
    if not scale > 0:
        raise InvalidParameter("scale must be positive")
    if kind == "student_t":
        if dof is None or not dof > 0:
            raise InvalidParameter("Student's t needs dof > 0")
        dof = float(dof)
    else:
        dof = None
    return ClassicalCdf(kind, float(scale), dof)
