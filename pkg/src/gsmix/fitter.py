"""KS-driven grid search for the mixture parameters.

For each shape ``(r, eta)`` on a grid and each trim count ``t``, the scale is
set so the model variance equals the sample variance after trimming ``t``
values from each tail.  The one-sample KS statistic scores every triple; the
best triple seeds a finer local search.  Scoring uses unit-variance tables,
so a triple costs one table lookup per sample: ``F(x) = F_unit(x / sd_t)``.

A cheap lower bound drives pruning: the KS statistic restricted to a few
thousand order statistics (with their full-sample ranks) never exceeds the
full statistic, so a triple whose bound already loses to both the incumbent
and the region threshold is skipped.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, signal, stats

from .errors import AllFitsDegenerate, EmptySample, GsmError, InvalidParameter, OverTrimmed
from .ks import (
    DEFAULT_SUBSAMPLE_CAP,
    SkewTestResult,
    critical_value,
    kolmogorov_sf,
    ks_statistic,
    skew_pretest,
    subsample_indices,
)
from .prior import PriorParams, _unit_table, classical_cdf, log_moment

__all__ = [
    "GridSpec",
    "TrimSpec",
    "Thresholds",
    "BaselineFit",
    "FitResult",
    "CATEGORIES",
    "trimmed_variance",
    "match_scale",
    "coarse_fit",
    "refine_fit",
    "fit_block",
    "fit_baselines",
    "skew_check",
    "failure_flags",
    "categorize",
]

CATEGORIES = ("statistical_pass", "practical_pass", "borderline", "interesting_failure", "trivial_failure")
_TAIL_EPS = 1e-3
_REFINE_TOL = 0.02


# -------------------------------------------------------------------- specs

def _axis(pieces: Iterable[tuple[int, int, int]], extra: Sequence[float] = ()) -> tuple[float, ...]:
    # (start, stop, denominator): integer numerators keep values like 0.0 exact
    vals = set(float(v) for v in extra)
    for start, stop, den in pieces:
        vals.update(k / den for k in range(start, stop + 1))
    return tuple(sorted(vals))


@dataclass(frozen=True)
class GridSpec:
    """Coarse ``(r, eta)`` grid and refinement rules.

    The default spans ``r`` in [0.01, 20] and ``eta`` in [-1.4, 20] with
    spacing 0.1 up to 10 and 1.0 beyond.  Refinement divides the local
    coarse spacing by ``refine_factor``, or by ``fine_factor`` on cells
    reaching below ``fine_r_below`` in ``r`` or ``fine_eta_below`` in ``eta``.
    """

    r_values: tuple[float, ...] = _axis([(1, 100, 10), (11, 20, 1)], extra=[0.01])
    eta_values: tuple[float, ...] = _axis([(-14, 100, 10), (11, 20, 1)])
    refine_factor: int = 5
    fine_factor: int = 10
    fine_r_below: float = 0.02
    fine_eta_below: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        e = np.asarray(self.eta_values, dtype=float)
        if r.size == 0 or e.size == 0:
            raise InvalidParameter("grid axes must be nonempty")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(e) <= 0):
            raise InvalidParameter("grid axes must be strictly increasing")
        if r[0] <= 0:
            raise InvalidParameter("grid r values must be positive")
        if e[0] <= -1.5:
            raise InvalidParameter("grid eta values must exceed -1.5")

    def shapes(self) -> list[tuple[float, float]]:
        return [(r, e) for r in self.r_values for e in self.eta_values]

    @staticmethod
    def _local_axis(axis: Sequence[float], center: float, factor: int, fine: int,
                    fine_below: float, lower_limit: float | None) -> list[float]:
        axis = list(axis)
        i = min(range(len(axis)), key=lambda k: abs(axis[k] - center))
        pts = {center}
        for j in (i - 1, i + 1):
            if 0 <= j < len(axis):
                nb = axis[j]
            else:
                # extend past the edge by the adjacent spacing
                k = i - 1 if j > i else i + 1
                if not 0 <= k < len(axis):
                    continue
                nb = center + (center - axis[k])
            lo = min(center, nb)
            steps = fine if lo < fine_below else factor
            for m in range(1, steps + 1):
                v = round(center + (nb - center) * m / steps, 12)
                if lower_limit is None or v > lower_limit:
                    pts.add(v)
        return sorted(pts)

    def refined_axes(self, r0: float, eta0: float) -> tuple[list[float], list[float]]:
        """Local axes spanning one coarse step either side of ``(r0, eta0)``."""
        rs = self._local_axis(self.r_values, r0, self.refine_factor, self.fine_factor,
                              self.fine_r_below, 0.0)
        es = self._local_axis(self.eta_values, eta0, self.refine_factor, self.fine_factor,
                              self.fine_eta_below, -1.5)
        return rs, es

    def eta_half_step(self, eta: float = 0.0) -> float:
        """Half the coarse eta spacing at ``eta`` (the lpER tolerance)."""
        e = np.asarray(self.eta_values)
        i = int(np.argmin(np.abs(e - eta)))
        gaps = [abs(e[j] - e[i]) for j in (i - 1, i + 1) if 0 <= j < e.size]
        return 0.5 * min(gaps) if gaps else 0.05

    @classmethod
    def small(cls, r_values: Sequence[float], eta_values: Sequence[float], **kw) -> GridSpec:
        return cls(tuple(float(v) for v in r_values), tuple(float(v) for v in eta_values), **kw)


@dataclass(frozen=True)
class TrimSpec:
    t_grid: tuple[int, ...] = (0, 25, 50, 75, 100, 150, 200, 250, 300, 350, 500)
    refine_deltas: tuple[int, ...] = (-100, -75, -50, -25, 0, 25, 50, 75, 100)


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds; the defaults follow the quantitative fit categories."""

    alpha: float = 0.05
    min_statistical_n: int = 100
    practical: float = 0.01
    borderline: float = 0.02
    spike_fraction: float = 0.2
    spike_rel_tol: float = 1e-6
    skew_level: float = 0.95
    skew_boot: int = 200
    skew_max_n: int = 200_000
    mode_prominence: float = 0.05


# ------------------------------------------------------------- primitives

def trimmed_variance(values, t: int, assume_sorted: bool = False) -> float:
    """Sample variance (n - 1 denominator) after dropping ``t`` values per tail.

    Raises
    ------
    OverTrimmed
        Unless ``n > 2 t + 1``.
    """
    x = np.asarray(values, dtype=float).ravel()
    t = int(t)
    if t < 0:
        raise InvalidParameter("trim count must be nonnegative")
    if x.size <= 2 * t + 1:
        raise OverTrimmed(f"cannot trim {t} per tail from {x.size} values")
    if t == 0:
        return float(np.var(x, ddof=1))
    if not assume_sorted:
        x = np.partition(x, (t, x.size - t - 1))
    return float(np.var(x[t: x.size - t], ddof=1))


def match_scale(shape: tuple[float, float], emp_var: float) -> PriorParams:
    """Params with the given shape whose variance equals ``emp_var``."""
    r, eta = shape
    if not emp_var > 0:
        raise InvalidParameter("empirical variance must be positive")
    log_v1 = log_moment(PriorParams(r, eta), 2)
    return PriorParams.with_log_scale(r, eta, math.log(emp_var) - log_v1)


# --------------------------------------------------------------- scoring

@dataclass
class _Context:
    n: int
    x_cap: np.ndarray
    ranks_cap: np.ndarray
    x_scr: np.ndarray
    ranks_scr: np.ndarray
    trims: np.ndarray
    sds: np.ndarray
    region_threshold: float
    tail_eps: float
    refine_tol: float


def _make_context(x_sorted: np.ndarray, trims: Sequence[int], subsample_cap: int,
                  n_screen: int, region_threshold: float, tail_eps: float,
                  refine_tol: float) -> _Context:
    n = x_sorted.size
    cap_idx = subsample_indices(n, subsample_cap)
    pos = subsample_indices(cap_idx.size, n_screen)
    valid = [int(t) for t in trims if n > 2 * int(t) + 1]
    if not valid:
        raise OverTrimmed(f"no trim count is feasible for n={n}")
    sds, kept = [], []
    for t in sorted(set(valid)):
        v = trimmed_variance(x_sorted, t, assume_sorted=True)
        if v > 0 and math.isfinite(v):
            kept.append(t)
            sds.append(math.sqrt(v))
    if not kept:
        raise AllFitsDegenerate("block has zero variance at every trim level")
    return _Context(n, x_sorted[cap_idx], cap_idx, x_sorted[cap_idx[pos]], cap_idx[pos],
                    np.array(kept), np.array(sds), region_threshold, tail_eps, refine_tol)


def _ks_rows(cdf_rows: np.ndarray, ranks: np.ndarray, n: int) -> np.ndarray:
    hi = (ranks + 1) / n
    lo = ranks / n
    return np.maximum(np.max(hi - cdf_rows, axis=1), np.max(cdf_rows - lo, axis=1))


@dataclass
class _ShapeScore:
    r: float
    eta: float
    ok: bool
    best_ks: float = math.inf   # exact (subsampled at cap) minimum over evaluated trims
    best_t: int = -1
    in_region: bool = False


def _score_shapes(shapes: Sequence[tuple[float, float]], ctx: _Context,
                  incumbent: float = math.inf) -> list[_ShapeScore]:
    out = []
    best = (incumbent, -1, math.inf, math.inf)
    for r, eta in shapes:
        try:
            table = _unit_table(float(r), float(eta), ctx.tail_eps, ctx.refine_tol)
        except (GsmError, ArithmeticError, ValueError):
            out.append(_ShapeScore(r, eta, ok=False))
            continue
        sds = ctx.sds
        lbs = _ks_rows(table(ctx.x_scr[None, :] / sds[:, None]), ctx.ranks_scr, ctx.n)
        rec = _ShapeScore(r, eta, ok=True)
        for j in np.argsort(lbs, kind="stable"):
            cutoff = max(ctx.region_threshold, best[0])
            if lbs[j] > cutoff:
                break
            t = int(ctx.trims[j])
            ks = ks_statistic(ctx.x_cap, table(ctx.x_cap / sds[j]), ctx.ranks_cap, ctx.n)
            if (ks, t) < (rec.best_ks, rec.best_t):
                rec.best_ks, rec.best_t = ks, t
            key = (ks, t, r, eta)
            if key < best:
                best = key
        rec.in_region = rec.best_ks < ctx.region_threshold
        out.append(rec)
    return out


def _score_parallel(shapes, ctx, workers: int) -> list[_ShapeScore]:
    if workers <= 1 or len(shapes) < 2 * workers:
        return _score_shapes(shapes, ctx)
    chunks = [shapes[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_score_shapes, chunks, [ctx] * workers))
    # restore canonical grid order
    merged = {(s.r, s.eta): s for part in parts for s in part}
    return [merged[(r, e)] for r, e in shapes]


def _argmin(scores: Iterable[_ShapeScore]):
    cands = [(s.best_ks, s.best_t, s.r, s.eta) for s in scores if s.ok and s.best_t >= 0]
    return min(cands) if cands else None


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class BaselineFit:
    kind: str
    scale: float
    dof: float | None
    ks: float
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    best: PriorParams
    ks: float
    p_value: float
    t_star: int
    n: int
    category: str = ""
    region: list[tuple[float, float]] = field(default_factory=list)
    region_threshold: float = 0.0
    region_intersects_lper: bool = False
    lper_p_range: tuple[float, float] | None = None
    baselines: dict[str, BaselineFit] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    coarse: dict = field(default_factory=dict)
    refined_step: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "best": {"r": self.best.r, "eta": self.best.eta, "theta": self.best.scale,
                     "log_theta": self.best.log_scale, "t_star": self.t_star},
            "ks": self.ks,
            "p_value": self.p_value,
            "n": self.n,
            "category": self.category,
            "region": [[r, e] for r, e in self.region],
            "region_threshold": self.region_threshold,
            "lper": {"intersects": self.region_intersects_lper,
                     "p_range": list(self.lper_p_range) if self.lper_p_range else None},
            "baselines": {k: v.to_dict() for k, v in sorted(self.baselines.items())},
            "flags": dict(sorted(self.flags.items())),
            "coarse": self.coarse,
        }


# -------------------------------------------------------------- searching

def _prepare(values) -> np.ndarray:
    x = np.asarray(getattr(values, "values", values), dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("cannot fit an empty block")
    if not np.all(np.isfinite(x)):
        raise InvalidParameter("block contains non-finite values")
    return np.sort(x)


def _region_threshold(n: int, alpha: float, practical: float) -> float:
    return max(critical_value(alpha, n), practical)


@dataclass
class _CoarseState:
    x: np.ndarray
    ctx: _Context
    scores: list[_ShapeScore]
    best: tuple[float, int, float, float]


def _coarse(x: np.ndarray, grid: GridSpec, trims: TrimSpec, thresholds: Thresholds,
            subsample_cap: int, n_screen: int, workers: int) -> _CoarseState:
    thr = _region_threshold(x.size, thresholds.alpha, thresholds.practical)
    ctx = _make_context(x, trims.t_grid, subsample_cap, n_screen, thr, _TAIL_EPS, _REFINE_TOL)
    scores = _score_parallel(grid.shapes(), ctx, workers)
    best = _argmin(scores)
    if best is None:
        raise AllFitsDegenerate("every grid point failed to tabulate")
    return _CoarseState(x, ctx, scores, best)


def coarse_fit(block, grid: GridSpec | None = None, trims: TrimSpec | None = None,
               subsample_cap: int = DEFAULT_SUBSAMPLE_CAP, n_screen: int = 2000,
               workers: int = 1) -> tuple[PriorParams, float, int]:
    """Best coarse-grid triple.

    Returns
    -------
    params : PriorParams
        Best shape with the scale matched to the trimmed variance.
    ks : float
        Its KS statistic.
    t0 : int
        The trim count used.
    """
    x = _prepare(block)
    st = _coarse(x, grid or GridSpec(), trims or TrimSpec(), Thresholds(), subsample_cap,
                 n_screen, workers)
    ks, t, r, eta = st.best
    return match_scale((r, eta), trimmed_variance(x, t, assume_sorted=True)), ks, t


def _refine(st: _CoarseState, grid: GridSpec, trims: TrimSpec, thresholds: Thresholds,
            subsample_cap: int, n_screen: int, workers: int):
    ks0, t0, r0, eta0 = st.best
    rs, es = grid.refined_axes(r0, eta0)
    t_ref = sorted({max(t0 + d, 0) for d in trims.refine_deltas})
    t_ref = [t for t in t_ref if st.x.size > 2 * t + 1]
    ctx = _make_context(st.x, t_ref, subsample_cap, n_screen, st.ctx.region_threshold,
                        _TAIL_EPS, _REFINE_TOL)
    shapes = [(r, e) for r in rs for e in es]
    scores = _score_parallel(shapes, ctx, workers)
    step_r = min(np.diff(rs)) if len(rs) > 1 else 0.0
    step_e = min(np.diff(es)) if len(es) > 1 else 0.0
    return scores, (float(step_r), float(step_e))


def refine_fit(block, coarse: tuple[PriorParams, int], grid: GridSpec | None = None,
               trims: TrimSpec | None = None, thresholds: Thresholds | None = None,
               subsample_cap: int = DEFAULT_SUBSAMPLE_CAP, n_screen: int = 2000,
               workers: int = 1) -> FitResult:
    """Local search around a coarse optimum.

    The region of best fit here covers the refined points only; use
    :func:`fit_block` for the union with the coarse grid.
    """
    grid, trims, thresholds = grid or GridSpec(), trims or TrimSpec(), thresholds or Thresholds()
    x = _prepare(block)
    params, t0 = coarse
    thr = _region_threshold(x.size, thresholds.alpha, thresholds.practical)
    ctx = _make_context(x, [t0], subsample_cap, n_screen, thr, _TAIL_EPS, _REFINE_TOL)
    table = _unit_table(params.r, params.eta, _TAIL_EPS, _REFINE_TOL)
    ks0 = ks_statistic(ctx.x_cap, table(ctx.x_cap / ctx.sds[0]), ctx.ranks_cap, x.size)
    st = _CoarseState(x, ctx, [], (ks0, t0, params.r, params.eta))
    scores, step = _refine(st, grid, trims, thresholds, subsample_cap, n_screen, workers)
    return _finish(x, st, scores, step, grid, thresholds)


def _finish(x, st: _CoarseState, refined: list[_ShapeScore], step, grid: GridSpec,
            thresholds: Thresholds) -> FitResult:
    cands = [c for c in (_argmin(refined), st.best) if c is not None]
    ks, t, r, eta = min(cands)
    best = match_scale((r, eta), trimmed_variance(x, t, assume_sorted=True))
    region = sorted({(s.r, s.eta) for s in list(st.scores) + list(refined) if s.ok and s.in_region})
    half = grid.eta_half_step(0.0) + 1e-12
    lper = [pt for pt in region if abs(pt[1]) <= half]
    p_range = None
    if lper:
        ps = [2 * pt[0] / (1 + pt[0]) for pt in lper]
        p_range = (min(ps), max(ps))
    return FitResult(
        best=best, ks=float(ks), p_value=kolmogorov_sf(ks, x.size), t_star=int(t), n=x.size,
        region=region, region_threshold=st.ctx.region_threshold,
        region_intersects_lper=bool(lper), lper_p_range=p_range,
        coarse={"r": st.best[2], "eta": st.best[3], "t0": st.best[1], "ks": st.best[0]},
        refined_step=step,
    )


def fit_block(block, grid: GridSpec | None = None, trims: TrimSpec | None = None,
              thresholds: Thresholds | None = None, subsample_cap: int = DEFAULT_SUBSAMPLE_CAP,
              n_screen: int = 2000, workers: int = 1, baselines: bool = True,
              seed: int = 0) -> FitResult:
    """Full fit: coarse grid, local refinement, region, baselines, category.

    Parameters
    ----------
    block : CoefficientBlock or array_like
    workers : int
        Processes for grid scoring; results do not depend on it.
    seed : int
        Seed for the skew bootstrap used by the failure sub-checks.
    """
    grid, trims, thresholds = grid or GridSpec(), trims or TrimSpec(), thresholds or Thresholds()
    x = _prepare(block)
    st = _coarse(x, grid, trims, thresholds, subsample_cap, n_screen, workers)
    refined, step = _refine(st, grid, trims, thresholds, subsample_cap, n_screen, workers)
    res = _finish(x, st, refined, step, grid, thresholds)
    if baselines:
        res.baselines = fit_baselines(x, subsample_cap=subsample_cap, assume_sorted=True)
    res.category, res.flags = _categorize_fit(res, x, thresholds, seed)
    return res


# -------------------------------------------------------------- baselines

def _ks_cdf(x_sorted: np.ndarray, cdf, cap: int) -> float:
    idx = subsample_indices(x_sorted.size, cap)
    return ks_statistic(x_sorted[idx], np.asarray(cdf(x_sorted[idx])), idx, x_sorted.size)


def fit_baselines(block, subsample_cap: int = DEFAULT_SUBSAMPLE_CAP,
                  assume_sorted: bool = False, dof_range: tuple[float, float] = (2.05, 500.0),
                  n_dof: int = 60) -> dict[str, BaselineFit]:
    """Variance-matched Gaussian, Laplace and Student's t baselines.

    The Student's t degrees of freedom are chosen by a log-spaced scan
    followed by a bounded scalar search around the best scan point, with the
    scale set so the t variance equals the sample variance.
    """
    x = np.asarray(getattr(block, "values", block), dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("cannot fit baselines to an empty block")
    if not assume_sorted:
        x = np.sort(x)
    var = float(np.var(x, ddof=1)) if x.size > 1 else 0.0
    if not var > 0:
        nan = float("nan")
        return {k: BaselineFit(k, nan, None, 1.0, 0.0) for k in ("gaussian", "laplace", "student_t")}
    n = x.size
    out = {}
    for kind, scale in (("gaussian", math.sqrt(var)), ("laplace", math.sqrt(var / 2))):
        ks = _ks_cdf(x, classical_cdf(kind, scale), subsample_cap)
        out[kind] = BaselineFit(kind, scale, None, ks, kolmogorov_sf(ks, n))

    def t_ks(log_nu: float) -> float:
        nu = math.exp(log_nu)
        return _ks_cdf(x, classical_cdf("student_t", math.sqrt(var * (nu - 2) / nu), nu), subsample_cap)

    lo, hi = math.log(dof_range[0]), math.log(dof_range[1])
    grid = np.linspace(lo, hi, n_dof)
    vals = [t_ks(g) for g in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_dof - 1)]
    best_log, best_ks = grid[i], vals[i]
    if b > a:
        opt = optimize.minimize_scalar(t_ks, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-4})
        if opt.fun < best_ks:
            best_log, best_ks = float(opt.x), float(opt.fun)
    nu = math.exp(best_log)
    out["student_t"] = BaselineFit("student_t", math.sqrt(var * (nu - 2) / nu), nu, best_ks,
                                   kolmogorov_sf(best_ks, n))
    return out


# --------------------------------------------------------- categorization

def _mode_count(x_sorted: np.ndarray, prominence: float, max_points: int = 4000) -> int:
    idx = subsample_indices(x_sorted.size, max_points)
    pts = x_sorted[idx]
    lo, hi = np.quantile(pts, [0.01, 0.99])
    if not hi > lo or np.ptp(pts) == 0:
        return 1
    kde = stats.gaussian_kde(pts)
    grid = np.linspace(lo, hi, 512)
    dens = kde(grid)
    peaks, _ = signal.find_peaks(np.concatenate([[0.0], dens, [0.0]]),
                                 prominence=prominence * dens.max())
    return max(1, peaks.size)


def skew_check(values, thresholds: Thresholds | None = None, seed: int = 0) -> SkewTestResult:
    """Bootstrap skew pre-test, on a seeded subsample for very large blocks."""
    th = thresholds or Thresholds()
    x = np.asarray(getattr(values, "values", values), dtype=float).ravel()
    if x.size > th.skew_max_n:
        x = np.random.default_rng(seed).choice(x, th.skew_max_n, replace=False)
    return skew_pretest(x, th.skew_boot, seed, th.skew_level)


def failure_flags(values, thresholds: Thresholds | None = None, seed: int = 0) -> dict[str, bool]:
    """Automated checks for fits no symmetric unimodal prior can rescue.

    ``skew``: the bootstrap skew interval excludes 0.  ``multimodal``: a
    kernel density estimate has two or more prominent peaks.  ``zero_spike``:
    more than ``spike_fraction`` of the values are (numerically) zero.
    """
    th = thresholds or Thresholds()
    x = np.sort(np.asarray(getattr(values, "values", values), dtype=float).ravel())
    if x.size == 0:
        raise EmptySample("no values to check")
    sd = float(np.std(x))
    spike = float(np.mean(np.abs(x) <= th.spike_rel_tol * sd)) if sd > 0 else 1.0
    skew = x.size >= 30 and sd > 0 and skew_check(x, th, seed).excluded
    modes = _mode_count(x, th.mode_prominence) if sd > 0 else 1
    return {"skew": bool(skew), "multimodal": modes >= 2, "zero_spike": spike > th.spike_fraction}


def categorize(ks: float, p_value: float, n: int, flags: dict[str, bool] | None = None,
               thresholds: Thresholds | None = None) -> str:
    """Quantitative fit category.

    ``statistical_pass`` needs ``p > alpha`` and more than
    ``min_statistical_n`` samples; then ``practical_pass`` for
    ``ks < practical`` and ``borderline`` for ``ks < borderline``.  Failures
    are ``trivial`` when any automated flag fired, ``interesting`` otherwise.
    """
    th = thresholds or Thresholds()
    if p_value > th.alpha and n > th.min_statistical_n:
        return "statistical_pass"
    if ks < th.practical:
        return "practical_pass"
    if ks < th.borderline:
        return "borderline"
    if flags and any(flags.values()):
        return "trivial_failure"
    return "interesting_failure"


def _categorize_fit(res: FitResult, x: np.ndarray, th: Thresholds, seed: int):
    cat = categorize(res.ks, res.p_value, res.n, None, th)
    flags: dict[str, bool] = {}
    if cat == "interesting_failure":
        flags = failure_flags(x, th, seed)
        cat = categorize(res.ks, res.p_value, res.n, flags, th)
    return cat, flags


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
