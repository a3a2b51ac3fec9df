"""Between-block independence diagnostics.

Blocks of different sizes are aligned by image: each block contributes one
number per image (its mean absolute coefficient), giving an
``(n_images, n_groups)`` observation matrix.  A bootstrap over images
estimates the covariance of those summaries, which is then scored by its
relative off-diagonal mass and by how far its principal axes sit from the
coordinate axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EigenFailure, InvalidParameter, TooFewObservations, ZeroTrace

__all__ = [
    "IndependenceReport",
    "bootstrap_covariance",
    "rel_frobenius",
    "pca_cosine_distances",
    "per_image_rows",
    "independence_report",
]

MIN_OBSERVATIONS = 30


@dataclass(frozen=True)
class IndependenceReport:
    n_groups: int
    n_observations: int
    rel_frobenius: float
    cosine_distances: tuple[float, ...]
    quantiles: dict[str, float]
    groups: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "n_groups": self.n_groups,
            "n_observations": self.n_observations,
            "rel_frobenius": self.rel_frobenius,
            "cosine": dict(self.quantiles),
            "cosine_distances": list(self.cosine_distances),
            "groups": list(self.groups),
        }


def bootstrap_covariance(rows, n_boot: int = 200, seed: int = 0,
                         groups: Sequence[str] | None = None) -> np.ndarray:
    """Mean sample covariance over bootstrap resamples of observation rows.

    Parameters
    ----------
    rows : array_like, shape (n_obs, n_groups)
        Aligned observations, one column per group.
    n_boot : int
        Number of resamples; replicate ``b`` draws from its own child of
        ``SeedSequence(seed)``.
    groups : sequence of str, optional
        Group ids, used only in error messages.

    Raises
    ------
    TooFewObservations
        With fewer than two groups or fewer than 30 rows.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2:
        raise InvalidParameter("rows must be a 2D (observations, groups) array")
    names = list(groups) if groups is not None else [str(i) for i in range(X.shape[1])]
    if X.shape[1] < 2:
        raise TooFewObservations("need at least two groups", names)
    if X.shape[0] < MIN_OBSERVATIONS:
        raise TooFewObservations(
            f"need >= {MIN_OBSERVATIONS} aligned observations, got {X.shape[0]}", names)
    if n_boot < 1:
        raise InvalidParameter("n_boot must be >= 1")
    n = X.shape[0]
    acc = np.zeros((X.shape[1], X.shape[1]))
    for child in np.random.SeedSequence(seed).spawn(n_boot):
        idx = np.random.default_rng(child).integers(0, n, size=n)
        acc += np.cov(X[idx], rowvar=False)
    C = acc / n_boot
    return 0.5 * (C + C.T)


def rel_frobenius(C) -> float:
    """``||C - diag(C)||_F / trace(C)``."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidParameter("covariance must be square")
    tr = float(np.trace(C))
    if tr == 0.0:
        raise ZeroTrace("covariance has zero trace")
    off = C - np.diag(np.diag(C))
    return float(np.linalg.norm(off, "fro") / tr)


def pca_cosine_distances(C) -> list[float]:
    """Cosine distance of each principal axis to its nearest coordinate axis.

    Axes are ordered by descending eigenvalue.  For eigenvector ``v`` the
    distance is ``1 - max_i |v_i| / ||v||``; it lies in
    ``[0, 1 - 1/sqrt(d)]``.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidParameter("covariance must be square")
    if not np.all(np.isfinite(C)):
        raise EigenFailure("covariance has non-finite entries")
    try:
        w, V = np.linalg.eigh(0.5 * (C + C.T))
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    order = np.argsort(-w, kind="stable")
    V = V[:, order]
    d = 1.0 - np.max(np.abs(V), axis=0) / np.linalg.norm(V, axis=0)
    return [float(max(0.0, v)) for v in d]


def per_image_rows(blocks) -> tuple[np.ndarray, list[str], list[str]]:
    """Mean absolute coefficient per image and block.

    All blocks must list the same images in the same order.

    Returns
    -------
    rows : ndarray, shape (n_images, n_blocks)
    groups : list of str
    image_ids : list of str
    """
    blocks = list(blocks)
    groups = [b.meta.group for b in blocks]
    if len(blocks) < 2:
        raise TooFewObservations("independence diagnostics need at least two blocks", groups)
    ids = list(blocks[0].meta.image_ids)
    bad = [b.meta.group for b in blocks if list(b.meta.image_ids) != ids]
    if bad:
        raise TooFewObservations("blocks do not share an image index", bad)
    cols = []
    for b in blocks:
        chunks = b.per_image()
        cols.append([float(np.mean(np.abs(c))) if c.size else 0.0 for c in chunks])
    return np.array(cols).T, groups, ids


def independence_report(rows, n_boot: int = 200, seed: int = 0,
                        groups: Sequence[str] | None = None) -> IndependenceReport:
    """Bootstrap covariance plus its Frobenius and cosine summaries."""
    X = np.asarray(rows, dtype=float)
    names = tuple(groups) if groups is not None else tuple(str(i) for i in range(X.shape[1]))
    C = bootstrap_covariance(X, n_boot, seed, names)
    dists = pca_cosine_distances(C)
    q = {
        "median": float(np.median(dists)),
        "p90": float(np.percentile(dists, 90)),
        "max": float(np.max(dists)),
    }
    return IndependenceReport(X.shape[1], X.shape[0], rel_frobenius(C), tuple(dists), q, names)
