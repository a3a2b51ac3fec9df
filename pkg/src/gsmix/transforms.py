"""Sparsifying transforms: multilevel Haar (2D/3D), Fourier, and filter banks.

All transforms act on a single real plane or volume.  Multi-channel inputs
are handled one channel at a time by the caller (see :mod:`gsmix.pipeline`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import (
    DegeneratePartition,
    InvalidParameter,
    KernelLargerThanImage,
    TooSmallImage,
)
from .ks import ks_two_sample

__all__ = [
    "ImageTensor",
    "HaarDecomposition",
    "ORIENTATIONS_2D",
    "haar_transform",
    "haar_inverse",
    "FourierCoefficients",
    "fourier_transform",
    "fourier_coefficients",
    "FourierBandPartition",
    "partition_bands",
    "Filter",
    "FilterBank",
    "FILTER_CATEGORIES",
    "apply_filter_bank",
    "load_image",
    "load_volume",
    "save_volume",
]

_SQRT_HALF = math.sqrt(0.5)
_LUMA = np.array([0.299, 0.587, 0.114])

# per-axis codes over (y, x): 'a' average, 'd' difference
ORIENTATIONS_2D = {"da": "horizontal", "ad": "vertical", "dd": "diagonal"}


@dataclass(frozen=True)
class ImageTensor:
    """A 2D image or 3D volume stored channel-first as ``(channels, *dims)``."""

    data: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim not in (3, 4):
            raise InvalidParameter("ImageTensor data must be (channels, *dims) with 2 or 3 dims")
        if any(s < 2 for s in data.shape[1:]):
            raise TooSmallImage(f"every extent must be >= 2, got {data.shape[1:]}")
        if not np.all(np.isfinite(data)):
            raise InvalidParameter("image contains non-finite values")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr, provenance: str = "") -> ImageTensor:
        """Wrap a single-channel 2D/3D array."""
        return cls(np.asarray(arr, dtype=float)[None], provenance)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape[1:]

    def plane(self, channel: int = 0) -> np.ndarray:
        return self.data[channel]

    def to_grayscale(self) -> ImageTensor:
        """Luma grayscale (ITU-R 601 weights) of a 3-channel image."""
        if self.channels == 1:
            return self
        if self.channels != 3:
            raise InvalidParameter("grayscale conversion needs 1 or 3 channels")
        gray = np.tensordot(_LUMA, self.data, axes=(0, 0))
        return ImageTensor(gray[None], self.provenance)


# --------------------------------------------------------------------- Haar

@dataclass
class HaarDecomposition:
    """Multilevel orthonormal Haar analysis of one plane or volume.

    ``details[k]`` maps orientation codes to arrays at decomposition level
    ``k + 1`` (``k = 0`` is the finest).  Codes spell average/difference per
    axis in array order, e.g. ``"da"`` differences along ``y`` and averages
    along ``x``.  Layer numbering runs coarse to fine: layer 1 is the
    approximation and layers ``2 .. n_levels + 1`` hold details.
    """

    approximation: np.ndarray
    details: list[dict[str, np.ndarray]]
    shape: tuple[int, ...]
    cropped_from: tuple[int, ...]

    @property
    def n_levels(self) -> int:
        return len(self.details)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def layer(self, k: int) -> dict[str, np.ndarray]:
        """Coefficients of layer ``k`` (1 = approximation, coarse to fine)."""
        if k == 1:
            return {"a" * self.ndim: self.approximation}
        if not 2 <= k <= self.n_levels + 1:
            raise IndexError(f"layer {k} outside 1..{self.n_levels + 1}")
        return self.details[self.n_levels + 1 - k]

    def layers(self) -> dict[int, dict[str, np.ndarray]]:
        return {k: self.layer(k) for k in range(1, self.n_levels + 2)}

    def energy(self) -> float:
        tot = float(np.sum(self.approximation ** 2))
        for lvl in self.details:
            tot += sum(float(np.sum(v ** 2)) for v in lvl.values())
        return tot


def _orientation_codes(ndim: int) -> list[str]:
    return ["".join(c) for c in product("ad", repeat=ndim) if "d" in c]


def _haar_step(arr: np.ndarray) -> dict[str, np.ndarray]:
    parts = {"": arr}
    for axis in range(arr.ndim):
        nxt = {}
        for code, a in parts.items():
            even = np.take(a, np.arange(0, a.shape[axis], 2), axis=axis)
            odd = np.take(a, np.arange(1, a.shape[axis], 2), axis=axis)
            nxt[code + "a"] = (even + odd) * _SQRT_HALF
            nxt[code + "d"] = (even - odd) * _SQRT_HALF
        parts = nxt
    return parts


def _haar_unstep(parts: dict[str, np.ndarray], ndim: int) -> np.ndarray:
    for axis in reversed(range(ndim)):
        merged = {}
        for code in {c[:axis] for c in parts}:
            a, d = parts[code + "a"], parts[code + "d"]
            shape = list(a.shape)
            shape[axis] *= 2
            out = np.empty(shape)
            even = [slice(None)] * ndim
            odd = [slice(None)] * ndim
            even[axis] = slice(0, None, 2)
            odd[axis] = slice(1, None, 2)
            out[tuple(even)] = (a + d) * _SQRT_HALF
            out[tuple(odd)] = (a - d) * _SQRT_HALF
            merged[code] = out
        parts = merged
    return parts[""]


def haar_transform(img, n_levels: int) -> HaarDecomposition:
    """Multilevel orthonormal Haar analysis.

    Extents that are not multiples of ``2**n_levels`` are cropped (from the
    high-index end) to the largest multiple that is.

    Parameters
    ----------
    img : ndarray or ImageTensor
        A 2D plane or 3D volume; an ImageTensor must be single-channel.
    n_levels : int
        Number of analysis levels.

    Raises
    ------
    TooSmallImage
        If some extent is below ``2**n_levels``.
    """
    if isinstance(img, ImageTensor):
        if img.channels != 1:
            raise InvalidParameter("haar_transform takes one channel; use ImageTensor.plane()")
        img = img.plane(0)
    arr = np.asarray(img, dtype=float)
    if arr.ndim not in (2, 3):
        raise InvalidParameter("Haar transform supports 2D and 3D arrays")
    if n_levels < 1:
        raise InvalidParameter("n_levels must be >= 1")
    block = 2 ** n_levels
    if any(s < block for s in arr.shape):
        raise TooSmallImage(f"extents {arr.shape} too small for {n_levels} levels")
    crop = tuple((s // block) * block for s in arr.shape)
    approx = arr[tuple(slice(0, c) for c in crop)]
    details = []
    for _ in range(n_levels):
        parts = _haar_step(approx)
        approx = parts.pop("a" * arr.ndim)
        details.append({c: parts[c] for c in _orientation_codes(arr.ndim)})
    return HaarDecomposition(approx, details, crop, arr.shape)


def haar_inverse(dec: HaarDecomposition) -> np.ndarray:
    """Reconstruct the (cropped) input from a decomposition."""
    approx = dec.approximation
    key = "a" * dec.ndim
    for lvl in reversed(dec.details):
        approx = _haar_unstep({key: approx, **lvl}, dec.ndim)
    return approx


# ------------------------------------------------------------------ Fourier

def fourier_transform(plane) -> np.ndarray:
    """Unitary 2D DFT of a real plane."""
    arr = np.asarray(plane, dtype=float)
    if arr.ndim != 2:
        raise InvalidParameter("Fourier transform takes a single 2D plane")
    return np.fft.fft2(arr, norm="ortho")


@dataclass
class FourierCoefficients:
    """Half-plane Fourier coefficients of one plane.

    One entry per conjugate pair; DC and self-conjugate frequencies are
    dropped.  ``freq`` holds signed (fy, fx) in cycles per pixel.
    """

    freq: np.ndarray
    wavelength: np.ndarray
    real: np.ndarray
    imag: np.ndarray
    index: np.ndarray  # flat index into the full grid


def _half_plane_mask(shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    ky, kx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    flat = ky * w + kx
    conj = ((-ky) % h) * w + (-kx) % w
    return flat < conj


def fourier_coefficients(plane) -> FourierCoefficients:
    """Unitary DFT restricted to one representative per conjugate pair."""
    F = fourier_transform(plane)
    h, w = F.shape
    mask = _half_plane_mask((h, w))
    ky, kx = np.nonzero(mask)
    fy = np.where(ky <= h // 2, ky, ky - h) / h
    fx = np.where(kx <= w // 2, kx, kx - w) / w
    vals = F[ky, kx]
    return FourierCoefficients(
        freq=np.column_stack([fy, fx]),
        wavelength=1.0 / np.hypot(fy, fx),
        real=vals.real.copy(),
        imag=vals.imag.copy(),
        index=ky * w + kx,
    )


@dataclass(frozen=True)
class FourierBandPartition:
    """Wavelength bands produced by recursive exchangeability bisection.

    ``split_points`` are the recorded band boundaries and ``band_edges`` their
    least-squares geometric fit, both in decreasing wavelength order.  Band
    ids count from 1 at the longest retained wavelengths; 0 marks a
    frequency whose band was discarded for lack of samples.
    """

    band_edges: tuple[float, ...]
    split_points: tuple[float, ...]
    geometric_ratio: float
    fit_residual: float
    band_ids: tuple[int, ...]
    leaf_sizes: tuple[int, ...]
    wavelength_range: tuple[float, float]

    @property
    def band_sizes(self) -> tuple[int, ...]:
        return tuple(s for s in self.leaf_sizes if s)

    @property
    def n_bands(self) -> int:
        return len(self.band_sizes)

    def assign(self, wavelengths) -> np.ndarray:
        """Band id for arbitrary wavelengths (0 for discarded leaves)."""
        wl = np.asarray(wavelengths, dtype=float)
        cuts = np.sort(np.asarray(self.split_points))
        leaf = len(cuts) - np.searchsorted(cuts, wl, side="right")
        ids = np.cumsum([1 if s else 0 for s in self.leaf_sizes]) * (np.asarray(self.leaf_sizes) > 0)
        return ids[leaf]

    def to_dict(self) -> dict:
        return {
            "band_edges": list(self.band_edges),
            "split_points": list(self.split_points),
            "geometric_ratio": self.geometric_ratio,
            "fit_residual": self.fit_residual,
            "band_sizes": list(self.band_sizes),
            "leaf_sizes": list(self.leaf_sizes),
            "wavelength_range": list(self.wavelength_range),
        }


def _pool(values: list[np.ndarray], lo: int, hi: int) -> np.ndarray:
    return np.concatenate(values[lo:hi]) if hi > lo else np.empty(0)


def partition_bands(wavelengths, samples: Sequence, ks_threshold: float = 0.01,
                    min_band_samples: int = 100, alpha: float | None = None,
                    merge: bool = True, max_depth: int = 24) -> FourierBandPartition:
    """Split the wavelength axis into approximately exchangeable bands.

    An interval is bisected at its log-wavelength midpoint and the two
    halves' pooled coefficients are compared with the two-sample KS
    statistic.  Recursion continues while the statistic exceeds
    ``ks_threshold`` and both halves hold at least ``min_band_samples``
    values.  Midpoints sit on a dyadic lattice of the root log-range, so the
    partition does not depend on where individual frequencies fall.

    Parameters
    ----------
    wavelengths : array_like, shape (m,)
        One wavelength per frequency vector.
    samples : sequence of array_like
        Pooled coefficient values (all images, real and imaginary parts) for
        each frequency vector.
    ks_threshold : float
        Halves with a statistic at or below this are exchangeable.
    min_band_samples : int
        Sample floor for a band.
    alpha : float, optional
        If given, halves whose two-sample p-value is at least ``alpha`` are
        also treated as exchangeable.  Small pools cannot resolve a 0.01
        statistic, so without it recursion tends to run down to the floor.
    merge : bool
        Fuse adjacent leaves that are exchangeable after recursion, so
        intermediate bisection points inside a homogeneous stretch are not
        reported as boundaries.

    Returns
    -------
    FourierBandPartition
        The remaining boundaries are fitted to a geometric sequence by least
        squares on logs; ``fit_residual`` is the RMS log residual divided by
        the log-range of the wavelengths.
    """
    wl = np.asarray(wavelengths, dtype=float)
    if wl.ndim != 1 or len(samples) != wl.size:
        raise InvalidParameter("need one sample array per wavelength")
    if np.any(~np.isfinite(wl)) or np.any(wl <= 0):
        raise InvalidParameter("wavelengths must be positive and finite")
    order = np.lexsort((np.arange(wl.size), wl))  # by wavelength, then index
    wl_sorted = wl[order]
    vals = [np.asarray(samples[i], dtype=float).ravel() for i in order]
    cum = np.concatenate([[0], np.cumsum([v.size for v in vals])])
    total = int(cum[-1])
    if total < min_band_samples:
        raise DegeneratePartition(
            f"only {total} coefficients in total, below the {min_band_samples}-sample floor")

    def exchangeable(x: np.ndarray, y: np.ndarray) -> bool:
        res = ks_two_sample(x, y)
        return res.statistic <= ks_threshold or (alpha is not None and res.p_value >= alpha)

    logs = np.log(wl_sorted)
    leaves: list[tuple[int, int]] = []
    cut_at: dict[int, float] = {}  # sorted-index boundary -> wavelength
    stack = [(0, wl.size, float(logs[0]), float(logs[-1]), 0)]
    while stack:
        lo, hi, a, b, depth = stack.pop()
        if depth >= max_depth or logs[hi - 1] <= logs[lo]:
            leaves.append((lo, hi))
            continue
        mid = 0.5 * (a + b)
        k = lo + int(np.searchsorted(logs[lo:hi], mid, side="left"))
        if k == lo:
            stack.append((lo, hi, mid, b, depth + 1))
            continue
        if k == hi:
            stack.append((lo, hi, a, mid, depth + 1))
            continue
        if (cum[k] - cum[lo] < min_band_samples or cum[hi] - cum[k] < min_band_samples
                or exchangeable(_pool(vals, lo, k), _pool(vals, k, hi))):
            leaves.append((lo, hi))
            continue
        cut_at[k] = math.exp(mid)
        stack.append((k, hi, mid, b, depth + 1))
        stack.append((lo, k, a, mid, depth + 1))
    leaves.sort()

    if merge and len(leaves) > 1:
        fused = [leaves[0]]
        for lo, hi in leaves[1:]:
            plo, phi = fused[-1]
            if exchangeable(_pool(vals, plo, phi), _pool(vals, lo, hi)):
                del cut_at[lo]
                fused[-1] = (plo, hi)
            else:
                fused.append((lo, hi))
        leaves = fused
    leaves = leaves[::-1]  # long wavelength first

    sizes = [int(cum[hi] - cum[lo]) for lo, hi in leaves]
    kept = [s if s >= min_band_samples else 0 for s in sizes]
    ids_sorted = np.zeros(wl.size, dtype=int)
    b = 0
    for (lo, hi), size in zip(leaves, kept):
        if size:
            b += 1
            ids_sorted[lo:hi] = b
    band_ids = np.empty(wl.size, dtype=int)
    band_ids[order] = ids_sorted

    cuts = np.array(sorted(cut_at.values(), reverse=True))
    ratio, residual = float("nan"), 0.0
    edges = tuple(float(c) for c in cuts)
    if cuts.size >= 2:
        idx = np.arange(cuts.size)
        lc = np.log(cuts)
        slope, intercept = np.polyfit(idx, lc, 1)
        fit = intercept + slope * idx
        span = float(logs[-1] - logs[0])
        ratio = float(math.exp(-slope))
        residual = float(np.sqrt(np.mean((lc - fit) ** 2))) / span if span > 0 else 0.0
        edges = tuple(float(e) for e in np.exp(fit))
    return FourierBandPartition(
        band_edges=edges,
        split_points=tuple(float(c) for c in cuts),
        geometric_ratio=ratio,
        fit_residual=residual,
        band_ids=tuple(int(i) for i in band_ids),
        leaf_sizes=tuple(kept),
        wavelength_range=(float(wl_sorted[0]), float(wl_sorted[-1])),
    )


# ------------------------------------------------------------- filter banks

FILTER_CATEGORIES = ("single_edge", "multi_edge", "eye", "color", "texture", "blob", "other")


@dataclass(frozen=True)
class Filter:
    id: str
    category: str
    weights: np.ndarray  # (channels, height, width)
    stride: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 2:
            w = w[None]
        if w.ndim != 3 or w.size == 0:
            raise InvalidParameter(f"filter {self.id}: weights must be (channels, h, w)")
        if not np.all(np.isfinite(w)):
            raise InvalidParameter(f"filter {self.id}: non-finite weights")
        if self.stride < 1:
            raise InvalidParameter(f"filter {self.id}: stride must be >= 1")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class FilterBank:
    filters: tuple[Filter, ...]
    source: str = ""
    categories: tuple[str, ...] = FILTER_CATEGORIES

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        ids = [f.id for f in self.filters]
        if len(set(ids)) != len(ids):
            raise InvalidParameter("filter ids must be unique")
        bad = sorted({f.category for f in self.filters} - set(self.categories))
        if bad:
            raise InvalidParameter(f"unknown filter categories: {bad}")

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "filters": [
                {
                    "id": f.id,
                    "category": f.category,
                    "height": f.weights.shape[1],
                    "width": f.weights.shape[2],
                    "channels": f.weights.shape[0],
                    "stride": f.stride,
                    "weights": f.weights.ravel().tolist(),
                }
                for f in self.filters
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, source: str = "") -> FilterBank:
        doc = json.loads(text)
        if doc.get("version") != 1:
            raise InvalidParameter(f"unsupported filter bank version {doc.get('version')!r}")
        filters = []
        for f in doc["filters"]:
            shape = (int(f["channels"]), int(f["height"]), int(f["width"]))
            w = np.asarray(f["weights"], dtype=float)
            if w.size != math.prod(shape):
                raise InvalidParameter(f"filter {f['id']}: {w.size} weights for shape {shape}")
            filters.append(Filter(str(f["id"]), f["category"], w.reshape(shape), int(f.get("stride", 1))))
        return cls(tuple(filters), source)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> FilterBank:
        return cls.from_json(Path(path).read_text(), source=Path(path).name)


def apply_filter_bank(img, bank: FilterBank) -> dict[str, np.ndarray]:
    """Valid-mode cross-correlation of each filter with the image.

    Channels are summed, then the output is subsampled at the filter stride.
    Returns a mapping from filter id to the 2D response.
    """
    data = img.data if isinstance(img, ImageTensor) else np.asarray(img, dtype=float)
    if data.ndim == 2:
        data = data[None]
    out = {}
    for f in bank.filters:
        c, kh, kw = f.weights.shape
        if c != data.shape[0]:
            raise InvalidParameter(
                f"filter {f.id} has {c} channels, image has {data.shape[0]}")
        if kh > data.shape[1] or kw > data.shape[2]:
            raise KernelLargerThanImage(
                f"filter {f.id} ({kh}x{kw}) larger than image {data.shape[1:]}")
        acc = sum(signal.correlate(data[i], f.weights[i], mode="valid", method="auto")
                  for i in range(c))
        out[f.id] = np.ascontiguousarray(acc[::f.stride, ::f.stride])
    return out


# ---------------------------------------------------------------------- IO

def load_image(path, grayscale: bool = False) -> ImageTensor:
    """Read an 8/16-bit grayscale or RGB raster into a float ImageTensor."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("RGBA", "P", "LA", "CMYK", "YCbCr"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    arr = arr.astype(float)
    data = arr[None] if arr.ndim == 2 else np.moveaxis(arr, -1, 0)
    out = ImageTensor(data, Path(path).name)
    return out.to_grayscale() if grayscale else out


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def load_volume(path) -> ImageTensor:
    """Read a raw little-endian float32 volume described by ``<path>.json``."""
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    if meta.get("dtype", "f32") != "f32":
        raise InvalidParameter(f"unsupported volume dtype {meta.get('dtype')!r}")
    dims = tuple(int(d) for d in meta["dims"])
    if len(dims) != 3:
        raise InvalidParameter("volume sidecar dims must be [z, y, x]")
    raw = np.fromfile(path, dtype="<f4")
    if raw.size != math.prod(dims):
        raise InvalidParameter(f"{path.name}: {raw.size} values for dims {dims}")
    return ImageTensor(raw.reshape(dims).astype(float)[None], path.name)


def save_volume(path, volume) -> None:
    path = Path(path)
    arr = np.asarray(volume)
    if arr.ndim != 3:
        raise InvalidParameter("volume must be 3D")
    arr.astype("<f4").tofile(path)
    _sidecar(path).write_text(json.dumps({"dims": list(arr.shape), "dtype": "f32"}, sort_keys=True))
