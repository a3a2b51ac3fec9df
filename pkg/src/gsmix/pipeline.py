"""Preprocessing, coefficient grouping and block persistence.

Images are standardized, transformed, and their coefficients pooled across
the ensemble into flat :class:`CoefficientBlock` objects, one per group
(Haar layer and orientation, Fourier band, or filter).  Each block is treated
downstream as i.i.d. draws from a single prior.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BlockFormatError, EmptySample, InvalidParameter, PlanMismatch
from .ks import ks_two_sample
from .transforms import (
    ORIENTATIONS_2D,
    FilterBank,
    FourierBandPartition,
    ImageTensor,
    apply_filter_bank,
    fourier_coefficients,
    haar_transform,
    partition_bands,
)

__all__ = [
    "Standardized",
    "standardize",
    "BlockMeta",
    "CoefficientBlock",
    "symmetrize",
    "GroupingPlan",
    "PROFILES",
    "profile_plan",
    "TransformedImage",
    "transform_image",
    "fourier_band_partition",
    "assemble_blocks",
    "ScreenResult",
    "exchangeability_screen",
    "block_to_bytes",
    "block_from_bytes",
    "write_block",
    "read_block",
    "block_filename",
]

BLOCK_MAGIC = b"GSMB"
BLOCK_VERSION = 1


# ----------------------------------------------------------- standardization

@dataclass(frozen=True)
class Standardized:
    """A standardized image with the statistics needed to undo it.

    ``stats`` holds one ``(channel, origin, mean, std)`` tuple per scope
    (the whole channel, or one patch).  A scope with zero spread is only
    centered and marks the image ``degenerate``.
    """

    image: ImageTensor
    stats: tuple[tuple[int, tuple[int, ...], float, float], ...]
    degenerate: bool
    step: tuple[int, ...] = ()

    def invert(self) -> ImageTensor:
        """Undo the standardization (constant scopes come back constant)."""
        data = self.image.data.copy()
        step = self.step or self.image.dims
        for ch, origin, mean, std in self.stats:
            sl = tuple(slice(o, o + s) for o, s in zip(origin, step))
            data[ch][sl] = data[ch][sl] * (std if std > 0 else 1.0) + mean
        return ImageTensor(data, self.image.provenance)


def standardize(img: ImageTensor, mode: str = "per_image", patch_size: int | None = None) -> Standardized:
    """Center and scale each channel (or each patch) to zero mean, unit std.

    Parameters
    ----------
    img : ImageTensor
    mode : {"per_image", "per_patch"}
    patch_size : int, optional
        Edge length of the square (cubic) patches for ``per_patch``; edge
        patches may be smaller.
    """
    if mode not in ("per_image", "per_patch"):
        raise InvalidParameter(f"unknown standardization mode {mode!r}")
    if mode == "per_patch" and (patch_size is None or patch_size < 2):
        raise InvalidParameter("per_patch standardization needs patch_size >= 2")
    data = img.data.copy()
    dims = img.dims
    step = dims if mode == "per_image" else tuple(patch_size for _ in dims)
    grid = [range(0, n, s) for n, s in zip(dims, step)]
    stats = []
    degenerate = False
    for ch in range(img.channels):
        for origin in product(*grid):
            sl = tuple(slice(o, o + s) for o, s in zip(origin, step))
            view = data[ch][sl]
            mean = float(view.mean())
            std = float(view.std())
            if std > 0 and std > 1e-12 * max(1.0, abs(mean)):
                data[ch][sl] = (view - mean) / std
            else:
                std = 0.0
                degenerate = True
                data[ch][sl] = 0.0
            stats.append((ch, tuple(int(o) for o in origin), mean, std))
    return Standardized(ImageTensor(data, img.provenance), tuple(stats), degenerate, tuple(step))


# ------------------------------------------------------------------- blocks

@dataclass(frozen=True)
class BlockMeta:
    """Provenance of a coefficient block.

    ``image_counts`` gives the number of coefficients each image contributed,
    in concatenation order; for a symmetrized block they describe the first
    (un-negated) half.
    """

    dataset: str
    transform: str
    group: str
    channel: int | None = None
    n_images: int = 0
    symmetrized: bool = False
    degenerate: bool = False
    image_ids: tuple[str, ...] = ()
    image_counts: tuple[int, ...] = ()
    sorted: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["image_ids"] = list(self.image_ids)
        d["image_counts"] = list(self.image_counts)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> BlockMeta:
        d = dict(d)
        d["image_ids"] = tuple(d.get("image_ids", ()))
        d["image_counts"] = tuple(int(c) for c in d.get("image_counts", ()))
        d["extra"] = dict(d.get("extra", {}))
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class CoefficientBlock:
    values: np.ndarray
    meta: BlockMeta

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise InvalidParameter(f"block {self.meta.group}: non-finite coefficients")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def per_image(self) -> list[np.ndarray]:
        """Split the (un-negated) values back into per-image chunks."""
        if self.meta.sorted:
            raise BlockFormatError(f"block {self.meta.group} was sorted on write; image order lost")
        counts = np.asarray(self.meta.image_counts, dtype=np.int64)
        if counts.sum() > self.n:
            raise BlockFormatError(f"block {self.meta.group}: image counts exceed value count")
        return np.split(self.values[: counts.sum()], np.cumsum(counts)[:-1])


def symmetrize(block: CoefficientBlock) -> CoefficientBlock:
    """Append the negated values; the result has sample skew 0."""
    v = block.values
    return CoefficientBlock(np.concatenate([v, -v]), replace(block.meta, symmetrized=True))


# -------------------------------------------------------------------- plans

@dataclass(frozen=True)
class GroupingPlan:
    merge_real_imag: bool = True
    merge_horizontal_vertical: bool = False
    per_layer: bool = True
    per_filter: bool = True
    band_partition: FourierBandPartition | None = None
    symmetrize: bool = False
    standardize_mode: str = "per_image"
    patch_size: int | None = None
    allow_fourier: bool = True
    n_layers: int = 5
    band_ks_threshold: float = 0.01
    band_min_samples: int = 100
    band_alpha: float | None = 0.01
    grayscale: bool = False

    def check(self, transform: str) -> None:
        """Raise PlanMismatch if the plan cannot group this transform."""
        if transform == "haar" and self.n_layers < 2:
            raise PlanMismatch("Haar grouping needs n_layers >= 2 (layer 1 is the approximation)")
        if transform == "haar" and not self.per_layer:
            raise PlanMismatch("Haar coefficients are grouped per layer; per_layer must be set")
        if transform == "filterbank" and not self.per_filter:
            raise PlanMismatch("filter-bank coefficients are grouped per filter; per_filter must be set")
        if transform == "fourier" and not self.allow_fourier:
            raise PlanMismatch("this grouping profile does not allow the Fourier transform")
        if transform not in ("haar", "fourier", "filterbank"):
            raise PlanMismatch(f"unknown transform {transform!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_partition"] = None if self.band_partition is None else self.band_partition.to_dict()
        return d


PROFILES = {
    "medical": dict(symmetrize=True, merge_horizontal_vertical=False, allow_fourier=False),
    "remote_sensing": dict(symmetrize=False, merge_horizontal_vertical=True,
                           standardize_mode="per_patch", patch_size=256, allow_fourier=True),
    "natural": dict(symmetrize=False, merge_horizontal_vertical=False, allow_fourier=False),
}


def profile_plan(name: str, **overrides) -> GroupingPlan:
    """Grouping plan for a dataset profile, with optional overrides.

    ``medical`` symmetrizes and keeps orientations apart, ``remote_sensing``
    merges horizontal with vertical details and standardizes per patch,
    ``natural`` keeps orientations apart.  Only ``remote_sensing`` admits the
    Fourier transform: the others have a canonical orientation, so pooling
    over all orientations of a wavelength is not justified.
    """
    if name == "custom":
        return GroupingPlan(**overrides)
    if name not in PROFILES:
        raise InvalidParameter(f"unknown profile {name!r}; choose from {sorted(PROFILES)} or custom")
    plan = GroupingPlan(**{**PROFILES[name], **overrides})
    if name == "medical" and (not plan.symmetrize or plan.merge_horizontal_vertical):
        raise InvalidParameter("medical profile requires symmetrize on and H/V merge off")
    return plan


# ------------------------------------------------------------- transforming

@dataclass
class TransformedImage:
    """Transform output for one image: one entry per channel.

    Filter-bank outputs sum over channels and so carry a single entry
    mapping filter id to response.
    """

    image_id: str
    transform: str
    channels: list
    degenerate: bool = False
    shape: tuple[int, ...] = ()


def transform_image(img: ImageTensor, transform: str, plan: GroupingPlan,
                    bank: FilterBank | None = None, image_id: str | None = None) -> TransformedImage:
    """Standardize and transform one image according to ``plan``."""
    plan.check(transform)
    if plan.grayscale:
        img = img.to_grayscale()
    std = standardize(img, plan.standardize_mode, plan.patch_size)
    data = std.image
    image_id = image_id if image_id is not None else img.provenance
    if transform == "haar":
        outs = [haar_transform(data.plane(c), plan.n_layers - 1) for c in range(data.channels)]
    elif transform == "fourier":
        if len(data.dims) != 2:
            raise PlanMismatch("Fourier grouping supports 2D images only")
        outs = [fourier_coefficients(data.plane(c)) for c in range(data.channels)]
    else:
        if bank is None:
            raise PlanMismatch("filterbank transform needs a FilterBank")
        if len(data.dims) != 2:
            raise PlanMismatch("filter banks apply to 2D images only")
        outs = [apply_filter_bank(data, bank)]
    return TransformedImage(image_id, transform, outs, std.degenerate, tuple(data.dims))


def _haar_groups(decomp, plan: GroupingPlan) -> dict[tuple[int, str], list[np.ndarray]]:
    groups: dict[tuple[int, str], list[np.ndarray]] = {}
    for layer in range(2, decomp.n_levels + 2):
        coeffs = decomp.layer(layer)
        for code in sorted(coeffs):
            if decomp.ndim == 2:
                name = ORIENTATIONS_2D[code]
                if plan.merge_horizontal_vertical and name in ("horizontal", "vertical"):
                    name = "horizontal_vertical"
            else:
                name = code
            groups.setdefault((layer, name), []).append(coeffs[code].ravel())
    return groups


def _haar_order(key: tuple[int, str]) -> tuple:
    rank = {"horizontal": 0, "horizontal_vertical": 0, "vertical": 1, "diagonal": 2}
    return key[0], rank.get(key[1], 3), key[1]


def fourier_band_partition(outputs: Sequence[TransformedImage], plan: GroupingPlan) -> FourierBandPartition:
    """The plan's band partition, or one computed from the pooled ensemble."""
    if plan.band_partition is not None:
        return plan.band_partition
    first = outputs[0].channels[0]
    reals = np.array([c.real for t in outputs for c in t.channels])
    imags = np.array([c.imag for t in outputs for c in t.channels])
    samples = [np.concatenate([reals[:, i], imags[:, i]]) for i in range(first.wavelength.size)]
    return partition_bands(first.wavelength, samples, plan.band_ks_threshold,
                           plan.band_min_samples, alpha=plan.band_alpha)


def assemble_blocks(outputs: Sequence[TransformedImage], plan: GroupingPlan,
                    dataset: str = "dataset") -> list[CoefficientBlock]:
    """Pool per-image transform outputs into blocks.

    Values are concatenated in image order and, within an image, in
    coefficient order.  Every retained coefficient lands in exactly one
    block; Fourier coefficients in discarded bands are dropped.

    Raises
    ------
    PlanMismatch
        If outputs mix transforms or shapes, or the plan does not fit.
    """
    if not outputs:
        raise EmptySample("no transform outputs to assemble")
    transform = outputs[0].transform
    plan.check(transform)
    if any(t.transform != transform for t in outputs):
        raise PlanMismatch("all outputs must come from the same transform")
    if any(len(t.channels) != len(outputs[0].channels) for t in outputs):
        raise PlanMismatch("all outputs must have the same channel count")
    ids = tuple(t.image_id for t in outputs)
    degenerate = any(t.degenerate for t in outputs)

    # key -> (meta kwargs, per-image chunks)
    pooled: dict[tuple, tuple[dict, list[np.ndarray]]] = {}

    def add(key, meta_kw, chunk):
        pooled.setdefault(key, (meta_kw, []))[1].append(chunk)

    if transform == "haar":
        for t in outputs:
            for ch, dec in enumerate(t.channels):
                if dec.n_levels != outputs[0].channels[0].n_levels or dec.shape != outputs[0].channels[0].shape:
                    raise PlanMismatch("Haar decompositions differ in depth or shape")
                for (layer, orient), parts in sorted(_haar_groups(dec, plan).items(), key=lambda kv: _haar_order(kv[0])):
                    key = (_haar_order((layer, orient)), ch)
                    add(key, dict(group=f"haar/L{layer}/{orient}/c{ch}", channel=ch,
                                  extra={"layer": layer, "orientation": orient}),
                        np.concatenate(parts))
    elif transform == "fourier":
        if len({t.shape for t in outputs}) != 1:
            raise PlanMismatch("Fourier band grouping needs a common image shape")
        part = fourier_band_partition(outputs, plan)
        band_of = np.asarray(part.band_ids)
        if band_of.size != outputs[0].channels[0].wavelength.size:
            raise PlanMismatch("band partition does not match the frequency grid")
        bands = sorted(set(band_of.tolist()) - {0})
        members = {b: np.nonzero(band_of == b)[0] for b in bands}
        for t in outputs:
            for ch, fc in enumerate(t.channels):
                for b in bands:
                    idx = members[b]
                    extra = {"band": b}
                    if plan.merge_real_imag:
                        add((b, ch, ""), dict(group=f"fourier/B{b}/c{ch}", channel=ch, extra=extra),
                            np.concatenate([fc.real[idx], fc.imag[idx]]))
                    else:
                        add((b, ch, "re"), dict(group=f"fourier/B{b}/re/c{ch}", channel=ch,
                                                extra={**extra, "part": "real"}), fc.real[idx])
                        add((b, ch, "im"), dict(group=f"fourier/B{b}/im/c{ch}", channel=ch,
                                                extra={**extra, "part": "imag"}), fc.imag[idx])
    else:
        for t in outputs:
            responses = t.channels[0]
            for fid in responses:
                add((fid,), dict(group=f"filter/{fid}", channel=None, extra={"filter": fid}),
                    responses[fid].ravel())

    blocks = []
    for key in sorted(pooled):
        meta_kw, chunks = pooled[key]
        if len(chunks) != len(outputs):
            raise PlanMismatch(f"group {meta_kw['group']} missing from some images")
        meta = BlockMeta(dataset=dataset, transform=transform, n_images=len(outputs),
                         degenerate=degenerate, image_ids=ids,
                         image_counts=tuple(c.size for c in chunks), **meta_kw)
        block = CoefficientBlock(np.concatenate(chunks), meta)
        blocks.append(symmetrize(block) if plan.symmetrize else block)
    return blocks


# ---------------------------------------------------------------- screening

@dataclass(frozen=True)
class ScreenResult:
    statistic: float
    threshold: float

    @property
    def exchangeable(self) -> bool:
        return self.statistic < self.threshold

    @property
    def verdict(self) -> str:
        return "exchangeable" if self.exchangeable else "distinct"


def exchangeability_screen(a, b, threshold: float = 0.01) -> ScreenResult:
    """Two-sample KS screen; exchangeable iff the statistic is below ``threshold``."""
    va = a.values if isinstance(a, CoefficientBlock) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, CoefficientBlock) else np.asarray(b, dtype=float)
    return ScreenResult(ks_two_sample(va, vb).statistic, threshold)


# -------------------------------------------------------------- persistence

def block_to_bytes(block: CoefficientBlock, sort: bool = False) -> bytes:
    values = np.sort(block.values) if sort else block.values
    meta = replace(block.meta, sorted=bool(sort or block.meta.sorted))
    meta_bytes = json.dumps(meta.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    head = BLOCK_MAGIC + struct.pack("<HI", BLOCK_VERSION, len(meta_bytes))
    return b"".join([head, meta_bytes, struct.pack("<Q", values.size), values.astype("<f4").tobytes()])


def block_from_bytes(data: bytes) -> CoefficientBlock:
    if len(data) < 10 or data[:4] != BLOCK_MAGIC:
        raise BlockFormatError("not a GSMB block file")
    version, meta_len = struct.unpack_from("<HI", data, 4)
    if version != BLOCK_VERSION:
        raise BlockFormatError(f"unsupported block version {version}")
    off = 10 + meta_len
    if len(data) < off + 8:
        raise BlockFormatError("truncated block header")
    try:
        meta = BlockMeta.from_dict(json.loads(data[10:off].decode("utf-8")))
    except (ValueError, TypeError) as exc:
        raise BlockFormatError(f"bad block metadata: {exc}") from exc
    (count,) = struct.unpack_from("<Q", data, off)
    payload = data[off + 8:]
    if len(payload) != 4 * count:
        raise BlockFormatError(f"expected {count} values, found {len(payload) // 4}")
    return CoefficientBlock(np.frombuffer(payload, dtype="<f4").astype(float), meta)


def write_block(path, block: CoefficientBlock, sort: bool = False) -> None:
    Path(path).write_bytes(block_to_bytes(block, sort))


def read_block(path) -> CoefficientBlock:
    return block_from_bytes(Path(path).read_bytes())


def block_filename(meta: BlockMeta) -> str:
    """Filesystem-safe name derived from the dataset and group label."""
    stem = f"{meta.dataset}__{meta.group}"
    return re.sub(r"[^A-Za-z0-9._-]+", "_", stem.replace("/", "__")) + ".gsmb"
