"""Dataset manifests: directory ingestion, synthetic generation, splitting and
batch CLAHE preprocessing."""

from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .clahe import ClaheParams, clahe
from .raster_io import ImageFormatError, encode_image, read_gray, write_image

__all__ = [
    "DatasetError",
    "Sample",
    "DatasetManifest",
    "SynthParams",
    "CLASS_DIRS",
    "ingest_directory",
    "synthesize_image",
    "generate_synthetic_dataset",
    "split_dataset",
    "preprocess_batch",
    "resize_nearest",
    "to_arrays",
    "write_dataset",
]

log = logging.getLogger(__name__)

CLASS_DIRS = ("healthy", "diseased")
IMAGE_SUFFIXES = (".pgm", ".ppm", ".png")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    """One labelled image, either on disk (``path``) or held inline (``raster``)."""

    name: str
    label: int
    path: Path | None = None
    raster: np.ndarray | None = field(default=None, compare=False, repr=False)
    split: str | None = None

    def load(self) -> np.ndarray:
        if self.raster is not None:
            return self.raster
        if self.path is None:
            raise DatasetError(f"sample {self.name} has neither a path nor pixel data")
        return read_gray(self.path)


@dataclass(frozen=True)
class DatasetManifest:
    samples: tuple[Sample, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        labels = {s.label for s in self.samples}
        if not labels <= {0, 1}:
            raise DatasetError(f"labels must be 0 or 1, got {sorted(labels)}")
        if labels != {0, 1}:
            raise DatasetError("both classes must be present")
        names = [s.name for s in self.samples]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate sample names")
        splits = {s.split for s in self.samples}
        if None in splits and len(splits) > 1:
            raise DatasetError("either every sample or no sample carries a split")
        if not splits <= {None, "train", "eval"}:
            raise DatasetError(f"unknown split names {sorted(splits - {None, 'train', 'eval'})}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labels(self) -> list[int]:
        return [s.label for s in self.samples]

    def subset(self, split: str) -> list[Sample]:
        return [s for s in self.samples if s.split == split]


def ingest_directory(root) -> DatasetManifest:
    """Collect images from ``root/healthy`` (label 0) and ``root/diseased`` (label 1).

    Files that do not decode are skipped with a warning.  Samples come out in
    lexicographic path order.
    """
    root = Path(root)
    samples = []
    seen: set[Path] = set()
    for label, cls in enumerate(CLASS_DIRS):
        cdir = root / cls
        if not cdir.is_dir():
            raise DatasetError(f"missing class directory {cdir}")
        found = 0
        for path in sorted(p for p in cdir.iterdir() if p.is_file()):
            resolved = path.resolve()
            if resolved in seen:
                raise DatasetError(f"duplicate image path {path}")
            seen.add(resolved)
            if path.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                read_gray(path)
            except ImageFormatError as exc:
                log.warning("skipping %s: %s", path, exc)
                continue
            samples.append(Sample(name=f"{cls}/{path.name}", label=label, path=path))
            found += 1
        if not found:
            raise DatasetError(f"no decodable images in {cdir}")
    samples.sort(key=lambda s: s.name)
    return DatasetManifest(tuple(samples), {"source": "ingested", "root": str(root)})


@dataclass(frozen=True)
class SynthParams:
    per_class: int = 100
    size: int = 64
    gap: float = 30.0  # width of the foreground intensity band
    noise: float = 4.0  # std of per-pixel noise

    def __post_init__(self):
        if self.per_class < 2:
            raise DatasetError("need at least 2 images per class")
        if self.size < 16:
            raise DatasetError("image size must be at least 16")
        if not self.gap > 0 or self.gap > 120:
            raise DatasetError("contrast gap must lie in (0, 120]")
        if self.noise < 0:
            raise DatasetError("noise level must be non-negative")


def _smooth_field(rng: np.random.Generator, size: int, cells: int) -> np.ndarray:
    coarse = rng.normal(size=(cells + 1, cells + 1))
    t = np.linspace(0, cells, size)
    i = np.minimum(t.astype(int), cells - 1)
    f = t - i
    rows = coarse[i] * (1 - f)[:, None] + coarse[i + 1] * f[:, None]
    return rows[:, i] * (1 - f) + rows[:, i + 1] * f


def synthesize_image(rng: np.random.Generator, label: int, params: SynthParams):
    """One synthetic image and its foreground mask.

    Every image is a dim, low-contrast textured background at a random base
    level.  Diseased images (label 1) add a few blobs whose pixels all fall
    into a band ``params.gap`` wide just below the local background level.
    """
    n = params.size
    base = rng.uniform(60.0, 150.0)
    texture = 0.25 * params.gap * _smooth_field(rng, n, max(2, n // 8))
    img = base + texture + rng.normal(scale=params.noise, size=(n, n)) if params.noise else base + texture
    mask = np.zeros((n, n), dtype=bool)
    if label == 1:
        yy, xx = np.mgrid[0:n, 0:n]
        for _ in range(int(rng.integers(3, 7))):
            cy, cx = rng.uniform(0.1 * n, 0.9 * n, size=2)
            ry, rx = rng.uniform(n / 16, n / 8, size=2)
            mask |= ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        lo = base - params.gap
        fg = lo + 0.5 * params.gap + rng.normal(scale=params.noise + 0.15 * params.gap, size=(n, n))
        img = np.where(mask, np.clip(fg, lo, lo + params.gap), img)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), mask


def generate_synthetic_dataset(params: SynthParams, seed: int) -> DatasetManifest:
    """Seeded, bit-deterministic two-class image set (images held inline)."""
    samples = []
    for label, cls in enumerate(CLASS_DIRS):
        for i in range(params.per_class):
            rng = np.random.default_rng([seed, label, i])
            raster, _ = synthesize_image(rng, label, params)
            samples.append(Sample(name=f"{cls}/{i:04d}.pgm", label=label, raster=raster))
    prov = {"source": "synthetic", "seed": seed, **vars(params)}
    return DatasetManifest(tuple(samples), prov)


def split_dataset(manifest: DatasetManifest, ratio: float, seed: int) -> DatasetManifest:
    """Stratified split: ``floor(ratio * n_c)`` of each class go to train."""
    if not 0 < ratio < 1:
        raise DatasetError(f"split ratio must lie in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    assignment: dict[str, str] = {}
    for label in (0, 1):
        members = [s.name for s in manifest.samples if s.label == label]
        if len(members) < 2:
            raise DatasetError(f"class {label} has fewer than 2 samples")
        n_train = int(np.floor(ratio * len(members)))
        order = rng.permutation(len(members))
        for rank, idx in enumerate(order):
            assignment[members[idx]] = "train" if rank < n_train else "eval"
    samples = tuple(replace(s, split=assignment[s.name]) for s in manifest.samples)
    return DatasetManifest(samples, {**manifest.provenance, "split_ratio": ratio, "split_seed": seed})


def _output_name(sample: Sample) -> str:
    name = Path(sample.name)
    return str(name if name.suffix.lower() == ".png" else name.with_suffix(".pgm"))


def preprocess_batch(
    manifest: DatasetManifest,
    params: ClaheParams | None,
    output_dir=None,
    workers: int = 1,
) -> DatasetManifest:
    """Apply CLAHE to every sample (or pass images through when ``params`` is None).

    With ``output_dir`` the results are written under the samples' relative
    names; in pass-through mode on-disk inputs are copied byte for byte.
    Labels and split assignments are carried over unchanged.
    """
    out_root = Path(output_dir) if output_dir is not None else None
    enhanced = []
    for s in manifest.samples:
        if params is None:
            raster = s.load()
            if out_root is not None:
                if s.path is not None:
                    dest = out_root / s.name
                    dest.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(s.path, dest)
                else:
                    dest = out_root / _output_name(s)
                    dest.parent.mkdir(parents=True, exist_ok=True)
                    dest.write_bytes(encode_image(raster, "pgm"))
                enhanced.append(replace(s, path=dest, raster=raster))
            else:
                enhanced.append(replace(s, raster=raster))
            continue
        raster = clahe(s.load(), params, workers=workers)
        if out_root is not None:
            dest = out_root / _output_name(s)
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_image(dest, raster)
            enhanced.append(replace(s, name=_output_name(s), path=dest, raster=raster))
        else:
            enhanced.append(replace(s, raster=raster))
    prov = dict(manifest.provenance)
    if params is not None:
        prov["clahe"] = {"grid_x": params.grid_x, "grid_y": params.grid_y, "clip_factor": params.clip_factor}
    return DatasetManifest(tuple(enhanced), prov)


def resize_nearest(raster: np.ndarray, size: int) -> np.ndarray:
    h, w = raster.shape
    rows = (np.arange(size) * h) // size
    cols = (np.arange(size) * w) // size
    return raster[rows[:, None], cols]


def to_arrays(samples, size: int = 32):
    """Stack samples into a float batch ``(N, 1, size, size)`` scaled to [0, 1] plus labels."""
    x = np.stack([resize_nearest(s.load(), size) for s in samples]).astype(np.float64) / 127.5 - 1.0
    return x[:, None], np.array([s.label for s in samples], dtype=np.int64)


def write_dataset(manifest: DatasetManifest, root) -> None:
    """Write every sample under ``root/<class>/`` as PGM (the ingestion layout)."""
    root = Path(root)
    for s in manifest.samples:
        dest = root / _output_name(s)
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(encode_image(s.load(), "pgm"))
