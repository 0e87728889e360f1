"""Histograms, global histogram equalization and lookup-table application."""

from __future__ import annotations

import numpy as np

from .raster_io import as_raster

__all__ = [
    "round_half_away",
    "compute_histogram",
    "equalize_mapping",
    "identity_lut",
    "apply_lut",
    "equalize",
]


def round_half_away(x):
    """Round to nearest integer, ties away from zero (numpy rounds ties to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def compute_histogram(raster, region=None) -> np.ndarray:
    """Count pixel intensities into 256 bins.

    ``region`` is an optional ``(x, y, width, height)`` rectangle; it must lie
    inside the raster.
    """
    r = as_raster(raster)
    if region is not None:
        x, y, w, h = (int(v) for v in region)
        if x < 0 or y < 0 or w < 1 or h < 1 or x + w > r.shape[1] or y + h > r.shape[0]:
            raise ValueError(f"region {region} outside raster of size {r.shape[1]}x{r.shape[0]}")
        r = r[y:y + h, x:x + w]
    return np.bincount(r.ravel(), minlength=256).astype(np.int64)


def identity_lut() -> np.ndarray:
    return np.arange(256, dtype=np.uint8)


def equalize_mapping(hist) -> np.ndarray:
    """CDF-based equalization LUT with the lowest occupied bin mapped to 0.

    ``map[v] = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))``, evaluated in
    exact integer arithmetic.  A histogram with all of its mass in one bin
    yields the identity map.
    """
    bins = np.asarray(hist, dtype=np.int64)
    if bins.shape != (256,):
        raise ValueError(f"histogram must have 256 bins, got shape {bins.shape}")
    if (bins < 0).any():
        raise ValueError("histogram counts must be non-negative")
    cdf = np.cumsum(bins)
    n = int(cdf[-1])
    if n == 0:
        raise ValueError("cannot equalize an empty histogram")
    cdf_min = int(cdf[np.flatnonzero(cdf)[0]])
    if n == cdf_min:
        return identity_lut()
    num = np.maximum(cdf - cdf_min, 0)
    den = n - cdf_min
    # round-half-up of 255*num/den for num >= 0
    lut = (2 * 255 * num + den) // (2 * den)
    return np.clip(lut, 0, 255).astype(np.uint8)


def apply_lut(raster, lut) -> np.ndarray:
    table = np.asarray(lut)
    if table.shape != (256,):
        raise ValueError(f"lookup table must have 256 entries, got shape {table.shape}")
    if table.min() < 0 or table.max() > 255:
        raise ValueError("lookup table entries must lie in [0, 255]")
    return table.astype(np.uint8)[as_raster(raster)]


def equalize(raster) -> np.ndarray:
    """Global histogram equalization of a grayscale raster."""
    return apply_lut(raster, equalize_mapping(compute_histogram(raster)))
