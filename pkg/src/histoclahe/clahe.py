"""Contrast limited adaptive histogram equalization.

The image is padded (edge replication) to a whole number of equal tiles, one
equalization LUT is built per tile from its clipped histogram, and every
pixel is remapped by bilinearly blending the LUTs of the up to four tiles
whose centers surround it.  Leaving the clip factor unset gives plain AHE.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .histogram_eq import equalize_mapping, identity_lut, round_half_away
from .raster_io import as_raster

__all__ = [
    "ClaheParams",
    "TileGrid",
    "clip_and_redistribute",
    "clip_limit_for",
    "build_tile_luts",
    "blend_tiles",
    "clahe",
    "parse_tiles",
    "parse_clip",
]


@dataclass(frozen=True)
class ClaheParams:
    """Tile counts per axis and clip factor (``None`` means unlimited, i.e. AHE).

    The clip factor is a multiple of the mean bin count ``tile_pixels / 256``.
    """

    grid_x: int = 8
    grid_y: int = 8
    clip_factor: float | None = 2.0

    def __post_init__(self):
        if int(self.grid_x) < 1 or int(self.grid_y) < 1:
            raise ValueError(f"tile grid must be at least 1x1, got {self.grid_x}x{self.grid_y}")
        if self.clip_factor is not None and not self.clip_factor > 0:
            raise ValueError(f"clip factor must be positive, got {self.clip_factor}")


@dataclass(frozen=True)
class TileGrid:
    grid_x: int
    grid_y: int
    tile_w: int
    tile_h: int
    # (grid_y, grid_x, 256) uint8, row-major tile order
    luts: np.ndarray
    # tile center coordinates in padded-image space
    centers_x: np.ndarray
    centers_y: np.ndarray
    width: int
    height: int

    def lut(self, tx: int, ty: int) -> np.ndarray:
        return self.luts[ty, tx]


def clip_and_redistribute(hist, clip_limit: int) -> np.ndarray:
    """Cut every bin at ``clip_limit`` and spread the excess over all bins.

    Single pass: each bin receives ``excess // 256``, and bins
    ``0 .. excess % 256 - 1`` receive one more count.  The total is preserved.
    """
    clip_limit = int(clip_limit)
    if clip_limit < 1:
        raise ValueError(f"clip limit must be >= 1, got {clip_limit}")
    bins = np.asarray(hist, dtype=np.int64)
    if bins.shape != (256,):
        raise ValueError(f"histogram must have 256 bins, got shape {bins.shape}")
    excess = int(np.maximum(bins - clip_limit, 0).sum())
    out = np.minimum(bins, clip_limit)
    out += excess // 256
    out[: excess % 256] += 1
    return out


def clip_limit_for(clip_factor: float, tile_pixels: int) -> int:
    return max(1, int(round_half_away(clip_factor * tile_pixels / 256.0)))


def _tile_lut(tile: np.ndarray, clip_limit: int | None) -> np.ndarray:
    hist = np.bincount(tile.ravel(), minlength=256)
    # A flat tile stays flat whatever the clip limit.
    if np.count_nonzero(hist) == 1:
        return identity_lut()
    if clip_limit is not None:
        hist = clip_and_redistribute(hist, clip_limit)
    return equalize_mapping(hist)


def _pad_to_grid(r: np.ndarray, gx: int, gy: int) -> np.ndarray:
    h, w = r.shape
    pad_h = -h % gy
    pad_w = -w % gx
    if pad_h or pad_w:
        r = np.pad(r, ((0, pad_h), (0, pad_w)), mode="edge")
    return r


def build_tile_luts(raster, params: ClaheParams, workers: int = 1) -> TileGrid:
    r = as_raster(raster)
    h, w = r.shape
    gx, gy = int(params.grid_x), int(params.grid_y)
    if gx > w or gy > h:
        raise ValueError(f"tile grid {gx}x{gy} larger than image {w}x{h}")
    padded = _pad_to_grid(r, gx, gy)
    tile_h, tile_w = padded.shape[0] // gy, padded.shape[1] // gx
    limit = None
    if params.clip_factor is not None:
        limit = clip_limit_for(params.clip_factor, tile_w * tile_h)

    def job(index: int) -> np.ndarray:
        ty, tx = divmod(index, gx)
        tile = padded[ty * tile_h:(ty + 1) * tile_h, tx * tile_w:(tx + 1) * tile_w]
        return _tile_lut(tile, limit)

    indices = range(gx * gy)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            luts = list(pool.map(job, indices))
    else:
        luts = [job(i) for i in indices]

    return TileGrid(
        grid_x=gx,
        grid_y=gy,
        tile_w=tile_w,
        tile_h=tile_h,
        luts=np.stack(luts).reshape(gy, gx, 256),
        centers_x=(np.arange(gx) + 0.5) * tile_w - 0.5,
        centers_y=(np.arange(gy) + 0.5) * tile_h - 0.5,
        width=w,
        height=h,
    )


def _axis_weights(n: int, tile: int, count: int):
    """Lower/upper tile index and upper weight for each coordinate on one axis.

    Coordinates outside the outermost centers clamp to a single tile, which
    gives the 2-LUT border strips and 1-LUT corners.
    """
    pos = (np.arange(n) + 0.5) / tile - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    before = lo < 0
    after = lo >= count - 1
    lo = np.clip(lo, 0, count - 1)
    hi = np.minimum(lo + 1, count - 1)
    frac[before | after] = 0.0
    hi[before | after] = lo[before | after]
    return lo, hi, frac


def blend_tiles(raster, grid: TileGrid, workers: int = 1) -> np.ndarray:
    r = as_raster(raster)
    if r.shape != (grid.height, grid.width):
        raise ValueError(
            f"tile grid was built for {grid.width}x{grid.height}, raster is {r.shape[1]}x{r.shape[0]}"
        )
    h, w = r.shape
    x0, x1, wx = _axis_weights(w, grid.tile_w, grid.grid_x)
    y0, y1, wy = _axis_weights(h, grid.tile_h, grid.grid_y)
    luts = grid.luts.astype(np.float64)
    out = np.empty((h, w), dtype=np.uint8)

    def rows(start: int, stop: int) -> None:
        v = r[start:stop].astype(np.intp)
        ya, yb, fy = y0[start:stop, None], y1[start:stop, None], wy[start:stop, None]
        top = (1.0 - wx) * luts[ya, x0, v] + wx * luts[ya, x1, v]
        bottom = (1.0 - wx) * luts[yb, x0, v] + wx * luts[yb, x1, v]
        val = (1.0 - fy) * top + fy * bottom
        out[start:stop] = np.clip(round_half_away(val), 0, 255).astype(np.uint8)

    if workers > 1 and h > 1:
        bounds = np.linspace(0, h, min(workers, h) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ab: rows(*ab), zip(bounds[:-1], bounds[1:])))
    else:
        rows(0, h)
    return out


def clahe(raster, params: ClaheParams | None = None, workers: int = 1) -> np.ndarray:
    """Enhance a grayscale raster; output has the same shape, values in [0, 255]."""
    params = params or ClaheParams()
    r = as_raster(raster)
    return blend_tiles(r, build_tile_luts(r, params, workers=workers), workers=workers)


def parse_tiles(text: str) -> tuple[int, int]:
    """Parse ``"GXxGY"`` (e.g. ``"8x8"``) into ``(grid_x, grid_y)``."""
    try:
        gx, gy = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"tile grid must look like 8x8, got {text!r}") from None
    return gx, gy


def parse_clip(text: str) -> float | None:
    if text.strip().lower() in ("none", "unlimited", "off"):
        return None
    return float(text)
