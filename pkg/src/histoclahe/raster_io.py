"""Image decoding/encoding into the canonical 8-bit grayscale raster.

A raster is a 2-D ``uint8`` numpy array of shape ``(height, width)``; an RGB
raster is ``uint8`` of shape ``(height, width, 3)``.  Binary PGM/PPM are
handled here directly, PNG goes through Pillow.
"""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np

__all__ = [
    "ImageFormatError",
    "MalformedHeaderError",
    "TruncatedDataError",
    "UnsupportedBitDepthError",
    "UnsupportedFormatError",
    "as_raster",
    "decode_image",
    "encode_image",
    "to_luma",
    "read_image",
    "read_gray",
    "write_image",
]

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageFormatError(ValueError):
    """Base class for every decoding failure."""


class MalformedHeaderError(ImageFormatError):
    pass


class TruncatedDataError(ImageFormatError):
    pass


class UnsupportedBitDepthError(ImageFormatError):
    pass


class UnsupportedFormatError(ImageFormatError):
    pass


def as_raster(data) -> np.ndarray:
    """Validate ``data`` as a grayscale raster and return it as ``uint8``.

    Raises ``ValueError`` when the array is not 2-D, is empty, or holds
    values outside [0, 255].
    """
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"raster must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("raster values must lie in [0, 255]")
        if np.issubdtype(arr.dtype, np.floating) and not np.array_equal(arr, np.round(arr)):
            raise ValueError("raster values must be integral")
        arr = arr.astype(np.uint8)
    return arr


# Netpbm header: magic, then three whitespace-separated integers, comments
# allowed anywhere before the single whitespace byte that ends the header.
_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\d+)")


def _decode_netpbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise MalformedHeaderError(f"unknown netpbm magic {magic!r}")
    channels = 1 if magic == b"P5" else 3
    pos = 2
    values = []
    for field in ("width", "height", "maxval"):
        m = _TOKEN.match(data, pos)
        if m is None or m.start(1) == pos:
            raise MalformedHeaderError(f"missing or malformed {field} in header")
        values.append(int(m.group(1)))
        pos = m.end(1)
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r", b"\v", b"\f"):
        raise MalformedHeaderError("header must end with a single whitespace byte")
    pos += 1
    width, height, maxval = values
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid dimensions {width}x{height}")
    if maxval < 1 or maxval > 65535:
        raise MalformedHeaderError(f"invalid maxval {maxval}")
    if maxval > 255:
        raise UnsupportedBitDepthError("16-bit netpbm images are not supported")
    need = width * height * channels
    body = data[pos:pos + need]
    if len(body) < need:
        raise TruncatedDataError(f"expected {need} pixel bytes, found {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8)
    if pixels.size and pixels.max() > maxval:
        raise MalformedHeaderError("pixel value exceeds declared maxval")
    shape = (height, width) if channels == 1 else (height, width, 3)
    return pixels.reshape(shape).copy()


def _decode_png(data: bytes) -> np.ndarray:
    from PIL import Image

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (OSError, SyntaxError) as exc:
        if "truncated" in str(exc).lower():
            raise TruncatedDataError(str(exc)) from exc
        raise MalformedHeaderError(str(exc)) from exc
    if img.mode in ("I", "I;16", "I;16B", "I;16L", "F") or img.info.get("bits", 8) > 8:
        raise UnsupportedBitDepthError(f"unsupported PNG mode {img.mode}")
    if img.mode in ("1", "L"):
        return np.asarray(img.convert("L"), dtype=np.uint8).copy()
    if img.mode == "LA":
        return np.asarray(img, dtype=np.uint8)[..., 0].copy()
    return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()


def decode_image(data: bytes, format_hint: str | None = None) -> np.ndarray:
    """Decode PGM (P5), PPM (P6) or PNG bytes.

    Returns a ``(h, w)`` array for grayscale sources and ``(h, w, 3)`` for
    colour ones.  Pixel values are returned exactly as stored.
    """
    fmt = (format_hint or "").lower().lstrip(".")
    if not fmt:
        if data.startswith(PNG_SIGNATURE):
            fmt = "png"
        elif data[:2] in (b"P5", b"P6"):
            fmt = "pnm"
        else:
            raise UnsupportedFormatError("unrecognised image signature")
    if fmt in ("pgm", "ppm", "pnm"):
        return _decode_netpbm(data)
    if fmt == "png":
        if not data.startswith(PNG_SIGNATURE):
            raise MalformedHeaderError("missing PNG signature")
        return _decode_png(data)
    raise UnsupportedFormatError(f"unsupported format {format_hint!r}")


def encode_image(raster, fmt: str = "pgm") -> bytes:
    arr = np.asarray(raster)
    if arr.ndim == 3 and arr.shape[2] == 3:
        arr = arr.astype(np.uint8)
        color = True
    else:
        arr = as_raster(arr)
        color = False
    fmt = fmt.lower().lstrip(".")
    h, w = arr.shape[:2]
    if fmt in ("pgm", "ppm", "pnm"):
        magic = b"P6" if color else b"P5"
        return magic + b"\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(arr).tobytes()
    if fmt == "png":
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(np.ascontiguousarray(arr), mode="RGB" if color else "L").save(buf, format="PNG")
        return buf.getvalue()
    raise UnsupportedFormatError(f"unsupported output format {fmt!r}")


def to_luma(rgb) -> np.ndarray:
    """Rec.601 luma, rounded half away from zero in exact integer arithmetic."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB array, got shape {arr.shape}")
    c = arr.astype(np.int64)
    s = 299 * c[..., 0] + 587 * c[..., 1] + 114 * c[..., 2]
    return np.clip((2 * s + 1000) // 2000, 0, 255).astype(np.uint8)


def read_image(path) -> np.ndarray:
    path = Path(path)
    return decode_image(path.read_bytes(), path.suffix or None)


def read_gray(path) -> np.ndarray:
    """Read an image and convert colour sources to luma."""
    img = read_image(path)
    return to_luma(img) if img.ndim == 3 else img


def write_image(path, raster) -> None:
    path = Path(path)
    fmt = "png" if path.suffix.lower() == ".png" else "pgm"
    path.write_bytes(encode_image(raster, fmt))
