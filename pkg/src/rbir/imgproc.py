"""Image decoding, k-by-k standardization and RGB -> YCbCr conversion.

Images are float64 arrays with channels in [0, 1]; pixel (x, y) means
column x, row y throughout the package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InvalidParameterError,
    MalformedFileError,
    TruncatedFileError,
    UnsupportedFormatError,
)

# [Y, Cb, Cr]^T = YCBCR_MATRIX @ [R, G, B]^T + YCBCR_OFFSET, channels in [0, 1]
YCBCR_MATRIX = np.array(
    [
        [65.481, 128.553, 24.996],
        [-37.797, -74.203, 112.0],
        [112.0, -93.786, -18.214],
    ],
    dtype=np.float64,
)
YCBCR_OFFSET = np.array([16.0, 128.0, 128.0], dtype=np.float64)


@dataclass(frozen=True)
class Image:
    """Decoded raster: pixels is (height, width, 3) float64 in [0, 1]."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3):
            raise InvalidParameterError(
                f"pixel array shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )


@dataclass(frozen=True)
class YCbCrImage:
    """Real-valued YCbCr planes, each (height, width) float64."""

    width: int
    height: int
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray


def _read_ppm_header(data: bytes, path: str):
    # P6 header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed between tokens; a single whitespace byte ends it.
    pos = 2  # past b"P6"
    tokens = []
    while len(tokens) < 3:
        m = re.compile(rb"(\s*(?:#[^\n]*\n?)?)+").match(data, pos)
        pos = m.end()
        t = re.compile(rb"[^\s#]+").match(data, pos)
        if t is None:
            raise MalformedFileError(f"{path}: truncated PPM header")
        tokens.append(t.group())
        pos = t.end()
    if not data[pos:pos + 1].isspace():
        raise MalformedFileError(f"{path}: missing whitespace after maxval")
    pos += 1
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MalformedFileError(f"{path}: non-numeric PPM header field") from None
    if width <= 0 or height <= 0:
        raise MalformedFileError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    return width, height, pos


def _load_ppm(data: bytes, path: str) -> Image:
    width, height, offset = _read_ppm_header(data, path)
    need = width * height * 3
    payload = data[offset:offset + need]
    if len(payload) < need:
        raise TruncatedFileError(
            f"{path}: PPM payload has {len(payload)} bytes, expected {need}"
        )
    raw = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Image(width, height, raw.astype(np.float64) / 255.0)


def load_image(path) -> Image:
    """Decode a PPM (P6) or PNG file into a unit-range Image.

    Raises OSError for unreadable paths, UnsupportedFormatError for unknown
    formats and MalformedFileError / TruncatedFileError for broken files.
    """
    data = Path(path).read_bytes()
    name = str(path)
    if data[:2] == b"P6":
        return _load_ppm(data, name)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        from . import png

        rgb = png.decode_rgb(data, name)
        h, w = rgb.shape[:2]
        return Image(w, h, rgb.astype(np.float64) / 255.0)
    raise UnsupportedFormatError(f"{name}: not a PPM (P6) or PNG file")


def save_ppm(img: Image, path) -> None:
    """Write a binary PPM; load_image(save_ppm(x)) round-trips bit-exactly."""
    raw = np.rint(img.pixels * 255.0).astype(np.uint8)
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raw.tobytes())


def resize(img: Image, k: int) -> Image:
    """Bilinear resample to k x k; aspect ratio is not preserved."""
    if k < 8:
        raise InvalidParameterError(f"target side must be >= 8, got {k}")
    if img.width == k and img.height == k:
        return Image(k, k, img.pixels.copy())
    src = img.pixels
    # half-pixel-center sampling grid, clamped to the source extent
    sx = (np.arange(k) + 0.5) * (img.width / k) - 0.5
    sy = (np.arange(k) + 0.5) * (img.height / k) - 0.5
    sx = np.clip(sx, 0.0, img.width - 1.0)
    sy = np.clip(sy, 0.0, img.height - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = (sx - x0)[None, :, None]
    fy = (sy - y0)[:, None, None]
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return Image(k, k, out)


def rgb_to_ycbcr(img: Image) -> YCbCrImage:
    """Per-pixel affine map to real-valued YCbCr planes (no quantization)."""
    flat = img.pixels.reshape(-1, 3)
    ycc = flat @ YCBCR_MATRIX.T + YCBCR_OFFSET
    planes = ycc.reshape(img.height, img.width, 3)
    return YCbCrImage(img.width, img.height,
                      planes[:, :, 0], planes[:, :, 1], planes[:, :, 2])
