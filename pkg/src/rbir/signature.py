"""Binary signatures over a fixed color palette.

A signature has n blocks (one per palette color) of m bits each. A region
signature sets at most one bit per block: the round-to-nearest level of the
region's normalized color fraction. The image signature is the bitwise OR of
its region signatures. Bit (k, i) with 1-based block k and position i lives
at global bit index (k-1)*m + (i-1), packed MSB-first within bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    EmptyRegionError,
    InvalidParameterError,
    MalformedFileError,
    ShapeMismatchError,
)
from .imgproc import Image
from .interest import InterestRegion

DEFAULT_BITS = 10


@dataclass(frozen=True)
class ColorPalette:
    """Ordered lookup table of RGB triples in [0, 1], shape (n, 3)."""

    colors: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 2:
            raise InvalidParameterError("palette needs at least 2 RGB triples")
        if c.min() < 0.0 or c.max() > 1.0:
            raise InvalidParameterError("palette channels must be in [0, 1]")
        if len({tuple(row) for row in c.tolist()}) != c.shape[0]:
            raise InvalidParameterError("palette contains duplicate colors")
        c.setflags(write=False)
        object.__setattr__(self, "colors", c)

    def __len__(self):
        return self.colors.shape[0]


def parse_palette(text: str) -> ColorPalette:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise MalformedFileError(f"palette line {lineno}: expected 'R G B'")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise MalformedFileError(f"palette line {lineno}: non-numeric value") from None
    if not rows:
        raise MalformedFileError("palette file has no colors")
    return ColorPalette(np.array(rows, dtype=np.float64))


def load_palette(path) -> ColorPalette:
    return parse_palette(Path(path).read_text(encoding="utf-8"))


def default_palette() -> ColorPalette:
    text = resources.files("rbir").joinpath("data/palette32.txt").read_text("utf-8")
    return parse_palette(text)


@dataclass(frozen=True)
class RegionHistogram:
    counts: np.ndarray      # (n,) int64
    normalized: np.ndarray  # (n,) float64 summing to 1


@dataclass(frozen=True)
class BinarySignature:
    """Immutable packed bit string of n blocks x m bits."""

    n: int
    m: int
    packed: bytes

    def __post_init__(self):
        want = (self.n * self.m + 7) // 8
        if len(self.packed) != want:
            raise InvalidParameterError(
                f"packed length {len(self.packed)} != {want} for n={self.n}, m={self.m}"
            )
        tail = self.n * self.m % 8
        if tail and self.packed and self.packed[-1] & ((1 << (8 - tail)) - 1):
            raise InvalidParameterError("padding bits past n*m must be zero")

    @classmethod
    def from_bits(cls, bits: np.ndarray, n: int, m: int) -> "BinarySignature":
        flat = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if flat.size != n * m:
            raise InvalidParameterError(f"need {n * m} bits, got {flat.size}")
        return cls(n, m, np.packbits(flat).tobytes())

    def bits(self) -> np.ndarray:
        """Unpacked (n, m) uint8 bit matrix."""
        flat = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8))
        return flat[:self.n * self.m].reshape(self.n, self.m)

    def as_int(self) -> int:
        return int.from_bytes(self.packed, "big")

    def union(self, other: "BinarySignature") -> "BinarySignature":
        if (self.n, self.m) != (other.n, other.m):
            raise ShapeMismatchError(
                f"signature shapes ({self.n},{self.m}) vs ({other.n},{other.m})"
            )
        merged = (self.as_int() | other.as_int()).to_bytes(len(self.packed), "big")
        return BinarySignature(self.n, self.m, merged)


def cover_test(query: BinarySignature, data: BinarySignature) -> bool:
    """True iff every set bit of the query is set in the data signature."""
    if (query.n, query.m) != (data.n, data.m):
        raise ShapeMismatchError(
            f"signature shapes ({query.n},{query.m}) vs ({data.n},{data.m})"
        )
    q = query.as_int()
    return q & data.as_int() == q


def nearest_palette_color(pixel, palette: ColorPalette) -> int:
    """0-based index of the palette color nearest in Euclidean RGB distance;
    ties go to the lowest index."""
    p = np.asarray(pixel, dtype=np.float64)
    d = palette.colors - p
    return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def _disc_pixels(img: Image, region: InterestRegion) -> np.ndarray:
    x0 = max(0, int(math.floor(region.cx - region.radius)))
    x1 = min(img.width - 1, int(math.ceil(region.cx + region.radius)))
    y0 = max(0, int(math.floor(region.cy - region.radius)))
    y1 = min(img.height - 1, int(math.ceil(region.cy + region.radius)))
    if x0 > x1 or y0 > y1:
        return np.empty((0, 3), dtype=np.float64)
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    dx2 = (xs - region.cx) ** 2
    dy2 = (ys - region.cy) ** 2
    inside = dy2[:, None] + dx2[None, :] <= region.radius ** 2
    return img.pixels[y0:y1 + 1, x0:x1 + 1][inside]


def region_histogram(img: Image, region: InterestRegion, palette: ColorPalette) -> RegionHistogram:
    """Nearest-palette-color counts over the region's disc, clipped to the
    image, plus the sum-to-one normalization."""
    pix = _disc_pixels(img, region)
    if pix.shape[0] == 0:
        raise EmptyRegionError(
            f"region at ({region.cx}, {region.cy}) r={region.radius} covers no pixels"
        )
    d = pix[:, None, :] - palette.colors[None, :, :]
    idx = np.argmin(np.einsum("pnc,pnc->pn", d, d), axis=1)
    counts = np.bincount(idx, minlength=len(palette)).astype(np.int64)
    return RegionHistogram(counts, counts / counts.sum())


def quantize_to_block(h_k: float, m: int) -> np.ndarray:
    """One m-bit block: level j = floor(h*m + 0.5); j=0 leaves the block
    empty, otherwise 1-based bit j is set."""
    if m < 2:
        raise InvalidParameterError(f"bits per block must be >= 2, got {m}")
    if not 0.0 <= h_k <= 1.0:
        raise InvalidParameterError(f"histogram value {h_k} outside [0, 1]")
    j = int(math.floor(h_k * m + 0.5))
    j = min(max(j, 0), m)
    block = np.zeros(m, dtype=np.uint8)
    if j > 0:
        block[j - 1] = 1
    return block


def region_signature(normalized: np.ndarray, m: int = DEFAULT_BITS) -> BinarySignature:
    """One-hot-per-block signature of a normalized histogram."""
    h = np.asarray(normalized, dtype=np.float64)
    if abs(float(h.sum()) - 1.0) > 1e-9:
        raise InvalidParameterError("histogram must sum to 1")
    blocks = [quantize_to_block(float(v), m) for v in h]
    return BinarySignature.from_bits(np.concatenate(blocks), h.size, m)


def image_signature(img: Image, regions, palette: ColorPalette,
                    m: int = DEFAULT_BITS) -> BinarySignature:
    """OR-union of the region signatures of all interest regions."""
    if not regions:
        raise InvalidParameterError("image_signature needs at least one region")
    sig = None
    for region in regions:
        hist = region_histogram(img, region, palette)
        rsig = region_signature(hist.normalized, m)
        sig = rsig if sig is None else sig.union(rsig)
    return sig
