"""Deterministic synthetic corpora for tests, benchmarks and demos.

Each class owns a (primary, secondary) color pair from one hue family, so
its images agree on most of their mass while classes sit far apart in RGB.
Every image also carries a small two-color "tag" checker whose colors come
from a per-class pool of pastel palette colors: distinct images of a class
use a different ordered color pair (or the same pair at swapped 3:1
proportions), which keeps all weight vectors pairwise distinct and strictly
positive earth-mover distance apart. Generation is fully parametric, so the
same arguments always reproduce byte-identical corpora.
"""

from __future__ import annotations

import colorsys
from pathlib import Path

import numpy as np

from .imgproc import Image, save_ppm

_HUES = [i / 7.0 for i in range(7)]


def _hsv(h, s, v):
    return tuple(round(c, 4) for c in colorsys.hsv_to_rgb(h, s, v))


_PASTELS = [_hsv(h, 0.5, 1.0) for h in _HUES]


_GRAYS = ((0.0, 0.0, 0.0), (0.3333, 0.3333, 0.3333),
          (0.6667, 0.6667, 0.6667), (1.0, 1.0, 1.0))


def class_colors(index: int):
    """(primary, secondary) pair for a class. The first ten definitions keep
    every pair of classes at least ~0.45 apart in RGB between any two of
    their blocks (vivid hues two sectors apart, secondaries alternating
    between the dark and muted families, and non-overlapping gray pairs)."""
    v = [_hsv(h, 1.0, 1.0) for h in _HUES]
    dk = [_hsv(h, 1.0, 0.55) for h in _HUES]
    dp = [_hsv(h, 0.5, 0.55) for h in _HUES]
    defs = [
        (v[0], dk[0]), (v[2], dk[2]), (v[4], dk[4]), (v[6], dk[6]),
        (v[1], dp[1]), (v[3], dp[3]), (v[5], dp[5]),
        (_GRAYS[3], _GRAYS[2]), (_GRAYS[0], _GRAYS[1]), (_GRAYS[1], _GRAYS[2]),
        (dp[0], dk[1]), (dp[2], dk[3]), (dp[4], dk[5]), (dp[6], dk[0]),
        (dk[2], dp[5]), (dk[4], dp[1]), (dk[6], dp[3]),
    ]
    return defs[index % len(defs)]


# pastel pairs ordered by circular hue distance, nearest first, so small
# corpora only use close pairs and within-class spread stays low
_TAG_PAIRS = sorted(
    ((a, b) for a in range(len(_PASTELS)) for b in range(a + 1, len(_PASTELS))),
    key=lambda p: (min(p[1] - p[0], len(_PASTELS) - (p[1] - p[0])), p),
)


def tag_colors(class_index: int, image_index: int):
    """Unordered pastel pair for an image: any two distinct pairs each hold a
    color the other lacks, which keeps weight vectors in conflict. 21 pairs,
    cycled beyond that."""
    a, b = _TAG_PAIRS[(class_index + image_index) % len(_TAG_PAIRS)]
    return _PASTELS[a], _PASTELS[b]


def synth_image(class_index: int, image_index: int, per_class: int = 20,
                size: int = 64) -> Image:
    """Class-colored background and checker (corner anchors for the
    detector), a secondary strip, and the image's tag checker."""
    if size < 32:
        raise ValueError(f"corpus images need size >= 32, got {size}")
    primary, secondary = class_colors(class_index)
    major, minor = tag_colors(class_index, image_index)
    px = np.empty((size, size, 3), dtype=np.float64)
    px[:, :] = primary

    cell = size // 4
    margin = size // 8
    x0, x1 = margin, size - margin
    y0 = margin
    y1 = y0 + 2 * cell
    for cy in range(y0, y1, cell):
        for cx in range(x0, x1, cell):
            if ((cx - x0) // cell + (cy - y0) // cell) % 2 == 1:
                px[cy:cy + cell, cx:min(cx + cell, x1)] = secondary

    # quarter-cell strip under the patch in three segments: secondary, then
    # the two tag colors; corner discs along its boundaries sample all three
    sy0, sy1 = y1, min(size - margin // 2, y1 + max(2, cell // 4))
    px[sy0:sy1, x0:x0 + cell] = secondary
    px[sy0:sy1, x0 + cell:x0 + 2 * cell] = major
    px[sy0:sy1, x0 + 2 * cell:x1] = minor
    return Image(size, size, px)


def checkerboard_image(size: int = 32, cell: int = 8,
                       color_a=(0.0, 0.0, 0.0), color_b=(1.0, 1.0, 1.0),
                       shade: float = 0.05) -> Image:
    """Checkerboard whose bright cells darken slightly with the cell index.
    The shading keeps corner positions exact while breaking the perfect
    symmetries of an ideal checkerboard, which would otherwise tie the
    corner responses into plateaus without strict maxima."""
    px = np.empty((size, size, 3), dtype=np.float64)
    ncells = max(size // cell - 1, 1)
    for cy in range(0, size, cell):
        for cx in range(0, size, cell):
            i, j = cy // cell, cx // cell
            if (i + j) % 2:
                color = np.asarray(color_b) * (1.0 - shade * (i + j) / (2 * ncells))
            else:
                color = np.asarray(color_a)
            px[cy:cy + cell, cx:cx + cell] = color
    return Image(size, size, px)


def disk_image(size: int = 48, radius: float = 10.0,
               fg=(1.0, 1.0, 1.0), bg=(0.0, 0.0, 0.0)) -> Image:
    px = np.empty((size, size, 3), dtype=np.float64)
    px[:, :] = bg
    c = (size - 1) / 2.0
    ys, xs = np.mgrid[0:size, 0:size]
    px[(xs - c) ** 2 + (ys - c) ** 2 <= radius ** 2] = fg
    return Image(size, size, px)


def make_corpus(out_dir, classes: int, per_class: int, size: int = 64,
                seed: int = 0) -> list:
    """Write PPM images plus a labels.tsv ("path<TAB>label"); returns
    (filename, label) pairs sorted by filename. seed is reserved; output is
    parametric in (classes, per_class, size)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for c in range(classes):
        label = f"class{c:03d}"
        for i in range(per_class):
            img = synth_image(c, i, per_class, size)
            name = f"{label}_img{i:03d}.ppm"
            save_ppm(img, out / name)
            rows.append((name, label))
    rows.sort()
    with open(out / "labels.tsv", "w", encoding="utf-8") as fh:
        for name, label in rows:
            fh.write(f"{name}\t{label}\n")
    return rows
