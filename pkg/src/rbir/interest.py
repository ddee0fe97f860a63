"""Harris-Laplace interest regions: corner response on a smoothed luminance
field, strict 3x3 non-max suppression, and characteristic radii from the
scale-normalized Laplacian of Gaussian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .imgproc import Image, YCbCrImage, rgb_to_ycbcr

DEFAULT_SCALES = (1.5, 2.1, 3.0, 4.2, 5.9, 8.3, 11.6)
MIN_RADIUS = 4.0

# weights mixing the YCbCr planes into the detector luminance
_LUMA_WEIGHTS = (0.6, 0.2, 0.2)


@dataclass(frozen=True)
class DetectorParams:
    theta: float = 0.01          # threshold as a fraction of the max response
    alpha: float = 0.06
    sigma_i_levels: tuple = DEFAULT_SCALES
    sigma_ratio: float = 0.7     # differentiation / integration scale
    max_regions: int = 16

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise InvalidParameterError(f"theta must be in (0, 1], got {self.theta}")
        if not 0.0 < self.alpha < 0.25:
            raise InvalidParameterError(f"alpha must be in (0, 0.25), got {self.alpha}")
        levels = tuple(self.sigma_i_levels)
        if not levels or any(s <= 0 for s in levels):
            raise InvalidParameterError("sigma_i_levels must be positive")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InvalidParameterError("sigma_i_levels must be strictly increasing")
        if not 0.0 < self.sigma_ratio <= 1.0:
            raise InvalidParameterError(f"sigma_ratio must be in (0, 1], got {self.sigma_ratio}")
        if self.max_regions < 1:
            raise InvalidParameterError("max_regions must be >= 1")
        object.__setattr__(self, "sigma_i_levels", levels)


@dataclass(frozen=True)
class InterestRegion:
    """Circle (cx, cy, radius) with the corner response at its center."""

    cx: float
    cy: float
    radius: float
    response: float = 0.0


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Square normalized Gaussian, side 2*ceil(3*sigma)+1."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    r = math.ceil(3.0 * sigma)
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g1 = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    k = np.outer(g1, g1)
    return k / k.sum()


def _gaussian_1d(sigma: float) -> np.ndarray:
    r = math.ceil(3.0 * sigma)
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    return g / g.sum()


def smooth(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicate (edge) borders."""
    g = _gaussian_1d(sigma)
    r = len(g) // 2
    padded = np.pad(plane, ((r, r), (0, 0)), mode="edge")
    rows = np.zeros_like(plane)
    for t in range(len(g)):
        rows += g[t] * padded[t:t + plane.shape[0], :]
    padded = np.pad(rows, ((0, 0), (r, r)), mode="edge")
    out = np.zeros_like(plane)
    for t in range(len(g)):
        out += g[t] * padded[:, t:t + plane.shape[1]]
    return out


def luminance_map(ycc: YCbCrImage, sigma_d: float) -> np.ndarray:
    """Weighted, sigma_d-smoothed combination of the three YCbCr planes."""
    if sigma_d <= 0:
        raise InvalidParameterError(f"sigma_d must be positive, got {sigma_d}")
    wy, wb, wr = _LUMA_WEIGHTS
    return (wy * smooth(ycc.y, sigma_d)
            + wb * smooth(ycc.cb, sigma_d)
            + wr * smooth(ycc.cr, sigma_d))


def _central_gradients(plane: np.ndarray):
    padded = np.pad(plane, 1, mode="edge")
    gx = 0.5 * (padded[1:-1, 2:] - padded[1:-1, :-2])
    gy = 0.5 * (padded[2:, 1:-1] - padded[:-2, 1:-1])
    return gx, gy


def second_moment_field(L: np.ndarray, sigma_i: float, sigma_d: float) -> np.ndarray:
    """Per-pixel 2x2 second-moment matrices, stacked as (h, w, 3) in the
    order (mxx, mxy, myy); entries carry the sigma_d^2 scale factor."""
    if L.ndim != 2 or L.shape[0] < 3 or L.shape[1] < 3:
        raise InvalidParameterError("luminance field must be at least 3x3")
    if sigma_i <= 0 or sigma_d <= 0:
        raise InvalidParameterError("scales must be positive")
    lx, ly = _central_gradients(L)
    s2 = sigma_d * sigma_d
    out = np.empty(L.shape + (3,), dtype=np.float64)
    out[:, :, 0] = s2 * smooth(lx * lx, sigma_i)
    out[:, :, 1] = s2 * smooth(lx * ly, sigma_i)
    out[:, :, 2] = s2 * smooth(ly * ly, sigma_i)
    return out


def harris_response(mfield: np.ndarray, alpha: float) -> np.ndarray:
    """det(M) - alpha * trace(M)^2, pointwise."""
    mxx, mxy, myy = mfield[:, :, 0], mfield[:, :, 1], mfield[:, :, 2]
    det = mxx * myy - mxy * mxy
    tr = mxx + myy
    return det - alpha * tr * tr


def strict_local_maxima(field: np.ndarray) -> np.ndarray:
    """Mask of interior pixels strictly greater than all 8 neighbours."""
    mask = np.zeros(field.shape, dtype=bool)
    if field.shape[0] < 3 or field.shape[1] < 3:
        return mask
    c = field[1:-1, 1:-1]
    inner = np.ones(c.shape, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            inner &= c > field[1 + dy:field.shape[0] - 1 + dy,
                               1 + dx:field.shape[1] - 1 + dx]
    mask[1:-1, 1:-1] = inner
    return mask


def detect_points(response: np.ndarray, theta: float):
    """Strict 8-neighbourhood maxima with response >= theta * max(response),
    sorted by descending response, ties by (y, x)."""
    mask = strict_local_maxima(response)
    if not mask.any():
        return []
    thr = theta * float(response.max())
    ys, xs = np.nonzero(mask)
    vals = response[ys, xs]
    keep = vals >= thr
    ys, xs, vals = ys[keep], xs[keep], vals[keep]
    order = np.lexsort((xs, ys, -vals))
    return [(int(x), int(y), float(v)) for x, y, v in zip(xs[order], ys[order], vals[order])]


def _raw_luminance(ycc: YCbCrImage) -> np.ndarray:
    wy, wb, wr = _LUMA_WEIGHTS
    return wy * ycc.y + wb * ycc.cb + wr * ycc.cr


def _laplacian(plane: np.ndarray) -> np.ndarray:
    padded = np.pad(plane, 1, mode="edge")
    return (padded[1:-1, 2:] + padded[1:-1, :-2]
            + padded[2:, 1:-1] + padded[:-2, 1:-1]
            - 4.0 * plane)


def _log_stack(ycc: YCbCrImage, levels) -> np.ndarray:
    """Scale-normalized |Laplacian of Gaussian| maps, one per scale level."""
    base = _raw_luminance(ycc)
    stack = np.empty((len(levels),) + base.shape, dtype=np.float64)
    for i, s in enumerate(levels):
        stack[i] = (s * s) * np.abs(_laplacian(smooth(base, s)))
    return stack


def _radius_from_profile(profile: np.ndarray, levels, r_max: float) -> float:
    best = -1.0
    best_sigma = 0.0
    last = len(profile) - 1
    for i, v in enumerate(profile):
        lo_ok = i == 0 or v > profile[i - 1]
        hi_ok = i == last or v > profile[i + 1]
        if lo_ok and hi_ok and v > best:
            best = v
            best_sigma = levels[i]
    if best_sigma == 0.0:
        return min(MIN_RADIUS, r_max)
    r = math.sqrt(2.0) * best_sigma
    return min(max(r, MIN_RADIUS), r_max)


def characteristic_radius(ycc: YCbCrImage, point, params: DetectorParams) -> float:
    """LoG characteristic radius at (x, y), clamped to [MIN_RADIUS, min(M,N)/2];
    falls back to MIN_RADIUS when the scale profile has no strict maximum."""
    x, y = int(point[0]), int(point[1])
    if not (0 <= x < ycc.width and 0 <= y < ycc.height):
        raise InvalidParameterError(f"point ({x}, {y}) outside image")
    stack = _log_stack(ycc, params.sigma_i_levels)
    r_max = min(ycc.width, ycc.height) / 2.0
    return _radius_from_profile(stack[:, y, x], params.sigma_i_levels, r_max)


def extract_regions(img: Image, params: DetectorParams | None = None):
    """Full detector: convert, smooth, corner response, non-max suppression,
    LoG radii. Degenerate images yield the inscribed circle of the frame."""
    if params is None:
        params = DetectorParams()
    ycc = rgb_to_ycbcr(img)
    sigma_i = params.sigma_i_levels[0]
    sigma_d = params.sigma_ratio * sigma_i
    lum = luminance_map(ycc, sigma_d)
    mfield = second_moment_field(lum, sigma_i, sigma_d)
    response = harris_response(mfield, params.alpha)
    points = detect_points(response, params.theta)[:params.max_regions]
    r_max = min(img.width, img.height) / 2.0
    if not points:
        return [InterestRegion((img.width - 1) / 2.0, (img.height - 1) / 2.0, r_max)]
    stack = _log_stack(ycc, params.sigma_i_levels)
    regions = []
    for x, y, resp in points:
        r = _radius_from_profile(stack[:, y, x], params.sigma_i_levels, r_max)
        regions.append(InterestRegion(float(x), float(y), r, resp))
    return regions
