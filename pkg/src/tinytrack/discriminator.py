"""Region growing and shape-based rejection of detector candidates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import kernels
from .imaging import Blob, Frame


@dataclass(frozen=True)
class GrowConfig:
    window: int = 11
    p_low: float = 5e-3
    p_high: float = 1 - 5e-3
    sigma_floor: float = 1.0
    connectivity: int = 8

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if not 0.0 < self.p_low < self.p_high < 1.0:
            raise ValueError(f"need 0 < p_low < p_high < 1, got {self.p_low}, {self.p_high}")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")


@dataclass(frozen=True)
class MorphFeatures:
    area: int
    extent: float
    major_axis_length: float
    eccentricity: float


@dataclass(frozen=True)
class DiscriminatorRules:
    area_min: int = 8
    area_max: int = 80
    extent_min: float = 0.4
    major_axis_max: float = 16.0
    eccentricity_max: float = 0.97
    # a blob that reaches the edge of its growing window was cut off there,
    # so its shape cues do not describe the object
    reject_truncated: bool = True

    def __post_init__(self):
        if self.area_min > self.area_max:
            raise ValueError("area_min must not exceed area_max")
        if not 0.0 < self.extent_min <= 1.0:
            raise ValueError("extent_min must be in (0, 1]")

    def accepts(self, f: MorphFeatures) -> bool:
        return (self.area_min <= f.area <= self.area_max
                and f.extent >= self.extent_min
                and f.major_axis_length <= self.major_axis_max
                and f.eccentricity <= self.eccentricity_max)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    blob: Blob
    features: MorphFeatures
    frame_index: int

    @property
    def centroid(self) -> tuple[float, float]:
        return self.blob.centroid

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return self.blob.bbox


def gaussian_bounds(mu: float, sigma: float, p_low: float = 5e-3, p_high: float = 1 - 5e-3) -> tuple[float, float]:
    """Inverse normal CDF at ``p_low`` and ``p_high``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 < p_low < p_high < 1.0:
        raise ValueError(f"need 0 < p_low < p_high < 1, got {p_low}, {p_high}")
    return mu + sigma * float(ndtri(p_low)), mu + sigma * float(ndtri(p_high))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def grow_window(frame: Frame, seed: Blob, config: GrowConfig) -> tuple[int, int, int, int]:
    """Search window ``(x0, y0, x1, y1)``, inclusive, clipped to the frame."""
    cx, cy = seed.centroid
    rx, ry = _round_half_up(cx), _round_half_up(cy)
    half = config.window // 2
    return (max(rx - half, 0), max(ry - half, 0),
            min(rx + half, frame.width - 1), min(ry + half, frame.height - 1))


def is_truncated(blob: Blob, window: tuple[int, int, int, int]) -> bool:
    x, y, w, h = blob.bbox
    x0, y0, x1, y1 = window
    return x <= x0 or y <= y0 or x + w - 1 >= x1 or y + h - 1 >= y1


def region_grow(frame: Frame, seed: Blob, config: GrowConfig | None = None) -> Blob:
    """Extend ``seed`` to connected window pixels inside the seed's Gaussian band.

    The band is fitted on the seed's own grey levels. The search window is
    centred on the rounded seed centroid. The result always contains the seed.
    """
    config = config or GrowConfig()
    h, w = frame.shape
    if seed.rows.min() < 0 or seed.cols.min() < 0 or seed.rows.max() >= h or seed.cols.max() >= w:
        raise ValueError("seed pixels lie outside the frame")
    # exact integer sums; seeds are small, so plain Python beats numpy here
    values = frame.pixels[seed.rows, seed.cols].tolist()
    n = len(values)
    mu = sum(values) / n
    sigma = max(math.sqrt(max(sum(v * v for v in values) / n - mu * mu, 0.0)), config.sigma_floor)
    lo, hi = gaussian_bounds(mu, sigma, config.p_low, config.p_high)
    cx, cy = seed.centroid
    rows, cols = kernels.grow_region(
        frame.pixels, seed.rows, seed.cols, _round_half_up(cy), _round_half_up(cx),
        config.window // 2, lo, hi, config.connectivity)
    return Blob(rows, cols)


def morph_features(blob: Blob) -> MorphFeatures:
    """Area, extent, and the moment-equivalent ellipse's major axis and eccentricity.

    Pixels count as unit squares, so 1/12 is added to both axis-aligned
    second moments.
    """
    x = blob.cols.astype(np.float64)
    y = blob.rows.astype(np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    m20 = float(np.mean(dx * dx)) + 1.0 / 12.0
    m02 = float(np.mean(dy * dy)) + 1.0 / 12.0
    m11 = float(np.mean(dx * dy))
    half_trace = 0.5 * (m20 + m02)
    spread = math.hypot(0.5 * (m20 - m02), m11)
    lam1 = half_trace + spread
    lam2 = max(half_trace - spread, 0.0)
    _, _, bw, bh = blob.bbox
    return MorphFeatures(
        area=blob.area,
        extent=blob.area / (bw * bh),
        major_axis_length=4.0 * math.sqrt(lam1),
        eccentricity=math.sqrt(max(0.0, 1.0 - lam2 / lam1)),
    )


def discriminate(candidates, frame: Frame, grow: GrowConfig | None = None,
                 rules: DiscriminatorRules | None = None) -> list[Hypothesis]:
    """Grow, measure and filter candidates.

    A blob that touches the border of its growing window is dropped when
    ``rules.reject_truncated`` is set. Candidates are visited in row-major
    order of their centroids. A candidate
    whose seed already lies inside an earlier grown blob is skipped, so a
    vehicle split into several seeds yields one hypothesis.
    """
    grow = grow or GrowConfig()
    rules = rules or DiscriminatorRules()
    ordered = sorted(candidates, key=lambda b: (b.centroid[1], b.centroid[0]))
    claimed: set[int] = set()
    width = frame.width
    out = []
    for seed in ordered:
        if claimed.intersection((seed.rows * width + seed.cols).tolist()):
            continue
        grown = region_grow(frame, seed, grow)
        claimed.update((grown.rows * width + grown.cols).tolist())
        if not rules.area_min <= grown.area <= rules.area_max:
            continue
        if rules.reject_truncated and is_truncated(grown, grow_window(frame, seed, grow)):
            continue
        features = morph_features(grown)
        if rules.accepts(features):
            out.append(Hypothesis(grown, features, frame.index))
    return out
