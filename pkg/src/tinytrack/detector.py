"""Motion detection by local exponential noise modelling.

The absolute difference of two registered frames is treated as noise. Each
tile of the difference image gets its own exponential fit. Pixels in the
upper ``p_fa`` tail of their tile's fit are outliers. Outliers present in
both the backward and the forward difference mark the current position of
a mover.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDataError, DimensionError, InsufficientContextError
from .imaging import Blob, DifferenceImage, Frame, TileGrid, absolute_difference, connected_components, tile_grid

KL_BINS = 64


@dataclass(frozen=True)
class NoiseModel:
    rate: float
    tile_id: int
    sample_count: int


@dataclass(frozen=True)
class DetectorConfig:
    p_fa: float = 0.05
    tile_size: int = 30
    frame_interval: int = 10
    connectivity: int = 8

    def __post_init__(self):
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError(f"p_fa must be in (0, 1), got {self.p_fa}")
        if self.tile_size < 1:
            raise ValueError(f"tile_size must be >= 1, got {self.tile_size}")
        if self.frame_interval < 1:
            raise ValueError(f"frame_interval must be >= 1, got {self.frame_interval}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


@dataclass(frozen=True)
class FitDiagnostics:
    kl_distance: float
    ks_distance: float


def fit_exponential(samples) -> float:
    """Maximum-likelihood exponential rate, ``1 / mean``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot fit an exponential to zero samples")
    if np.any(x < 0):
        raise ValueError("exponential samples must be non-negative")
    total = float(x.sum())
    if total == 0.0:
        raise DegenerateDataError("all samples are zero; the rate is unbounded")
    return x.size / total


def binarization_threshold(rate: float, p_fa: float) -> float:
    """Amplitude exceeded with probability ``p_fa`` under Exp(rate)."""
    if not rate > 0.0 or not math.isfinite(rate):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    if not 0.0 < p_fa < 1.0:
        raise ValueError(f"p_fa must be in (0, 1), got {p_fa}")
    return -math.log(p_fa) / rate


def _check_grid(diff: DifferenceImage, grid: TileGrid):
    if (grid.width, grid.height) != (diff.width, diff.height):
        raise DimensionError(
            f"tile grid covers {grid.width}x{grid.height}, difference image is {diff.width}x{diff.height}")


def noise_models(diff: DifferenceImage, grid: TileGrid) -> list[NoiseModel]:
    """Per-tile exponential fits; all-zero tiles are skipped."""
    _check_grid(diff, grid)
    models = []
    for tile_id, tile in enumerate(grid.tiles):
        values = diff.values[tile.slices]
        if values.any():
            models.append(NoiseModel(fit_exponential(values), tile_id, values.size))
    return models


def binarize(diff: DifferenceImage, grid: TileGrid, p_fa: float) -> np.ndarray:
    """Boolean outlier mask: per tile, values strictly above the fitted threshold."""
    _check_grid(diff, grid)
    if not 0.0 < p_fa < 1.0:
        raise ValueError(f"p_fa must be in (0, 1), got {p_fa}")
    mask, _ = kernels.binarize_tiles(diff.values, grid.tile_size, p_fa)
    return mask.view(bool)


def logical_and(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return a & b


def _check_context(past: Frame, current: Frame, future: Frame, config: DetectorConfig):
    if not (past.shape == current.shape == future.shape):
        raise DimensionError(f"frame sizes differ: {past.shape}, {current.shape}, {future.shape}")
    lag = config.frame_interval
    if current.index - past.index != lag or future.index - current.index != lag:
        raise InsufficientContextError(
            f"detect needs frames i-{lag}, i, i+{lag}; got {past.index}, {current.index}, {future.index}")


def detection_masks(past: Frame, current: Frame, future: Frame, config: DetectorConfig):
    """Return ``(backward_mask, forward_mask, combined_mask)`` for frame ``current``."""
    _check_context(past, current, future, config)
    grid = tile_grid(current.width, current.height, config.tile_size)
    backward = binarize(absolute_difference(current, past), grid, config.p_fa)
    forward = binarize(absolute_difference(current, future), grid, config.p_fa)
    return backward, forward, logical_and(backward, forward)


def detect(past: Frame, current: Frame, future: Frame, config: DetectorConfig | None = None) -> list[Blob]:
    """Candidate blobs at their position in ``current``."""
    config = config or DetectorConfig()
    _, _, combined = detection_masks(past, current, future, config)
    return connected_components(combined, config.connectivity)


def kl_distance(p, q) -> float:
    """``sum p ln(p/q)`` over entries with ``p > 0``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    keep = p > 0
    if np.any(q[keep] <= 0):
        return math.inf
    return float(np.sum(p[keep] * np.log(p[keep] / q[keep])))


def exponential_cdf(x, rate: float):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, -np.expm1(-rate * np.maximum(x, 0.0)), 0.0)


def fit_diagnostics(samples, rate: float) -> FitDiagnostics:
    """KL over a 64-bin histogram on ``[0, max]`` and the exact one-sample KS statistic."""
    if not rate > 0.0 or not math.isfinite(rate):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    if n < 2:
        raise ValueError("fit diagnostics need at least two samples")
    top = x[-1]
    if top <= 0:
        raise DegenerateDataError("all samples are zero; histogram range is empty")

    cdf = exponential_cdf(x, rate)
    i = np.arange(1, n + 1)
    ks = max(float(np.max(i / n - cdf)), float(np.max(cdf - (i - 1) / n)))

    counts, edges = np.histogram(x, bins=KL_BINS, range=(0.0, top))
    q = np.diff(exponential_cdf(edges, rate))
    kl = kl_distance(counts / n, q)
    return FitDiagnostics(kl_distance=max(kl, 0.0), ks_distance=ks)
