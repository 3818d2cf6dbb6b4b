"""Raster primitives shared by the detector, discriminator and tracker."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionError

SSIM_C1 = (0.01 * 255) ** 2
SSIM_C2 = (0.03 * 255) ** 2


@dataclass(frozen=True, eq=False)
class Frame:
    """An 8-bit grayscale frame; ``pixels`` is indexed ``[row, col]``."""

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise DimensionError(f"frame must be a non-empty 2-D raster, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("frame amplitudes must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True, eq=False)
class DifferenceImage:
    values: np.ndarray
    pair: tuple[int, int]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Tile:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)


@dataclass(frozen=True)
class TileGrid:
    width: int
    height: int
    tile_size: int
    tiles: tuple[Tile, ...] = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) of the tile lattice."""
        return -(-self.height // self.tile_size), -(-self.width // self.tile_size)


@dataclass(frozen=True, eq=False)
class Blob:
    """A connected pixel set. ``rows``/``cols`` are sorted in raster order."""

    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        cols = np.asarray(self.cols, dtype=np.intp).ravel()
        if rows.shape != cols.shape or rows.size == 0:
            raise ValueError("blob needs a non-empty set of (row, col) pixels")
        order = np.lexsort((cols, rows))
        object.__setattr__(self, "rows", rows[order])
        object.__setattr__(self, "cols", cols[order])

    @property
    def area(self) -> int:
        return int(self.rows.size)

    @cached_property
    def bbox(self) -> tuple[int, int, int, int]:
        """Tight bounding box ``(x, y, w, h)``, top-left origin."""
        x0, x1 = int(self.cols.min()), int(self.cols.max())
        y0, y1 = int(self.rows.min()), int(self.rows.max())
        return x0, y0, x1 - x0 + 1, y1 - y0 + 1

    @cached_property
    def centroid(self) -> tuple[float, float]:
        """Unweighted mean pixel position ``(x, y)``."""
        return float(self.cols.mean()), float(self.rows.mean())

    @property
    def pixels(self) -> set[tuple[int, int]]:
        return set(zip(self.cols.tolist(), self.rows.tolist()))

    def translated(self, dx: int, dy: int) -> "Blob":
        return Blob(self.rows + dy, self.cols + dx)

    def __eq__(self, other):
        if not isinstance(other, Blob):
            return NotImplemented
        return np.array_equal(self.rows, other.rows) and np.array_equal(self.cols, other.cols)

    def __hash__(self):
        return hash((self.rows.tobytes(), self.cols.tobytes()))


def to_grayscale(rgb) -> Frame:
    """BT.601 luma of an RGB raster given as ``(H, W, 3)`` or a 3-sequence of channels."""
    if isinstance(rgb, (list, tuple)):
        shapes = {np.shape(c) for c in rgb}
        if len(rgb) != 3 or len(shapes) != 1:
            raise DimensionError(f"expected 3 channels of equal shape, got {sorted(shapes)}")
        arr = np.stack([np.asarray(c) for c in rgb], axis=-1)
    else:
        arr = np.asarray(rgb)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionError(f"expected an (H, W, 3) raster, got shape {arr.shape}")
    arr = arr.astype(np.float64)
    luma = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
    return Frame(np.clip(np.rint(luma), 0, 255).astype(np.uint8))


def absolute_difference(a: Frame, b: Frame) -> DifferenceImage:
    if a.shape != b.shape:
        raise DimensionError(f"frame sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    av = a.pixels.astype(np.int16)
    bv = b.pixels.astype(np.int16)
    return DifferenceImage(np.abs(av - bv).astype(np.uint8), (a.index, b.index))


def tile_grid(width: int, height: int, tile_size: int) -> TileGrid:
    """Row-major paving of the frame; right and bottom remainders become smaller tiles."""
    if width < 1 or height < 1:
        raise ValueError(f"frame dimensions must be positive, got {width}x{height}")
    if tile_size < 1:
        raise ValueError(f"tile_size must be >= 1, got {tile_size}")
    tiles = []
    for y in range(0, height, tile_size):
        for x in range(0, width, tile_size):
            tiles.append(Tile(x, y, min(tile_size, width - x), min(tile_size, height - y)))
    return TileGrid(width, height, tile_size, tuple(tiles))


def connected_components(mask, connectivity: int = 8) -> list[Blob]:
    """Blobs of ``mask`` ordered by their first pixel in raster order."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    m = np.asarray(mask)
    if m.ndim != 2:
        raise DimensionError(f"mask must be 2-D, got shape {m.shape}")
    labels, count = kernels.label(m.astype(np.uint8, copy=False), connectivity)
    if count == 0:
        return []
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    ids = flat[nz]
    order = np.argsort(ids, kind="stable")
    nz, ids = nz[order], ids[order]
    splits = np.flatnonzero(np.diff(ids)) + 1
    width = m.shape[1]
    return [Blob(idx // width, idx % width) for idx in np.split(nz, splits)]


def ssim(a, b) -> float:
    """Single-window SSIM of two equally sized patches (dynamic range 255)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"patch shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or min(a.shape) < 3:
        raise ValueError(f"patches must be 2-D with edge >= 3, got {a.shape}")
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        ai, bi = a.astype(np.int64), b.astype(np.int64)
        sa, sb = int(ai.sum()), int(bi.sum())
        saa, sbb, sab = int((ai * ai).sum()), int((bi * bi).sum()), int((ai * bi).sum())
    else:
        af, bf = a.astype(np.float64), b.astype(np.float64)
        sa, sb = float(af.sum()), float(bf.sum())
        saa, sbb, sab = float((af * af).sum()), float((bf * bf).sum()), float((af * bf).sum())
    n = float(a.size)
    mua, mub = sa / n, sb / n
    vara = saa / n - mua * mua
    varb = sbb / n - mub * mub
    cov = sab / n - mua * mub
    return ((2.0 * mua * mub + SSIM_C1) * (2.0 * cov + SSIM_C2)) / (
        (mua * mua + mub * mub + SSIM_C1) * (vara + varb + SSIM_C2))


def crop(frame: Frame, bbox: tuple[int, int, int, int]) -> np.ndarray:
    """Pixels of ``bbox`` clipped to the frame."""
    x, y, w, h = bbox
    x0, y0 = max(int(x), 0), max(int(y), 0)
    x1, y1 = min(int(x) + int(w), frame.width), min(int(y) + int(h), frame.height)
    return frame.pixels[y0:y1, x0:x1]
