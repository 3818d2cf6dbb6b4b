"""Deterministic synthetic wide-area scenes with tiny movers and exact ground truth.

Frames combine a smooth textured background with block structure, shifted
by a cumulative sub-pixel drift (bilinear resampling). Vehicles are
anti-aliased rectangles. Each pixel gets additive signed-exponential noise.
Every random draw comes from ``seed`` through per-purpose derived streams,
so output does not depend on rendering order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates, zoom

from .evaluator import AnnotationSet
from .imaging import Frame

_TEXTURE_STREAM = 0x7E47
_NOISE_STREAM = 0x0015


@dataclass(frozen=True)
class VehicleSpec:
    """A rectangle of ``size`` (w, h) following ``path`` between two frames.

    ``path`` is a mapping with ``kind`` in ``line``, ``arc`` or ``roundabout``:

    * line: ``start`` centre (x, y) and ``velocity`` (px/frame)
    * arc: as line, plus ``angular_rate`` (rad/frame) applied to the heading
      between ``turn_start`` and ``turn_end`` (frames since ``start_frame``)
    * roundabout: ``center``, ``radius``, ``start_angle`` and ``angular_rate``
    """

    size: tuple[int, int]
    intensity: float
    path: dict
    start_frame: int = 0
    end_frame: int | None = None

    def __post_init__(self):
        w, h = self.size
        if w < 1 or h < 1:
            raise ValueError(f"vehicle size must be at least 1x1, got {self.size}")
        if self.end_frame is not None and self.end_frame < self.start_frame:
            raise ValueError("end_frame must not precede start_frame")
        if self.path.get("kind") not in ("line", "arc", "roundabout"):
            raise ValueError(f"unknown path kind {self.path.get('kind')!r}")

    def active(self, frame_index: int) -> bool:
        end = math.inf if self.end_frame is None else self.end_frame
        return self.start_frame <= frame_index <= end

    def center(self, frame_index: int) -> tuple[float, float]:
        """Scene-coordinate centre at ``frame_index``."""
        t = frame_index - self.start_frame
        p = self.path
        kind = p["kind"]
        if kind == "line":
            (x, y), (vx, vy) = p["start"], p["velocity"]
            return x + vx * t, y + vy * t
        if kind == "roundabout":
            cx, cy = p["center"]
            a = p.get("start_angle", 0.0) + p["angular_rate"] * t
            return cx + p["radius"] * math.cos(a), cy + p["radius"] * math.sin(a)
        # arc: integrate a heading that turns at a constant rate inside the turn span
        x, y = p["start"]
        vx, vy = p["velocity"]
        speed, heading = math.hypot(vx, vy), math.atan2(vy, vx)
        rate = p["angular_rate"]
        t0, t1 = p.get("turn_start", 0), p.get("turn_end", math.inf)
        for k in range(t):
            x += speed * math.cos(heading)
            y += speed * math.sin(heading)
            if t0 <= k < t1:
                heading += rate
        return x, y


@dataclass(frozen=True)
class ScenarioConfig:
    width: int
    height: int
    num_frames: int
    noise_lambda: float | None = 0.5
    drift: tuple[float, float] = (0.0, 0.0)
    vehicles: tuple[VehicleSpec, ...] = ()
    seed: int = 0
    base_level: float = 100.0
    texture_amplitude: float = 20.0
    texture_cell: int = 48
    block_count: int = 0
    block_contrast: float = 40.0
    block_size: tuple[int, int] = (12, 40)

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.num_frames < 1:
            raise ValueError("width, height and num_frames must be positive")
        if self.noise_lambda is not None and not self.noise_lambda > 0:
            raise ValueError("noise_lambda must be positive (or None for a noiseless scene)")
        if self.texture_cell < 1:
            raise ValueError("texture_cell must be positive")
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "drift", tuple(self.drift))

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        vehicles = []
        for v in doc.pop("vehicles", []):
            v = dict(v)
            v["size"] = tuple(v["size"])
            vehicles.append(VehicleSpec(**v))
        for key in ("drift", "block_size"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(vehicles=tuple(vehicles), **doc)

    def to_dict(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "vehicles"}
        doc["drift"] = list(self.drift)
        doc["block_size"] = list(self.block_size)
        doc["vehicles"] = [
            {"size": list(v.size), "intensity": v.intensity, "path": v.path,
             "start_frame": v.start_frame, "end_frame": v.end_frame}
            for v in self.vehicles
        ]
        return doc


def drift_displacement(config: ScenarioConfig, frame_index: int) -> tuple[float, float]:
    """Cumulative background shift at ``frame_index``."""
    if not 0 <= frame_index < config.num_frames:
        raise ValueError(f"frame_index {frame_index} outside [0, {config.num_frames})")
    return frame_index * config.drift[0], frame_index * config.drift[1]


def _margin(config: ScenarioConfig) -> int:
    span = max(abs(config.drift[0]), abs(config.drift[1])) * max(config.num_frames - 1, 0)
    return int(math.ceil(span)) + 2


def background_texture(config: ScenarioConfig) -> np.ndarray:
    """Float texture canvas padded by the drift margin on every side."""
    m = _margin(config)
    h, w = config.height + 2 * m, config.width + 2 * m
    rng = np.random.default_rng([config.seed, _TEXTURE_STREAM])
    cell = config.texture_cell
    gy, gx = h // cell + 3, w // cell + 3
    coarse = rng.uniform(-1.0, 1.0, size=(gy, gx))
    smooth = zoom(coarse, cell, order=3, mode="nearest")[:h, :w]
    canvas = config.base_level + config.texture_amplitude * smooth
    lo, hi = config.block_size
    for _ in range(config.block_count):
        bw, bh = rng.integers(lo, hi + 1, size=2)
        bx = rng.integers(0, max(w - bw, 1))
        by = rng.integers(0, max(h - bh, 1))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        canvas[by:by + bh, bx:bx + bw] += sign * config.block_contrast
    return canvas


def _coverage(lo: float, hi: float, n: int) -> np.ndarray:
    """Overlap of [lo, hi) with each pixel [c - 0.5, c + 0.5)."""
    c = np.arange(n, dtype=np.float64)
    return np.clip(np.minimum(c + 0.5, hi) - np.maximum(c - 0.5, lo), 0.0, 1.0)


def _frame_center(vehicle: VehicleSpec, config: ScenarioConfig, frame_index: int):
    sx, sy = vehicle.center(frame_index)
    dx, dy = drift_displacement(config, frame_index)
    return sx + dx, sy + dy


def vehicle_box(vehicle: VehicleSpec, config: ScenarioConfig, frame_index: int):
    """Integer annotation box clipped to the frame, or ``None`` when fully outside."""
    cx, cy = _frame_center(vehicle, config, frame_index)
    w, h = vehicle.size
    x0 = math.floor(cx - (w - 1) / 2.0 + 0.5)
    y0 = math.floor(cy - (h - 1) / 2.0 + 0.5)
    x1, y1 = min(x0 + w, config.width), min(y0 + h, config.height)
    x0, y0 = max(x0, 0), max(y0, 0)
    if x1 <= x0 or y1 <= y0:
        return None
    return x0, y0, x1 - x0, y1 - y0


def render_frame(config: ScenarioConfig, frame_index: int, texture: np.ndarray | None = None) -> np.ndarray:
    if texture is None:
        texture = background_texture(config)
    m = _margin(config)
    dx, dy = drift_displacement(config, frame_index)
    ys, xs = np.mgrid[0:config.height, 0:config.width].astype(np.float64)
    img = map_coordinates(texture, [ys - dy + m, xs - dx + m], order=1, mode="nearest")
    for v in config.vehicles:
        if not v.active(frame_index):
            continue
        cx, cy = _frame_center(v, config, frame_index)
        w, h = v.size
        cov_x = _coverage(cx - w / 2.0, cx + w / 2.0, config.width)
        cov_y = _coverage(cy - h / 2.0, cy + h / 2.0, config.height)
        img += v.intensity * np.outer(cov_y, cov_x)
    if config.noise_lambda is not None:
        rng = np.random.default_rng([config.seed, _NOISE_STREAM, frame_index])
        magnitude = rng.exponential(1.0 / config.noise_lambda, size=img.shape)
        sign = np.where(rng.random(img.shape) < 0.5, -1.0, 1.0)
        img += sign * magnitude
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate(config: ScenarioConfig):
    """Render every frame and the exact per-frame annotations.

    Returns ``(frames, annotations)``.
    """
    texture = background_texture(config)
    frames = [Frame(render_frame(config, i, texture), i) for i in range(config.num_frames)]
    entries = []
    for i in range(config.num_frames):
        for gid, v in enumerate(config.vehicles):
            if not v.active(i):
                continue
            box = vehicle_box(v, config, i)
            if box is not None:
                entries.append((i, gid, box))
    return frames, AnnotationSet(entries, keyframe_stride=1)
