"""Kalman-filter multi-object tracking with SSIM recovery of missed detections.

State layout is ``[x, y, vx, vy, ax, ay]`` in pixels and frames.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import kernels
from .imaging import SSIM_C1, SSIM_C2, Frame

ACTIVE = "active"
TERMINATED = "terminated"

_H = np.zeros((2, 6))
_H[0, 0] = _H[1, 1] = 1.0

# cost assigned to out-of-gate pairs so the solver never trades an in-gate
# match for a cheaper total that includes an out-of-gate one
_GATED_COST = 1e9


@dataclass(frozen=True)
class TrackerConfig:
    tau: float = 1.0
    gate_distance: float = 15.0
    ssim_threshold: float = 0.6
    search_radius: int = 8
    process_noise_scale: float = 0.01
    measurement_noise_scale: float = 4.0
    max_misses: int = 0
    # consecutive frames a track may live on template search alone
    max_recoveries: int | None = 15
    patch_margin: int = 2
    # a pair of hypotheses closer than this does not start a track: the
    # detector only fires on motion, so a static pair is background structure
    min_init_displacement: float = 0.5
    # a track is reported only once this many of its frames came from
    # associated hypotheses rather than template search
    min_detections: int = 8
    # ...and only if its median filtered speed (px/frame) reaches this; the
    # frames are registered, so slower tracks follow residual background motion
    min_report_speed: float = 0.5
    initial_accel_variance: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.gate_distance > 0:
            raise ValueError("gate_distance must be positive")
        if not 0.0 < self.ssim_threshold < 1.0:
            raise ValueError("ssim_threshold must be in (0, 1)")
        if self.search_radius < 0 or self.max_misses < 0 or self.patch_margin < 0:
            raise ValueError("search_radius, max_misses and patch_margin must be non-negative")
        if self.min_report_speed < 0:
            raise ValueError("min_report_speed must be non-negative")
        if self.min_detections < 0:
            raise ValueError("min_detections must be non-negative")
        if self.min_init_displacement < 0:
            raise ValueError("min_init_displacement must be non-negative")
        if self.max_recoveries is not None and self.max_recoveries < 0:
            raise ValueError("max_recoveries must be non-negative or None")
        if not self.measurement_noise_scale > 0:
            raise ValueError("measurement_noise_scale must be positive")


@dataclass(frozen=True, eq=False)
class FilterState:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def position(self) -> tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])


def transition_matrix(tau: float) -> np.ndarray:
    """Constant-acceleration evolution matrix."""
    f = np.eye(6)
    f[0, 2] = f[1, 3] = f[2, 4] = f[3, 5] = tau
    f[0, 4] = f[1, 5] = 0.5 * tau * tau
    return f


def process_noise(tau: float, q_scale: float) -> np.ndarray:
    """Discretised white-jerk noise for the interleaved x/y state."""
    t2, t3, t4, t5 = tau ** 2, tau ** 3, tau ** 4, tau ** 5
    axis = np.array([
        [t5 / 20, t4 / 8, t3 / 6],
        [t4 / 8, t3 / 3, t2 / 2],
        [t3 / 6, t2 / 2, tau],
    ])
    q = np.zeros((6, 6))
    for a in range(2):
        idx = [a, a + 2, a + 4]
        q[np.ix_(idx, idx)] = axis
    return q_scale * q


def kf_predict(state: FilterState, tau: float = 1.0, q_scale: float = 0.01) -> FilterState:
    f = transition_matrix(tau)
    cov = f @ state.covariance @ f.T + process_noise(tau, q_scale)
    return FilterState(f @ state.mean, 0.5 * (cov + cov.T))


def kf_update(state: FilterState, measurement, r_scale: float = 4.0) -> FilterState:
    """Position update. The covariance uses the Joseph form, which equals
    ``(I - K H) P`` but stays symmetric positive semi-definite in floating point."""
    z = np.asarray(measurement, dtype=np.float64)
    p = state.covariance
    r = r_scale * np.eye(2)
    s = _H @ p @ _H.T + r
    k = np.linalg.solve(s, _H @ p).T
    mean = state.mean + k @ (z - _H @ state.mean)
    ikh = np.eye(6) - k @ _H
    cov = ikh @ p @ ikh.T + k @ r @ k.T
    return FilterState(mean, 0.5 * (cov + cov.T))


class Matching(NamedTuple):
    pairs: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]


def hungarian(cost) -> Matching:
    """Minimum-cost maximum-cardinality assignment of rows to columns."""
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost must be a 2-D matrix, got shape {c.shape}")
    if c.size == 0:
        return Matching([], list(range(c.shape[0])), list(range(c.shape[1])))
    rows, cols = linear_sum_assignment(c)
    pairs = sorted(zip(rows.tolist(), cols.tolist()))
    used_r = {r for r, _ in pairs}
    used_c = {k for _, k in pairs}
    return Matching(pairs,
                    [r for r in range(c.shape[0]) if r not in used_r],
                    [k for k in range(c.shape[1]) if k not in used_c])


class Association(NamedTuple):
    assignments: list[tuple[int, int]]  # (track index, hypothesis index)
    unassigned_tracks: list[int]
    unassigned_hypotheses: list[int]


def distance_matrix(points_a, points_b) -> np.ndarray:
    a = np.asarray(points_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(points_b, dtype=np.float64).reshape(-1, 2)
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def associate(hypothesis_points, track_points, gate: float) -> Association:
    """Hungarian matching on Euclidean distance; pairs beyond ``gate`` are dropped."""
    dist = distance_matrix(track_points, hypothesis_points)
    n_t, n_h = dist.shape
    matching = hungarian(np.where(dist > gate, _GATED_COST, dist))
    pairs, un_t, un_h = [], list(matching.unmatched_rows), list(matching.unmatched_cols)
    for t, h in matching.pairs:
        if dist[t, h] > gate:
            un_t.append(t)
            un_h.append(h)
        else:
            pairs.append((t, h))
    return Association(pairs, sorted(un_t), sorted(un_h))


@dataclass
class Track:
    id: int
    filter: FilterState
    status: str = ACTIVE
    history: list = field(default_factory=list)  # (frame_index, bbox, state vector)
    last_patch: np.ndarray | None = None
    patch_origin: tuple[int, int] = (0, 0)
    object_offset: tuple[int, int, int, int] = (0, 0, 1, 1)
    misses: int = 0
    recoveries: int = 0  # consecutive frames confirmed by template search only
    longest_recovery: int = 0
    detections: int = 0  # frames confirmed by an associated hypothesis

    @property
    def active(self) -> bool:
        return self.status == ACTIVE

    @property
    def last_bbox(self):
        return self.history[-1][1] if self.history else None

    def snapshot(self) -> "Track":
        return Track(self.id, self.filter, self.status, list(self.history), self.last_patch,
                     self.patch_origin, self.object_offset, self.misses, self.recoveries,
                     self.longest_recovery, self.detections)


def bbox_center(bbox) -> tuple[float, float]:
    """Centre of a pixel box in the same convention as blob centroids."""
    x, y, w, h = bbox
    return x + (w - 1) / 2.0, y + (h - 1) / 2.0


def median_speed(track: Track) -> float:
    if not track.history:
        return 0.0
    return float(np.median([np.hypot(s[2], s[3]) for _, _, s in track.history]))


def capture_patch(frame: Frame, bbox, margin: int):
    """Patch around ``bbox`` inflated by ``margin`` and clipped to the frame.

    Returns ``(patch, (px, py), (ox, oy, w, h))`` where ``(px, py)`` is the patch
    origin and ``(ox, oy)`` the bbox offset inside it.
    """
    x, y, w, h = (int(v) for v in bbox)
    x0, y0 = max(x - margin, 0), max(y - margin, 0)
    x1, y1 = min(x + w + margin, frame.width), min(y + h + margin, frame.height)
    return frame.pixels[y0:y1, x0:x1].copy(), (x0, y0), (x - x0, y - y0, w, h)


def nearest_search(track: Track, current: Frame, config: TrackerConfig):
    """Best SSIM placement of the track's template near its last confirmed position.

    Returns ``(bbox, score)`` or ``None`` when no placement reaches the threshold.
    """
    if track.last_patch is None:
        raise ValueError(f"track {track.id} has no template patch")
    patch = track.last_patch
    ph, pw = patch.shape
    if ph < 3 or pw < 3:
        return None
    px, py = track.patch_origin
    r = config.search_radius
    y0, y1 = max(py - r, 0), min(py + r, current.height - ph)
    x0, x1 = max(px - r, 0), min(px + r, current.width - pw)
    if y0 > y1 or x0 > x1:
        return None
    scores = kernels.ssim_map(current.pixels, patch, y0, y1, x0, x1, SSIM_C1, SSIM_C2)
    best = int(np.argmax(scores))
    by, bx = divmod(best, scores.shape[1])
    score = float(scores[by, bx])
    if score < config.ssim_threshold:
        return None
    ox, oy, w, h = track.object_offset
    return (x0 + bx + ox, y0 + by + oy, w, h), score


class Tracker:
    """Sequential multi-object tracker. Call :meth:`step` once per frame, in order."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self._pending: list = []
        self._next_id = 0
        self._last_frame: int | None = None

    @property
    def active_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.active]

    @property
    def confirmed_tracks(self) -> list[Track]:
        """Tracks, live or ended, that pass the detection-count and speed tests."""
        cfg = self.config
        return [t for t in self.tracks
                if t.detections >= cfg.min_detections and median_speed(t) >= cfg.min_report_speed]

    def _initial_filter(self, position, velocity) -> FilterState:
        cfg = self.config
        r = cfg.measurement_noise_scale
        mean = np.array([position[0], position[1], velocity[0], velocity[1], 0.0, 0.0])
        var_v = 2.0 * r / cfg.tau ** 2
        a = cfg.initial_accel_variance
        return FilterState(mean, np.diag([r, r, var_v, var_v, a, a]))

    def _confirm(self, track: Track, frame: Frame, bbox):
        track.history.append((frame.index, tuple(bbox), track.filter.mean.copy()))

    def _refresh_patch(self, track: Track, frame: Frame, bbox):
        track.last_patch, track.patch_origin, track.object_offset = capture_patch(
            frame, bbox, self.config.patch_margin)

    def step(self, hypotheses, frame: Frame) -> list[Track]:
        """Advance every track to ``frame`` and return the active tracks."""
        cfg = self.config
        if self._last_frame is not None and frame.index <= self._last_frame:
            raise ValueError(f"frames must be stepped in increasing order, got {frame.index} after {self._last_frame}")
        contiguous = self._last_frame is not None and frame.index == self._last_frame + 1
        self._last_frame = frame.index

        active = self.active_tracks
        for t in active:
            t.filter = kf_predict(t.filter, cfg.tau, cfg.process_noise_scale)

        points = [h.centroid for h in hypotheses]
        assoc = associate(points, [t.filter.position for t in active], cfg.gate_distance)
        for ti, hi in assoc.assignments:
            t, hyp = active[ti], hypotheses[hi]
            t.filter = kf_update(t.filter, hyp.centroid, cfg.measurement_noise_scale)
            t.misses = 0
            t.recoveries = 0
            t.detections += 1
            self._confirm(t, frame, hyp.bbox)
            self._refresh_patch(t, frame, hyp.bbox)

        recovered = []
        for ti in assoc.unassigned_tracks:
            t = active[ti]
            limit_hit = cfg.max_recoveries is not None and t.recoveries >= cfg.max_recoveries
            found = None if limit_hit else nearest_search(t, frame, cfg)
            if found is None:
                t.misses += 1
                if t.misses > cfg.max_misses:
                    t.status = TERMINATED
                continue
            bbox, _ = found
            t.filter = kf_update(t.filter, bbox_center(bbox), cfg.measurement_noise_scale)
            t.misses = 0
            t.recoveries += 1
            t.longest_recovery = max(t.longest_recovery, t.recoveries)
            self._confirm(t, frame, bbox)
            ox, oy, _, _ = t.object_offset
            t.patch_origin = (bbox[0] - ox, bbox[1] - oy)
            recovered.append(bbox)

        leftovers = []
        for hi in assoc.unassigned_hypotheses:
            cx, cy = hypotheses[hi].centroid
            if any(bx <= cx < bx + bw and by <= cy < by + bh for bx, by, bw, bh in recovered):
                continue
            leftovers.append(hypotheses[hi])

        pending = self._pending if contiguous else []
        init = associate([h.centroid for h in leftovers], [p.centroid for p in pending], cfg.gate_distance)
        spawned = set()
        for pi, hi in init.assignments:
            prev, cur = pending[pi], leftovers[hi]
            (x0, y0), (x1, y1) = prev.centroid, cur.centroid
            if np.hypot(x1 - x0, y1 - y0) < cfg.min_init_displacement:
                continue
            vel = ((x1 - x0) / cfg.tau, (y1 - y0) / cfg.tau)
            track = Track(self._next_id, self._initial_filter((x1, y1), vel), detections=2)
            self._next_id += 1
            first = np.array([x0, y0, vel[0], vel[1], 0.0, 0.0])
            track.history.append((prev.frame_index, tuple(prev.bbox), first))
            self._confirm(track, frame, cur.bbox)
            self._refresh_patch(track, frame, cur.bbox)
            self.tracks.append(track)
            spawned.add(hi)
        self._pending = [h for i, h in enumerate(leftovers) if i not in spawned]
        return self.active_tracks
