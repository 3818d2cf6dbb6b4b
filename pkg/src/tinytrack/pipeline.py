"""End-to-end driver: detect, discriminate and track over a frame sequence."""
from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field

from .detector import DetectorConfig, binarize, logical_and
from .discriminator import DiscriminatorRules, GrowConfig, discriminate
from .errors import ConfigError, DimensionError, InsufficientContextError
from .evaluator import DEFAULT_DISTANCE_THRESHOLD, DEFAULT_WINDOW
from .imaging import absolute_difference, connected_components, tile_grid
from .tracker import Tracker, TrackerConfig


@dataclass(frozen=True)
class EvalConfig:
    window: int = DEFAULT_WINDOW
    distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD


@dataclass(frozen=True)
class PipelineConfig:
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    grow: GrowConfig = field(default_factory=GrowConfig)
    rules: DiscriminatorRules = field(default_factory=DiscriminatorRules)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        return cls().with_overrides(
            {f"{section}.{key}": value for section, values in doc.items() for key, value in values.items()})

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Apply ``{"section.key": value}`` overrides; string values are parsed as literals."""
        sections = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        changes: dict = {}
        for dotted, value in overrides.items():
            section, _, key = dotted.partition(".")
            if section not in sections or not key:
                raise ConfigError(f"unknown configuration key {dotted!r}")
            sub = sections[section]
            names = {f.name for f in dataclasses.fields(sub)}
            if key not in names:
                raise ConfigError(f"unknown configuration key {dotted!r}; {section} has {sorted(names)}")
            if isinstance(value, str):
                try:
                    value = ast.literal_eval(value)
                except (ValueError, SyntaxError):
                    pass
            if isinstance(value, list):
                value = tuple(value)
            changes.setdefault(section, {})[key] = value
        try:
            return dataclasses.replace(
                self, **{s: dataclasses.replace(sections[s], **kv) for s, kv in changes.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    track_id: int
    x: float
    y: float
    w: float
    h: float
    vx: float
    vy: float
    ax: float
    ay: float

    @property
    def bbox(self):
        return self.x, self.y, self.w, self.h


def minimum_frames(config: PipelineConfig) -> int:
    return 2 * config.detector.frame_interval + 1


class _MaskCache:
    """Binarised difference masks keyed by unordered frame pair.

    ``|a - b|`` is symmetric, so frame ``i``'s forward mask equals frame
    ``i + lag``'s backward mask.
    """

    def __init__(self, frames, config: DetectorConfig):
        self.frames = frames
        self.config = config
        self.grid = tile_grid(frames[0].width, frames[0].height, config.tile_size)
        self._masks: dict = {}

    def get(self, i: int, j: int):
        key = (min(i, j), max(i, j))
        if key not in self._masks:
            diff = absolute_difference(self.frames[key[0]], self.frames[key[1]])
            self._masks[key] = binarize(diff, self.grid, self.config.p_fa)
        return self._masks[key]

    def drop_before(self, i: int):
        for key in [k for k in self._masks if k[0] < i]:
            del self._masks[key]


def _check_frames(frames, config: PipelineConfig):
    need = minimum_frames(config)
    if len(frames) < need:
        raise InsufficientContextError(
            f"need at least {need} frames (2*frame_interval+1), got {len(frames)}")
    shape = frames[0].shape
    for f in frames:
        if f.shape != shape:
            raise DimensionError(f"frame {f.index} is {f.width}x{f.height}, expected {shape[1]}x{shape[0]}")


def iter_detections(frames, config: PipelineConfig | None = None):
    """Yield ``(frame, candidate_count, hypotheses)`` for every frame with full context."""
    config = config or PipelineConfig()
    frames = list(frames)
    _check_frames(frames, config)
    lag = config.detector.frame_interval
    cache = _MaskCache(frames, config.detector)
    for i in range(lag, len(frames) - lag):
        current = frames[i]
        combined = logical_and(cache.get(i, i - lag), cache.get(i, i + lag))
        candidates = connected_components(combined, config.detector.connectivity)
        yield current, len(candidates), discriminate(candidates, current, config.grow, config.rules)
        cache.drop_before(i - lag + 1)


def run_pipeline(frames, config: PipelineConfig | None = None, progress=None):
    """Process every frame that has full temporal context.

    Returns ``(records, hypothesis_log)``. ``records`` are sorted by frame then
    track id. ``hypothesis_log`` maps frame index to the candidate count and
    the hypotheses kept.
    """
    config = config or PipelineConfig()
    tracker = Tracker(config.tracker)
    log = {}
    for current, n_candidates, hypotheses in iter_detections(frames, config):
        tracker.step(hypotheses, current)
        log[current.index] = {"candidates": n_candidates, "hypotheses": hypotheses}
        if progress is not None:
            progress(current.index)
    return tracks_to_records(tracker.confirmed_tracks), log


def tracks_to_records(tracks) -> list[TrackRecord]:
    rows = []
    for t in tracks:
        for frame, (x, y, w, h), s in t.history:
            rows.append(TrackRecord(int(frame), t.id, float(x), float(y), float(w), float(h),
                                    float(s[2]), float(s[3]), float(s[4]), float(s[5])))
    rows.sort(key=lambda r: (r.frame, r.track_id))
    return rows
