"""File formats: frame directories, annotation and track CSV, metrics JSON, overlays."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, UnidentifiedImageError

from .errors import ArgumentError, DimensionError, FileError, FormatError
from .evaluator import AnnotationSet
from .imaging import Frame, to_grayscale
from .pipeline import TrackRecord

FRAME_SUFFIXES = (".pgm", ".png", ".ppm", ".pnm")
ANNOTATION_HEADER = ("frame", "id", "x", "y", "w", "h")
TRACK_HEADER = ("frame", "track_id", "x", "y", "w", "h", "vx", "vy", "ax", "ay")


def _decode(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("L", "P", "1"):
                return np.asarray(img.convert("L"), dtype=np.uint8)
            if img.mode in ("I;16", "I;16B", "I"):
                raise FormatError(f"{path}: {img.mode} images are not 8-bit")
            return to_grayscale(np.asarray(img.convert("RGB"))).pixels
    except (OSError, UnidentifiedImageError) as exc:
        raise FileError(f"cannot read frame {path}: {exc}") from exc


def load_frames(path) -> list[Frame]:
    """Decode every image file in a directory, in lexicographic filename order."""
    root = Path(path)
    if not root.is_dir():
        raise ArgumentError(f"{root} is not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and p.suffix.lower() in FRAME_SUFFIXES)
    if not files:
        raise ArgumentError(f"{root} contains no frame files ({', '.join(FRAME_SUFFIXES)})")
    frames = []
    for k, f in enumerate(files):
        pixels = _decode(f)
        if frames and pixels.shape != frames[0].shape:
            h0, w0 = frames[0].shape
            h, w = pixels.shape
            raise DimensionError(f"{f.name} is {w}x{h} but {files[0].name} is {w0}x{h0}")
        frames.append(Frame(pixels, k))
    return frames


def write_frames(frames, out_dir, fmt: str = "pgm") -> list[Path]:
    """Write frames as ``000000.pgm`` (or ``.png``) named by frame index."""
    if fmt not in ("pgm", "png"):
        raise ArgumentError(f"unsupported frame format {fmt!r}")
    out = _ensure_dir(out_dir)
    paths = []
    for fr in frames:
        p = out / f"{fr.index:06d}.{fmt}"
        try:
            Image.fromarray(np.ascontiguousarray(fr.pixels)).save(p)
        except OSError as exc:
            raise FileError(f"cannot write {p}: {exc}") from exc
        paths.append(p)
    return paths


def _ensure_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileError(f"cannot create directory {out}: {exc}") from exc
    return out


def format_real(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def open_for_write(path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


def _read_rows(path, header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(c.strip() for c in first) != header:
            raise FormatError(f"{path}: expected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append((lineno, row))
        return rows


def write_annotations(annotations: AnnotationSet, path) -> None:
    entries = sorted(annotations.entries, key=lambda e: (e[0], e[1]))
    with open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ANNOTATION_HEADER)
        for frame, gid, (x, y, bw, bh) in entries:
            w.writerow([int(frame), int(gid), int(x), int(y), int(bw), int(bh)])


def read_annotations(path, keyframe_stride: int = 1) -> AnnotationSet:
    entries = []
    for lineno, row in _read_rows(path, ANNOTATION_HEADER):
        try:
            frame, gid, x, y, w, h = (int(c) for c in row)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: annotation fields must be integers") from exc
        entries.append((frame, gid, (x, y, w, h)))
    try:
        return AnnotationSet(entries, keyframe_stride)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_tracks(records, path) -> None:
    """Track CSV ordered by frame then track id, reals to 3 decimals."""
    rows = sorted(records, key=lambda r: (r.frame, r.track_id))
    with open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACK_HEADER)
        for r in rows:
            w.writerow([r.frame, r.track_id] + [format_real(v) for v in (r.x, r.y, r.w, r.h, r.vx, r.vy, r.ax, r.ay)])


def read_tracks(path) -> list[TrackRecord]:
    records, seen = [], set()
    for lineno, row in _read_rows(path, TRACK_HEADER):
        try:
            frame, tid = int(row[0]), int(row[1])
            reals = [float(c) for c in row[2:]]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: malformed track row") from exc
        if not all(math.isfinite(v) for v in reals):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        if reals[2] <= 0 or reals[3] <= 0:
            raise FormatError(f"{path}:{lineno}: box must have positive size")
        if (frame, tid) in seen:
            raise FormatError(f"{path}:{lineno}: duplicate row for track {tid} in frame {frame}")
        seen.add((frame, tid))
        records.append(TrackRecord(frame, tid, *reals))
    return records


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(doc, path) -> None:
    with open_for_write(path) as fh:
        fh.write(dumps_json(doc))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


_PALETTE = [(230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
            (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (250, 190, 212)]


def track_color(track_id: int) -> tuple[int, int, int]:
    return _PALETTE[track_id % len(_PALETTE)]


def overlay_paths(records, frame_index: int) -> dict[int, list[tuple[float, float]]]:
    """Per track, box centres of its history up to and including ``frame_index``."""
    paths: dict[int, list] = {}
    for r in sorted(records, key=lambda r: (r.track_id, r.frame)):
        if r.frame <= frame_index:
            paths.setdefault(r.track_id, []).append((r.x + r.w / 2.0, r.y + r.h / 2.0))
    return paths


def render_overlay(frame: Frame, records) -> Image.Image:
    """RGB image with each track's history polyline and its current box and id."""
    img = Image.fromarray(np.ascontiguousarray(frame.pixels)).convert("RGB")
    draw = ImageDraw.Draw(img)
    current = [r for r in records if r.frame == frame.index]
    alive = {r.track_id for r in current}
    for tid, pts in overlay_paths(records, frame.index).items():
        if tid not in alive:
            continue
        if len(pts) > 1:
            draw.line(pts, fill=track_color(tid), width=1)
    for r in current:
        color = track_color(r.track_id)
        draw.rectangle([r.x, r.y, r.x + r.w - 1, r.y + r.h - 1], outline=color)
        draw.text((r.x + r.w + 2, r.y - 10), str(r.track_id), fill=color)
    return img


def render_overlays(frames, records, out_dir) -> list[Path]:
    """One lossless PNG per frame, named after the frame index."""
    out = _ensure_dir(out_dir)
    records = list(records)
    paths = []
    for fr in frames:
        p = out / f"{fr.index:06d}.png"
        try:
            render_overlay(fr, records).save(p)
        except OSError as exc:
            raise FileError(f"cannot write {p}: {exc}") from exc
        paths.append(p)
    return paths
