"""Hypothesis-to-ground-truth scoring with reciprocal-IoU costs.

Association runs per frame with the Hungarian solver inside windows of K
frames. A pairing made earlier in a window is kept for the rest of that
window while it stays inside the distance gate. Identity switches are
counted against a ground truth's most recent match, also across windows.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .tracker import hungarian

IOU_EPS = 1e-6
DEFAULT_DISTANCE_THRESHOLD = 50.0
DEFAULT_WINDOW = 10


@dataclass
class AnnotationSet:
    entries: list = field(default_factory=list)  # (frame_index, gt_id, (x, y, w, h))
    keyframe_stride: int = 1

    def __post_init__(self):
        seen = set()
        for frame, gid, box in self.entries:
            if (frame, gid) in seen:
                raise ValueError(f"duplicate annotation for id {gid} in frame {frame}")
            if box[2] <= 0 or box[3] <= 0:
                raise ValueError(f"annotation for id {gid} in frame {frame} has non-positive size")
            seen.add((frame, gid))

    def frames(self) -> list[int]:
        return sorted({f for f, _, _ in self.entries})


def interpolate_ground_truth(annotations: AnnotationSet, frame_range=None) -> dict[int, list]:
    """Per-frame ``[(gt_id, bbox), ...]`` with box corners interpolated between keyframes.

    ``frame_range`` limits the output to the given frame indices.
    """
    by_id = defaultdict(list)
    for frame, gid, box in annotations.entries:
        by_id[gid].append((frame, tuple(float(v) for v in box)))
    wanted = None if frame_range is None else set(frame_range)
    out = defaultdict(list)
    for gid in sorted(by_id):
        keys = sorted(by_id[gid])
        for (f0, b0), (f1, b1) in zip(keys, keys[1:]):
            c0 = np.array([b0[0], b0[1], b0[0] + b0[2], b0[1] + b0[3]])
            c1 = np.array([b1[0], b1[1], b1[0] + b1[2], b1[1] + b1[3]])
            for f in range(f0, f1):
                if wanted is not None and f not in wanted:
                    continue
                if f == f0:
                    out[f].append((gid, b0))
                    continue
                a = (f - f0) / (f1 - f0)
                x0, y0, x1, y1 = ((1 - a) * c0 + a * c1).tolist()
                out[f].append((gid, (x0, y0, x1 - x0, y1 - y0)))
        f_last, b_last = keys[-1]
        if wanted is None or f_last in wanted:
            out[f_last].append((gid, b_last))
    if wanted is not None:
        for f in wanted:
            out.setdefault(f, [])
    return {f: sorted(v) for f, v in sorted(out.items())}


def iou(a, b) -> float:
    """Intersection over union of two ``(x, y, w, h)`` half-open rectangles."""
    ax0, ay0, aw, ah = a
    bx0, by0, bw, bh = b
    iw = min(ax0 + aw, bx0 + bw) - max(ax0, bx0)
    ih = min(ay0 + ah, by0 + bh) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def iou_matrix(hyp_boxes, gt_boxes) -> np.ndarray:
    out = np.zeros((len(hyp_boxes), len(gt_boxes)))
    for i, hb in enumerate(hyp_boxes):
        for j, gb in enumerate(gt_boxes):
            out[i, j] = iou(hb, gb)
    return out


def cost_matrix(hyp_boxes, gt_boxes) -> np.ndarray:
    """Reciprocal IoU distances, shape ``(len(hyp_boxes), len(gt_boxes))``."""
    return 1.0 / (iou_matrix(hyp_boxes, gt_boxes) + IOU_EPS)


def associate_window(cost_tensor, distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD,
                     hyp_ids=None, gt_ids=None) -> list[list[tuple[int, int]]]:
    """Match hypotheses to ground truths in each frame of one window.

    ``cost_tensor`` is a sequence of per-frame cost matrices. ``hyp_ids`` and
    ``gt_ids`` (per frame) name the rows and columns. A pair matched in an
    earlier frame of the window is kept while its cost stays within the gate.
    Returns per-frame ``(row, col)`` pairs.
    """
    result = []
    carried: dict = {}  # gt id -> hypothesis id, established in this window
    for t, cost in enumerate(cost_tensor):
        cost = np.asarray(cost, dtype=np.float64)
        n_h, n_g = cost.shape if cost.ndim == 2 else (0, 0)
        hids = list(hyp_ids[t]) if hyp_ids is not None else list(range(n_h))
        gids = list(gt_ids[t]) if gt_ids is not None else list(range(n_g))
        row_of = {h: i for i, h in enumerate(hids)}
        pairs = []
        used_r = set()
        for j, g in enumerate(gids):
            h = carried.get(g)
            i = row_of.get(h) if h is not None else None
            if i is not None and i not in used_r and cost[i, j] <= distance_threshold:
                pairs.append((i, j))
                used_r.add(i)
        used_c = {j for _, j in pairs}
        free_r = [i for i in range(n_h) if i not in used_r]
        free_c = [j for j in range(n_g) if j not in used_c]
        if free_r and free_c:
            sub = cost[np.ix_(free_r, free_c)]
            for a, b in hungarian(sub).pairs:
                if sub[a, b] <= distance_threshold:
                    pairs.append((free_r[a], free_c[b]))
        pairs.sort()
        for i, j in pairs:
            carried[gids[j]] = hids[i]
        result.append(pairs)
    return result


@dataclass
class EventCounts:
    frames: list = field(default_factory=list)
    gt: list = field(default_factory=list)
    tp: list = field(default_factory=list)
    fp: list = field(default_factory=list)
    fn: list = field(default_factory=list)
    idsw: list = field(default_factory=list)
    iou_sum: float = 0.0
    match_count: int = 0

    @property
    def totals(self) -> dict:
        return {
            "gt": int(sum(self.gt)), "tp": int(sum(self.tp)), "fp": int(sum(self.fp)),
            "fn": int(sum(self.fn)), "idsw": int(sum(self.idsw)),
            "iou_sum": float(self.iou_sum), "match_count": int(self.match_count),
        }


def count_events(matches, hypotheses, ground_truths, counts: EventCounts | None = None,
                 last_match: dict | None = None) -> EventCounts:
    """Tally TP/FP/FN/IDSW for consecutive frames.

    ``hypotheses`` and ``ground_truths`` are per-frame ``(frame, [(id, bbox), ...])``
    sequences aligned with ``matches``. Pass ``counts`` and ``last_match`` to
    continue a tally across windows.
    """
    counts = counts if counts is not None else EventCounts()
    last_match = last_match if last_match is not None else {}
    for pairs, (frame, hyps), (_, gts) in zip(matches, hypotheses, ground_truths):
        switches = 0
        for i, j in pairs:
            hid, hbox = hyps[i]
            gid, gbox = gts[j]
            prev = last_match.get(gid)
            if prev is not None and prev != hid:
                switches += 1
            last_match[gid] = hid
            counts.iou_sum += iou(hbox, gbox)
        counts.frames.append(frame)
        counts.gt.append(len(gts))
        counts.tp.append(len(pairs))
        counts.fp.append(len(hyps) - len(pairs))
        counts.fn.append(len(gts) - len(pairs))
        counts.idsw.append(switches)
        counts.match_count += len(pairs)
    return counts


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    jaccard: float
    mota: float
    motp: float

    def as_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["mota"]):
            d["mota"] = "-inf"
        return d


def metrics(counts: EventCounts) -> MetricsReport:
    t = counts.totals
    tp, fp, fn, idsw, gt = t["tp"], t["fp"], t["fn"], t["idsw"], t["gt"]
    if tp + fp:
        precision = tp / (tp + fp)
    else:
        precision = 1.0 if fn == 0 else 0.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    jaccard = tp / (tp + fp + fn) if tp + fp + fn else 1.0
    if gt:
        mota = 1.0 - (fn + fp + idsw) / gt
    else:
        mota = 1.0 if fp == 0 and idsw == 0 else -math.inf
    motp = t["iou_sum"] / t["match_count"] if t["match_count"] else 0.0
    return MetricsReport(precision, recall, f1, jaccard, mota, motp)


def group_by_frame(records) -> dict[int, list]:
    """``(frame, id, bbox)`` triples to ``{frame: [(id, bbox), ...]}``."""
    out = defaultdict(list)
    for frame, rid, box in records:
        out[int(frame)].append((rid, tuple(float(v) for v in box)))
    return {f: sorted(v) for f, v in out.items()}


def evaluate(hypotheses, annotations: AnnotationSet, frame_range=None,
             window: int = DEFAULT_WINDOW, distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD):
    """Score ``(frame, hyp_id, bbox)`` records against annotations.

    Frames evaluated are ``frame_range`` if given, else every frame that has
    ground truth or hypotheses. Returns ``(EventCounts, MetricsReport)``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    gt = interpolate_ground_truth(annotations, frame_range)
    hyp = group_by_frame(hypotheses)
    frames = sorted(frame_range) if frame_range is not None else sorted(set(gt) | set(hyp))
    counts = EventCounts()
    last_match: dict = {}
    for start in range(0, len(frames), window):
        chunk = frames[start:start + window]
        hyp_seq = [(f, hyp.get(f, [])) for f in chunk]
        gt_seq = [(f, gt.get(f, [])) for f in chunk]
        tensor = [cost_matrix([b for _, b in h], [b for _, b in g]).reshape(len(h), len(g))
                  for (_, h), (_, g) in zip(hyp_seq, gt_seq)]
        matches = associate_window(
            tensor, distance_threshold,
            hyp_ids=[[i for i, _ in h] for _, h in hyp_seq],
            gt_ids=[[i for i, _ in g] for _, g in gt_seq])
        count_events(matches, hyp_seq, gt_seq, counts, last_match)
    return counts, metrics(counts)


def report_document(counts: EventCounts, report: MetricsReport) -> dict:
    """JSON-ready document with totals, per-frame series and the six metrics."""
    return {
        "metrics": report.as_dict(),
        "totals": counts.totals,
        "per_frame": {
            "frame": list(counts.frames), "gt": list(counts.gt), "tp": list(counts.tp),
            "fp": list(counts.fp), "fn": list(counts.fn), "idsw": list(counts.idsw),
        },
    }
