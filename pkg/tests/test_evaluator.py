import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_values import IOU_SHIFTED
from tinytrack.evaluator import (
    AnnotationSet, EventCounts, IOU_EPS, associate_window, cost_matrix, count_events, evaluate,
    interpolate_ground_truth, iou, metrics, report_document,
)

box = st.tuples(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 15), st.integers(1, 15))


class TestInterpolation:
    def test_midpoint(self):
        ann = AnnotationSet([(0, 1, (0, 0, 4, 4)), (10, 1, (10, 0, 4, 4))], keyframe_stride=10)
        gt = interpolate_ground_truth(ann)
        assert gt[5] == [(1, (5.0, 0.0, 4.0, 4.0))]
        assert sorted(gt) == list(range(11))

    def test_single_keyframe(self):
        gt = interpolate_ground_truth(AnnotationSet([(3, 0, (1, 2, 3, 4))]))
        assert gt == {3: [(0, (1.0, 2.0, 3.0, 4.0))]}

    def test_keyframes_exact(self):
        ann = AnnotationSet([(0, 1, (0, 0, 4, 4)), (7, 1, (13, 5, 6, 2))])
        gt = interpolate_ground_truth(ann)
        assert gt[0] == [(1, (0.0, 0.0, 4.0, 4.0))] and gt[7] == [(1, (13.0, 5.0, 6.0, 2.0))]

    def test_frame_range(self):
        ann = AnnotationSet([(0, 1, (0, 0, 4, 4)), (10, 1, (10, 0, 4, 4))])
        assert sorted(interpolate_ground_truth(ann, range(20, 22))) == [20, 21]

    def test_validation(self):
        with pytest.raises(ValueError):
            AnnotationSet([(0, 1, (0, 0, 1, 1)), (0, 1, (2, 2, 1, 1))])
        with pytest.raises(ValueError):
            AnnotationSet([(0, 1, (0, 0, 0, 1))])


class TestIou:
    def test_identical(self):
        assert iou((1, 2, 3, 4), (1, 2, 3, 4)) == 1.0

    def test_disjoint(self):
        assert iou((0, 0, 2, 2), (5, 5, 2, 2)) == 0.0

    def test_unit_cells(self):
        assert iou((0, 0, 2, 2), (1, 1, 2, 2)) == pytest.approx(IOU_SHIFTED, rel=1e-15)

    @given(box, box)
    def test_symmetric_bounded(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a) and 0.0 <= v <= 1.0


class TestCost:
    def test_values(self):
        c = cost_matrix([(0, 0, 2, 2), (50, 50, 1, 1)], [(0, 0, 2, 2)])
        assert c.shape == (2, 1)
        assert c[0, 0] == pytest.approx(1.0, abs=1e-5)
        assert c[1, 0] == pytest.approx(1.0 / IOU_EPS)

    def test_empty_shape(self):
        assert cost_matrix([], [(0, 0, 1, 1)]).reshape(0, 1).shape == (0, 1)


def brute_force_pairs(cost, gate):
    n_h, n_g = cost.shape
    best, best_pairs = math.inf, []
    for k in range(min(n_h, n_g), -1, -1):
        for rows in itertools.permutations(range(n_h), k):
            for cols in itertools.combinations(range(n_g), k):
                pairs = list(zip(rows, cols))
                if any(cost[r, c] > gate for r, c in pairs):
                    continue
                total = sum(cost[r, c] for r, c in pairs)
                if total < best:
                    best, best_pairs = total, sorted(pairs)
        if best_pairs or k == 0:
            return best, best_pairs
    return best, best_pairs


class TestAssociateWindow:
    def test_perfect(self):
        boxes = [(0, 0, 3, 3), (10, 10, 3, 3)]
        tensor = [cost_matrix(boxes, boxes)] * 10
        assert all(p == [(0, 0), (1, 1)] for p in associate_window(tensor))

    def test_low_overlap_discarded(self):
        # IoU 1/100 gives distance ~100 > 50
        c = cost_matrix([(0, 0, 1, 1)], [(0, 0, 10, 10)])
        assert associate_window([c]) == [[]]

    def test_crossed_overlaps_match_brute_force(self):
        hyps = [(0, 0, 4, 4), (3, 0, 4, 4)]
        gts = [(2, 0, 4, 4), (0, 1, 4, 4)]
        c = cost_matrix(hyps, gts)
        (pairs,) = associate_window([c])
        assert pairs == brute_force_pairs(c, 50)[1]

    def test_carry_over_within_window(self):
        # frame 0 picks h0 for g0; in frame 1 h1 is slightly better but h0 stays in the gate
        c0 = cost_matrix([(0, 0, 4, 4), (30, 0, 4, 4)], [(0, 0, 4, 4)])
        c1 = cost_matrix([(1, 0, 4, 4), (0, 0, 4, 4)], [(0, 0, 4, 4)])
        out = associate_window([c0, c1], hyp_ids=[[0, 1], [0, 1]], gt_ids=[[7], [7]])
        assert out == [[(0, 0)], [(0, 0)]]


class TestCounting:
    def test_perfect_tracker(self):
        ann = AnnotationSet([(f, g, (10 * g, 0, 4, 4)) for f in range(10) for g in range(5)])
        hyps = [(f, g, (10 * g, 0, 4, 4)) for f in range(10) for g in range(5)]
        counts, report = evaluate(hyps, ann)
        assert counts.totals["tp"] == 50 and counts.totals["fp"] == counts.totals["fn"] == counts.totals["idsw"] == 0
        assert report.mota == 1.0

    def test_silent_tracker(self):
        ann = AnnotationSet([(f, 0, (0, 0, 4, 4)) for f in range(7)])
        counts, report = evaluate([], ann)
        t = counts.totals
        assert (t["tp"], t["fp"], t["fn"], t["idsw"]) == (0, 0, 7, 0)
        assert report.recall == 0.0

    def test_id_switch(self):
        ann = AnnotationSet([(f, 0, (0, 0, 4, 4)) for f in range(6)])
        hyps = [(f, 1 if f < 3 else 2, (0, 0, 4, 4)) for f in range(6)]
        counts, _ = evaluate(hyps, ann, window=10)
        assert counts.totals["idsw"] == 1

    def test_id_switch_across_windows(self):
        ann = AnnotationSet([(f, 0, (0, 0, 4, 4)) for f in range(20)])
        hyps = [(f, 1 if f < 10 else 2, (0, 0, 4, 4)) for f in range(20)]
        assert evaluate(hyps, ann, window=10)[0].totals["idsw"] == 1

    def test_count_events_continues(self):
        counts = count_events([[(0, 0)]], [(0, [(5, (0, 0, 1, 1))])], [(0, [(1, (0, 0, 1, 1))])])
        last = {1: 5}
        count_events([[(0, 0)]], [(1, [(6, (0, 0, 1, 1))])], [(1, [(1, (0, 0, 1, 1))])], counts, last)
        assert counts.idsw == [0, 1] and last == {1: 6}

    def test_window_validation(self):
        with pytest.raises(ValueError):
            evaluate([], AnnotationSet([]), window=0)


def counts_of(gt, tp, fp, fn, idsw, iou_sum=None):
    c = EventCounts(frames=[0], gt=[gt], tp=[tp], fp=[fp], fn=[fn], idsw=[idsw])
    c.iou_sum, c.match_count = (tp if iou_sum is None else iou_sum), tp
    return c


class TestMetrics:
    def test_mota_arithmetic(self):
        assert metrics(counts_of(100, 90, 5, 10, 2)).mota == pytest.approx(0.83, abs=1e-12)

    def test_perfect(self):
        r = metrics(counts_of(50, 50, 0, 0, 0))
        assert (r.precision, r.recall, r.f1, r.jaccard, r.mota, r.motp) == (1.0,) * 6

    def test_ratios(self):
        r = metrics(counts_of(50, 30, 10, 20, 0))
        assert r.precision == 0.75 and r.recall == 0.6
        assert r.f1 == pytest.approx(2 * 0.45 / 1.35) and r.jaccard == 0.5

    def test_zero_denominators(self):
        r = metrics(counts_of(0, 0, 0, 0, 0))
        assert (r.precision, r.recall, r.jaccard, r.mota, r.motp) == (1.0, 1.0, 1.0, 1.0, 0.0)
        r = metrics(counts_of(0, 0, 3, 0, 0))
        assert r.mota == -math.inf and r.as_dict()["mota"] == "-inf"

    def test_report_document(self):
        ann = AnnotationSet([(f, 0, (0, 0, 4, 4)) for f in range(3)])
        doc = report_document(*evaluate([(0, 9, (0, 0, 4, 4))], ann))
        assert set(doc) == {"metrics", "totals", "per_frame"}
        assert doc["per_frame"]["tp"] == [1, 0, 0]
