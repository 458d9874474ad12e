import math

import numpy as np
import pytest

from advswarm.adversary import (
    MisclassSchedule, MisclassSpec, MislocSpec, OverloadModel, apply_misclassification,
    apply_mislocalization, detection_distance, frame_latency, pair_distance,
)
from advswarm.geometry import BoundingBox
from advswarm.perception import Detection, DetectionSet

TARGET = 80


def frame(t=0.0, pr=0.9):
    return DetectionSet(t, (Detection(BoundingBox(480.0, 360.0, 60.0, 36.0), TARGET, pr),
                            Detection(BoundingBox(100.0, 100.0, 20.0, 20.0), 7, 0.8)))


def test_schedule_p_zero_and_one():
    s0 = MisclassSchedule(1000, 0.0, 1000, np.random.default_rng(0))
    s1 = MisclassSchedule(1000, 1.0, 1000, np.random.default_rng(0))
    ds = frame()
    for k in range(1000):
        assert apply_misclassification(ds, s0, k, TARGET) == ds
        out = apply_misclassification(ds, s1, k, TARGET)
        assert [d.class_id for d in out] == [4, 7]
    assert MisclassSpec(0, 0.5).schedule(1000, None) is None


def test_schedule_blocks_are_constant():
    s = MisclassSchedule(200, 0.5, 1000, np.random.default_rng(1))
    assert s.block_len == 5
    flags = np.array([s.attacked(k) for k in range(1000)]).reshape(200, 5)
    assert np.all(flags == flags[:, :1])
    with pytest.raises(IndexError):
        s.attacked(1000)


def test_schedule_rate_matches_p():
    n = 100_000
    p = 0.4
    s = MisclassSchedule(n, p, n, np.random.default_rng(2))
    rate = np.mean([s.attacked(k) for k in range(n)])
    assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_schedule_is_independent_of_query_order():
    a = MisclassSchedule(50, 0.5, 1000, np.random.default_rng(9))
    b = MisclassSchedule(50, 0.5, 1000, np.random.default_rng(9))
    fwd = [a.attacked(k) for k in range(1000)]
    rev = [b.attacked(k) for k in reversed(range(1000))][::-1]
    assert fwd == rev


def test_misclassification_does_not_mutate_input():
    ds = frame()
    s = MisclassSchedule(10, 1.0, 10, np.random.default_rng(0))
    out = apply_misclassification(ds, s, 0, TARGET)
    assert ds.detections[0].class_id == TARGET
    assert out is not ds


def test_mislocalization_b_zero_is_identity(rng):
    ds = frame()
    assert apply_mislocalization(ds, MislocSpec(0, 0.3), rng, TARGET) == ds


def test_mislocalization_zero_q_duplicates_with_boost(rng):
    ds = frame()
    out = apply_mislocalization(ds, MislocSpec(10, 0.0), rng, TARGET)
    assert len(out) == 12
    assert out.detections[:2] == ds.detections
    for d in out.detections[2:]:
        assert d.box == ds.detections[0].box
        assert d.pr == pytest.approx(1.0)
        assert d.spurious and d.class_id == TARGET


def test_mislocalization_box_count_and_bounds(rng):
    q = 0.30
    ds = DetectionSet(0.0, (frame(pr=0.5).detections[0],))
    x1, y1, x2, y2 = ds.detections[0].box.corners()
    for _ in range(100):
        out = apply_mislocalization(ds, MislocSpec(10, q), rng, TARGET)
        assert len(out) == 11
        for d in out.detections[1:]:
            c = d.box.corners()
            assert d.pr == pytest.approx(0.6)
            assert x1 * (1 - q) <= c[0] and c[2] <= x2 * (1 + q)
            assert y1 * (1 - q) <= c[1] and c[3] <= y2 * (1 + q)


class CollapsingRng:
    """Always scales x1 onto x2, giving a zero-width box."""

    def __init__(self):
        self.calls = 0

    def uniform(self, low, high, size):
        self.calls += 1
        return np.array([2.0, 1.0, 1.0, 1.0])


def test_degenerate_boxes_are_skipped_after_redraws():
    ds = DetectionSet(0.0, (Detection(BoundingBox.from_corners(1.0, 1.0, 2.0, 2.0), TARGET, 0.9),))
    stub = CollapsingRng()
    out = apply_mislocalization(ds, MislocSpec(3, 1.0), stub, TARGET)
    assert len(out) == 1
    assert stub.calls == 30


def test_latency_calibration():
    ov = OverloadModel()
    assert frame_latency(1, ov) == pytest.approx(0.035)
    assert frame_latency(7, ov) == pytest.approx(0.041)
    assert frame_latency(0, ov) == ov.base_cost
    lat = [frame_latency(m, ov) for m in range(50)]
    assert all(b >= a for a, b in zip(lat, lat[1:]))


def test_detection_distances():
    box = BoundingBox.from_corners(10.0, 10.0, 50.0, 40.0)
    a = Detection(box, TARGET, 0.9)
    assert pair_distance(a, a) == 0.0
    assert pair_distance(a, Detection(box, 4, 0.9)) == math.inf
    moved = Detection(BoundingBox.from_corners(13.0, 14.0, 50.0, 40.0), TARGET, 0.9)
    assert pair_distance(a, moved) == pytest.approx(5.0)
    s1 = DetectionSet(0.0, (a, a))
    s2 = DetectionSet(0.1, (moved, Detection(box, 4, 0.9)))
    assert detection_distance(s1, s2, [(0, 0), (1, 1)]) == [pytest.approx(5.0), math.inf]
