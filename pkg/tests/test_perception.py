import numpy as np
import pytest

from advswarm.geometry import CameraIntrinsics, ObjectModel, camera_rotation, render_box
from advswarm.perception import Detection, DetectionSet, class_filter, confidence_thresh_filter, detect

INTR = CameraIntrinsics(200.0, 960, 720)
JACKAL = ObjectModel(0.5, 0.3, [0.0, 0.0, 0.25], class_id=80)
CRATE = ObjectModel(0.4, 0.4, [0.0, 1.0, 0.25], class_id=7)
R_CW = camera_rotation(np.eye(3))
POS = np.array([-2.0, 0.0, 0.5])


def test_empty_scene_gives_no_detections(rng):
    assert len(detect(POS, R_CW, [], INTR, 1.0, rng)) == 0


def test_noiseless_detection_is_the_rendered_box(rng):
    ds = detect(POS, R_CW, [JACKAL], INTR, 0.0, rng, base_pr=0.9, pr_jitter=0.0)
    assert len(ds) == 1
    assert ds.detections[0].box == render_box(POS - JACKAL.position, R_CW, INTR, JACKAL)
    assert ds.detections[0].pr == 0.9
    assert ds.detections[0].class_id == 80


def test_same_seed_same_detections():
    a = detect(POS, R_CW, [JACKAL, CRATE], INTR, 2.0, np.random.default_rng(3), t=0.5)
    b = detect(POS, R_CW, [JACKAL, CRATE], INTR, 2.0, np.random.default_rng(3), t=0.5)
    assert a == b


def test_boxes_stay_in_frame_with_heavy_noise():
    rng = np.random.default_rng(0)
    near_edge = np.array([-1.0, 1.0, 0.5])
    for _ in range(200):
        for d in detect(near_edge, R_CW, [JACKAL, CRATE], INTR, 30.0, rng):
            x1, y1, x2, y2 = d.box.corners()
            assert 0.0 <= x1 < x2 <= INTR.width
            assert 0.0 <= y1 < y2 <= INTR.height
            assert 0.0 <= d.pr <= 1.0


def test_confidence_jitter_stays_in_band(rng):
    prs = [detect(POS, R_CW, [JACKAL], INTR, 0.0, rng, base_pr=0.97, pr_jitter=0.05).detections[0].pr
           for _ in range(500)]
    assert min(prs) >= 0.92 and max(prs) <= 1.0


def make_set(*prs):
    box = render_box(POS - JACKAL.position, R_CW, INTR, JACKAL)
    return DetectionSet(0.0, tuple(Detection(box, 80, pr) for pr in prs))


def test_confidence_threshold():
    ds = make_set(0.1, 0.2)
    assert confidence_thresh_filter(ds, 0.0) == ds
    kept = confidence_thresh_filter(ds, 0.15)
    assert [d.pr for d in kept] == [0.2]
    assert len(confidence_thresh_filter(make_set(0.01, 0.1), 0.15)) == 0


def test_class_filter_preserves_order():
    box = render_box(POS - JACKAL.position, R_CW, INTR, JACKAL)
    ds = DetectionSet(0.0, (Detection(box, 80, 0.3), Detection(box, 4, 0.9), Detection(box, 80, 0.5)))
    assert [d.pr for d in class_filter(ds, 80)] == [0.3, 0.5]


def test_detection_rejects_bad_confidence():
    box = render_box(POS - JACKAL.position, R_CW, INTR, JACKAL)
    with pytest.raises(ValueError):
        Detection(box, 80, 1.2)
