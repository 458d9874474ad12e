import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from advswarm.geometry import (
    FORWARD_MOUNT, BoundingBox, CameraIntrinsics, ObjectModel, camera_rotation, euler_zyx,
    is_rotation, localization_covariance, localize_from_box, project, render_box, rot_x, rot_y, rot_z,
)

INTR = CameraIntrinsics(400.0, 960, 720)
OBJ = ObjectModel(0.5, 0.3, [0.0, 0.0, 0.0], class_id=80)


def pixel_oracle(p_rel, R_CW, f, cx, cy):
    # test-only evaluation of the pinhole model written out component-wise
    R = np.asarray(R_CW)
    xc = -(R[0, 0] * p_rel[0] + R[0, 1] * p_rel[1] + R[0, 2] * p_rel[2])
    yc = -(R[1, 0] * p_rel[0] + R[1, 1] * p_rel[1] + R[1, 2] * p_rel[2])
    zc = -(R[2, 0] * p_rel[0] + R[2, 1] * p_rel[1] + R[2, 2] * p_rel[2])
    return f * xc / zc + cx, f * yc / zc + cy, zc


def test_on_axis_projection():
    xb, yb, zc = project([0.0, 0.0, -2.0], np.eye(3), INTR)
    assert (xb, yb) == (0.0, 0.0)
    assert zc == 2.0


def test_unit_slope_ray_lands_one_focal_length_right():
    # x_C = z_C = 2: the camera sees the object at -R p_rel = [2, 0, 2]
    xb, yb, zc = project([-2.0, 0.0, -2.0], np.eye(3), INTR)
    assert INTR.focal * xb + INTR.cx == pytest.approx(INTR.cx + INTR.focal)


def test_behind_camera_and_out_of_frame_are_not_visible():
    assert project([0.0, 0.0, 2.0], np.eye(3), INTR) is None
    assert project([-50.0, 0.0, -1.0], np.eye(3), INTR) is None
    assert render_box([0.0, 0.0, 2.0], np.eye(3), INTR, OBJ) is None


def test_projection_matches_componentwise_oracle(rng):
    for _ in range(50):
        R = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        z = rng.uniform(1.0, 5.0)
        cam = np.array([rng.uniform(-0.5, 0.5) * z, rng.uniform(-0.4, 0.4) * z, z])
        p_rel = -R.T @ cam
        xb, yb, zc = project(p_rel, R, INTR)
        u, v, zo = pixel_oracle(p_rel, R, INTR.focal, INTR.cx, INTR.cy)
        assert INTR.focal * xb + INTR.cx == pytest.approx(u, abs=1e-9)
        assert INTR.focal * yb + INTR.cy == pytest.approx(v, abs=1e-9)
        assert zc == pytest.approx(zo, abs=1e-12)


def test_box_width_is_focal_times_width_over_depth():
    box = render_box([0.0, 0.0, -2.0], np.eye(3), INTR, OBJ)
    assert box.w == pytest.approx(100.0)
    assert box.h == pytest.approx(60.0)
    far = render_box([0.0, 0.0, -4.0], np.eye(3), INTR, OBJ)
    assert far.w == pytest.approx(box.w / 2)
    assert far.h == pytest.approx(box.h / 2)


def test_localize_on_axis_box():
    box = BoundingBox(INTR.cx, INTR.cy, INTR.focal * OBJ.width / 3.0, 20.0)
    m = localize_from_box(box, np.eye(3), INTR, OBJ, pr=0.9)
    np.testing.assert_allclose(m.p, [0.0, 0.0, -3.0], atol=1e-12)


def test_covariance_endpoints_and_monotonicity():
    np.testing.assert_allclose(localization_covariance(1.0), 0.01 * np.eye(3))
    np.testing.assert_allclose(localization_covariance(0.0), 0.41 * np.eye(3))
    traces = [np.trace(localization_covariance(pr)) for pr in np.linspace(0, 1, 11)]
    assert np.all(np.diff(traces) < 0)
    assert np.allclose(np.diff(traces, 2), 0.0)


def test_wider_box_scales_range_down():
    base = BoundingBox(INTR.cx, INTR.cy, 80.0, 40.0)
    wide = BoundingBox(INTR.cx, INTR.cy, 80.0 * 1.3, 40.0)
    p0 = localize_from_box(base, np.eye(3), INTR, OBJ, 0.9).p
    p1 = localize_from_box(wide, np.eye(3), INTR, OBJ, 0.9).p
    assert np.linalg.norm(p1) == pytest.approx(np.linalg.norm(p0) / 1.3, rel=1e-12)


def test_height_does_not_enter_depth():
    a = localize_from_box(BoundingBox(500, 300, 80, 40), np.eye(3), INTR, OBJ, 0.9).p
    b = localize_from_box(BoundingBox(500, 300, 80, 90), np.eye(3), INTR, OBJ, 0.9).p
    np.testing.assert_array_equal(a, b)


def random_visible_pose(rng):
    """World-frame object offset and body attitude with the box fully in frame."""
    while True:
        yaw = rng.uniform(-np.pi, np.pi)
        R_CW = camera_rotation(euler_zyx(yaw, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)))
        z = rng.uniform(0.5, 6.0)
        cam = np.array([rng.uniform(-0.8, 0.8) * z, rng.uniform(-0.6, 0.6) * z, z])
        p_rel = -R_CW.T @ cam
        box = render_box(p_rel, R_CW, INTR, OBJ)
        if box is None:
            continue
        x1, y1, x2, y2 = box.corners()
        if x1 > 0 and y1 > 0 and x2 < INTR.width and y2 < INTR.height:
            return p_rel, R_CW, box


def test_round_trip_over_random_poses(rng):
    worst = 0.0
    for _ in range(100):
        p_rel, R_CW, box = random_visible_pose(rng)
        p = localize_from_box(box, R_CW, INTR, OBJ, 0.9).p
        worst = max(worst, float(np.max(np.abs(p - p_rel))))
    assert worst < 1e-9


def test_clipping_keeps_box_in_frame_and_drops_slivers():
    R = np.eye(3)
    # centre 40 px inside the left edge: most of the box survives
    z = 2.0
    x_edge = (40.0 - INTR.cx) / INTR.focal * z
    box = render_box([-x_edge, 0.0, -z], R, INTR, OBJ)
    x1, _, x2, _ = box.corners()
    assert x1 == 0.0 and x2 == pytest.approx(90.0)
    # centre 40 px outside: under a quarter visible
    x_out = (-40.0 - INTR.cx) / INTR.focal * z
    assert render_box([-x_out, 0.0, -z], R, INTR, OBJ) is None


def test_box_corner_round_trip():
    b = BoundingBox(100.5, 50.25, 30.0, 12.0)
    assert BoundingBox.from_corners(*b.corners()) == b
    with pytest.raises(ValueError):
        BoundingBox(0.0, 0.0, 0.0, 1.0)


def test_frames_and_mount():
    assert is_rotation(FORWARD_MOUNT)
    # level body facing +x: camera optical axis is world +x, image x is world -y
    R_CW = camera_rotation(np.eye(3))
    np.testing.assert_allclose(R_CW @ [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    np.testing.assert_allclose(R_CW @ [0.0, -1.0, 0.0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(R_CW @ [0.0, 0.0, -1.0], [0.0, 1.0, 0.0])


def test_euler_expansion_matches_product(rng):
    for _ in range(20):
        y, p, r = rng.uniform(-np.pi, np.pi, 3)
        np.testing.assert_allclose(euler_zyx(y, p, r), rot_z(y) @ rot_y(p) @ rot_x(r), atol=1e-14)
        R_WB = euler_zyx(y, p, r)
        np.testing.assert_allclose(camera_rotation(R_WB), FORWARD_MOUNT.T @ R_WB.T, atol=1e-15)


def test_intrinsics_validation():
    assert (INTR.cx, INTR.cy) == (480.0, 360.0)
    with pytest.raises(ValueError):
        CameraIntrinsics(0.0, 10, 10)
