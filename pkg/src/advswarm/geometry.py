"""Frames, pinhole projection and box-based relative localization.

Conventions
-----------
World frame: z up. Body frame: x forward, y left, z up. Camera frame:
z along the optical axis, x right, y down. ``R_CW`` maps world vectors into
the camera frame and is composed as ``R_CW = R_BC.T @ R_WB.T``.

``p_rel`` is always the robot position minus the object centre, expressed
in the world frame. The object sits at ``-R_CW @ p_rel`` in camera
coordinates, so recovering ``p_rel`` from a box carries a minus sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Partially clipped boxes below this in-frame area fraction are dropped.
MIN_VISIBLE_FRACTION = 0.25

# Forward-pointing camera on a body with x forward, y left, z up.
FORWARD_MOUNT = np.array([[0.0, 0.0, 1.0],
                          [-1.0, 0.0, 0.0],
                          [0.0, -1.0, 0.0]])


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx(yaw, pitch=0.0, roll=0.0):
    """Body-to-world rotation ``rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)``, expanded."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0.0)
            and abs(np.linalg.det(R) - 1.0) <= tol)


def camera_rotation(R_WB, R_BC=FORWARD_MOUNT):
    """World-to-camera rotation ``R_CW`` for a body attitude and camera mount."""
    return R_BC.T @ R_WB.T


@dataclass(frozen=True)
class CameraIntrinsics:
    """Calibrated pinhole camera; the principal point is the image centre."""

    focal: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError("focal length must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    @property
    def cx(self):
        return self.width / 2.0

    @property
    def cy(self):
        return self.height / 2.0


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned image box in centre form (pixels)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extent must be positive, got w={self.w}, h={self.h}")

    def corners(self):
        return (self.x - self.w / 2.0, self.y - self.h / 2.0,
                self.x + self.w / 2.0, self.y + self.h / 2.0)

    @classmethod
    def from_corners(cls, x1, y1, x2, y2):
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    @property
    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class ObjectModel:
    """Front-parallel planar object of known physical size."""

    width: float
    height: float
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    class_id: int = 0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("object dimensions must be positive")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class RelPosMeasurement:
    """Candidate relative position with isotropic covariance.

    ``spurious`` is bookkeeping from the injector; the estimator never reads it.
    """

    p: np.ndarray
    cov: np.ndarray
    source_confidence: float
    spurious: bool = False


_I3 = np.eye(3)


def localization_covariance(pr, eps_bar=0.4, eps_low=0.01):
    """Isotropic covariance ``((1 - pr) * eps_bar + eps_low) * I3``."""
    return ((1.0 - pr) * eps_bar + eps_low) * _I3


def camera_coords(p_rel, R_CW):
    """Object centre in the camera frame: ``-R_CW @ p_rel``."""
    return -(np.asarray(R_CW, dtype=float) @ np.asarray(p_rel, dtype=float))


def project(p_rel, R_CW, intr):
    """Normalized image point ``(xbar, ybar)`` and depth of the object centre.

    Returns None when the object is behind the camera or its centre falls
    outside the image.
    """
    xc, yc, zc = camera_coords(p_rel, R_CW)
    if zc <= 0:
        return None
    xbar, ybar = xc / zc, yc / zc
    u = intr.focal * xbar + intr.cx
    v = intr.focal * ybar + intr.cy
    if not (0.0 <= u <= intr.width and 0.0 <= v <= intr.height):
        return None
    return xbar, ybar, zc


def render_box(p_rel, R_CW, intr, obj):
    """Ideal box of ``obj`` seen from ``p_rel``, clipped to the image.

    Returns None if behind the camera or if less than a quarter of the box
    area survives clipping.
    """
    xc, yc, zc = camera_coords(p_rel, R_CW)
    if zc <= 0:
        return None
    w = intr.focal * obj.width / zc
    h = intr.focal * obj.height / zc
    u = intr.focal * xc / zc + intr.cx
    v = intr.focal * yc / zc + intr.cy
    x1, y1, x2, y2 = u - w / 2, v - h / 2, u + w / 2, v + h / 2
    cx1, cy1 = max(x1, 0.0), max(y1, 0.0)
    cx2, cy2 = min(x2, float(intr.width)), min(y2, float(intr.height))
    if cx2 <= cx1 or cy2 <= cy1:
        return None
    if (cx2 - cx1) * (cy2 - cy1) < MIN_VISIBLE_FRACTION * w * h:
        return None
    if (cx1, cy1, cx2, cy2) == (x1, y1, x2, y2):
        return BoundingBox(u, v, w, h)
    return BoundingBox.from_corners(cx1, cy1, cx2, cy2)


def localize_from_box(box, R_CW, intr, obj, pr, eps_bar=0.4, eps_low=0.01, spurious=False):
    """Recover the robot position relative to ``obj`` from one detection box.

    Depth comes from the box width only (``f * W_obj / w``); the box height
    plays no role.
    """
    if not 0.0 <= pr <= 1.0:
        raise ValueError(f"confidence must lie in [0, 1], got {pr}")
    depth = intr.focal * obj.width / box.w
    ray = np.array([(box.x - intr.cx) / intr.focal, (box.y - intr.cy) / intr.focal, 1.0])
    p = -depth * (np.asarray(R_CW, dtype=float).T @ ray)
    return RelPosMeasurement(p, localization_covariance(pr, eps_bar, eps_low), float(pr), spurious)
