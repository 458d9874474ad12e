"""Synthetic object detector standing in for a learned model.

Each visible scene object yields exactly one detection whose box is the
geometric ground truth plus Gaussian pixel jitter. There is no NMS stage,
so injected boxes that overlap the nominal one survive downstream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox, render_box


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    class_id: int
    pr: float
    spurious: bool = False

    def __post_init__(self):
        if not 0.0 <= self.pr <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.pr}")


@dataclass(frozen=True)
class DetectionSet:
    t: float
    detections: tuple = ()

    def __len__(self):
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)


def _jitter_box(box, noise, rng, intr):
    x1, y1, x2, y2 = box.corners()
    dx, dy, dw, dh = rng.normal(0.0, noise, size=4)
    w = max(box.w + dw, 1.0)
    h = max(box.h + dh, 1.0)
    x, y = box.x + dx, box.y + dy
    x1, x2 = max(x - w / 2, 0.0), min(x + w / 2, float(intr.width))
    y1, y2 = max(y - h / 2, 0.0), min(y + h / 2, float(intr.height))
    if x2 - x1 < 1.0 or y2 - y1 < 1.0:
        return None
    return BoundingBox.from_corners(x1, y1, x2, y2)


def detect(position, R_CW, scene, intr, noise, rng, t=0.0, base_pr=0.9, pr_jitter=0.05):
    """Render one detection per visible object in ``scene``.

    Parameters
    ----------
    position : array-like, shape (3,)
        Ego camera position in the world frame.
    R_CW : ndarray, shape (3, 3)
        World-to-camera rotation.
    scene : sequence of ObjectModel
    noise : float
        Standard deviation of the pixel jitter applied to centre and size.
    rng : numpy.random.Generator
        Stream owned by this robot's detector.
    base_pr, pr_jitter : float
        Confidence is ``clip(base_pr + U(-pr_jitter, pr_jitter), 0, 1)``.
    """
    if noise < 0:
        raise ValueError("pixel noise must be non-negative")
    position = np.asarray(position, dtype=float)
    out = []
    for obj in scene:
        box = render_box(position - obj.position, R_CW, intr, obj)
        if box is None:
            continue
        if noise > 0:
            box = _jitter_box(box, noise, rng, intr)
            if box is None:
                continue
        pr = base_pr
        if pr_jitter > 0:
            pr += rng.uniform(-pr_jitter, pr_jitter)
        out.append(Detection(box, obj.class_id, min(max(float(pr), 0.0), 1.0)))
    return DetectionSet(t, tuple(out))


def confidence_thresh_filter(ds, conf_thresh):
    return DetectionSet(ds.t, tuple(d for d in ds.detections if d.pr >= conf_thresh))


def class_filter(ds, class_id):
    """Keep detections labelled ``class_id``; relabelled boxes drop out here."""
    return DetectionSet(ds.t, tuple(d for d in ds.detections if d.class_id == class_id))
