"""Detection-level attack injectors.

Misclassification relabels the target's detections (the downstream class
filter turns that into a missed position measurement), mislocalization
appends perturbed copies of the target's box, and overload is a
per-detection processing cost that stretches the sampling interval.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import BoundingBox
from .perception import DetectionSet

log = logging.getLogger(__name__)

# COCO "airplane"
DEFAULT_DECOY_CLASS = 4
MAX_REDRAWS = 10


class MisclassSchedule:
    """Block-wise Bernoulli misclassification over a fixed horizon.

    The horizon is cut into ``n_blocks`` runs of ``ceil(horizon / n_blocks)``
    steps; each run is attacked independently with probability ``p``. Fewer
    blocks mean longer contiguous outages at the same average rate, and
    ``n_blocks == horizon_steps`` is a per-step Bernoulli process.

    Block outcomes are drawn in order on first use, so the realisation does
    not depend on the order in which steps are queried.
    """

    def __init__(self, n_blocks, p, horizon_steps, rng):
        if n_blocks < 1 or horizon_steps < 1:
            raise ValueError("n_blocks and horizon_steps must be positive")
        if n_blocks > horizon_steps:
            raise ValueError("n_blocks cannot exceed horizon_steps")
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.n_blocks = int(n_blocks)
        self.p = float(p)
        self.horizon_steps = int(horizon_steps)
        self.block_len = math.ceil(horizon_steps / n_blocks)
        self._rng = rng
        self.realized = []

    def block_of(self, k):
        return k // self.block_len

    def attacked(self, k):
        if not 0 <= k < self.horizon_steps:
            raise IndexError(f"step {k} outside horizon {self.horizon_steps}")
        j = self.block_of(k)
        while len(self.realized) <= j:
            self.realized.append(bool(self._rng.random() < self.p))
        return self.realized[j]


@dataclass(frozen=True)
class MisclassSpec:
    """Configuration half of a schedule; ``n_blocks == 0`` disables it."""

    n_blocks: int
    p: float

    def schedule(self, horizon_steps, rng):
        if self.n_blocks == 0 or self.p == 0:
            return None
        return MisclassSchedule(self.n_blocks, self.p, horizon_steps, rng)


@dataclass(frozen=True)
class MislocSpec:
    b: int
    q: float
    conf_boost: float = 0.10
    # first step at which spurious boxes are injected
    start_step: int = 0

    def __post_init__(self):
        if self.b < 0 or self.q < 0 or self.conf_boost < 0 or self.start_step < 0:
            raise ValueError("b, q, conf_boost and start_step must be non-negative")


@dataclass(frozen=True)
class OverloadModel:
    # 34 ms + 1 ms/box gives 35 ms for one box and 41 ms for seven.
    base_cost: float = 0.034
    per_box_cost: float = 0.001

    def __post_init__(self):
        if self.base_cost <= 0 or self.per_box_cost < 0:
            raise ValueError("base_cost must be positive and per_box_cost non-negative")


@dataclass(frozen=True)
class AttackSpec:
    """Everything the adversary does to one robot's perception."""

    target_robot: int
    misclass: MisclassSpec = None
    misloc: MislocSpec = None
    overload: OverloadModel = field(default_factory=OverloadModel)
    decoy_class: int = DEFAULT_DECOY_CLASS


def apply_misclassification(ds, sched, k, target_class, decoy_class=DEFAULT_DECOY_CLASS):
    if decoy_class == target_class:
        raise ValueError("decoy class must differ from the target class")
    if sched is None or not sched.attacked(k):
        return DetectionSet(ds.t, tuple(ds.detections))
    return DetectionSet(ds.t, tuple(
        replace(d, class_id=decoy_class) if d.class_id == target_class else d
        for d in ds.detections))


def _perturb(box, q, rng):
    corners = np.array(box.corners())
    for _ in range(MAX_REDRAWS):
        x1, y1, x2, y2 = corners * rng.uniform(1.0 - q, 1.0 + q, size=4)
        x1, x2 = min(x1, x2), max(x1, x2)
        y1, y2 = min(y1, y2), max(y1, y2)
        if x2 - x1 > 0 and y2 - y1 > 0:
            return BoundingBox.from_corners(x1, y1, x2, y2)
    return None


def apply_mislocalization(ds, spec, rng, target_class):
    """Append ``spec.b`` perturbed copies after each nominal target detection.

    Every corner coordinate is scaled by its own factor drawn from
    ``U(1 - q, 1 + q)``; the copies keep the class and carry the nominal
    confidence plus ``conf_boost`` (clipped to 1).
    """
    if spec is None or spec.b == 0:
        return DetectionSet(ds.t, tuple(ds.detections))
    out = list(ds.detections)
    for d in ds.detections:
        if d.class_id != target_class or d.spurious:
            continue
        pr = float(min(max(d.pr + spec.conf_boost, 0.0), 1.0))
        for _ in range(spec.b):
            box = _perturb(d.box, spec.q, rng)
            if box is None:
                log.warning("spurious box skipped after %d degenerate draws", MAX_REDRAWS)
                continue
            out.append(replace(d, box=box, pr=pr, spurious=True))
    return DetectionSet(ds.t, tuple(out))


def frame_latency(m, ov):
    """Processing time for a frame carrying ``m`` detections."""
    if m < 0:
        raise ValueError("detection count must be non-negative")
    return ov.base_cost + m * ov.per_box_cost


def pair_distance(a, b):
    """Box-corner L2 distance between matched detections; inf on class change."""
    if a.class_id != b.class_id:
        return math.inf
    return float(np.linalg.norm(np.subtract(a.box.corners(), b.box.corners())))


def detection_distance(s1, s2, pairs):
    """Distances for index pairs ``(i, j)`` matching ``s1[i]`` with ``s2[j]``."""
    return [pair_distance(s1.detections[i], s2.detections[j]) for i, j in pairs]
