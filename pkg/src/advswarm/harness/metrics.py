"""Run-level reductions over tick records."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class RunSummary:
    # RMS over t >= rms_t0 of the x-y error of p_i - p_j against p*_i - p*_j,
    # from robot i's own view; None when that window is empty.
    rms: float
    sup_p_norm: float
    sum_p_norm: float
    missed_fraction: float
    mean_latency: float
    focus_robot: int = None
    rms_partner_view: float = None
    nominal_selection_rate: float = None
    final_obs_ratio: float = None
    steps: int = 0
    aborted: bool = False
    abort_reason: str = None
    per_robot: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _rms_xy(recs, t0):
    errs = [r.rel_err for r in recs if r.t >= t0 and np.all(np.isfinite(r.rel_err))]
    if not errs:
        return None
    e = np.asarray(errs)
    return float(math.sqrt(np.mean(np.sum(e ** 2, axis=1))))


def robot_stats(recs, t0=10.0):
    """Reductions over one robot's records (assumed non-empty)."""
    norms = np.array([r.p_norm for r in recs])
    sel = np.array([r.nominal_selected for r in recs], dtype=float)
    sel = sel[np.isfinite(sel)]
    return {
        "rms": _rms_xy(recs, t0),
        "sup_p_norm": float(norms.max()),
        "sum_p_norm": float(norms.sum()),
        "missed_fraction": float(np.mean([r.beta for r in recs])),
        "mean_latency": float(np.mean([r.T_s for r in recs])),
        "nominal_selection_rate": float(sel.mean()) if sel.size else None,
        "final_obs_ratio": float(recs[-1].obs_ratio),
    }


def compute_summary(records, cfg=None, abort_reason=None, focus=None, partner=None, t0=None):
    """Summarize a run from the focus robot's records.

    The focus pair defaults to ``cfg.focus_pair``; without a config the
    first robot seen is the focus and ``t0`` defaults to 10 s.
    """
    if not records:
        raise ValueError("no records to summarize")
    if cfg is not None:
        pair = cfg.focus_pair
        if focus is None:
            focus = pair[0] if pair else records[0].robot
        if partner is None and pair:
            partner = pair[1]
        if t0 is None:
            t0 = cfg.rms_t0
    if focus is None:
        focus = records[0].robot
    if t0 is None:
        t0 = 10.0
    by_robot = {}
    for r in records:
        by_robot.setdefault(r.robot, []).append(r)
    per_robot = {rid: robot_stats(recs, t0) for rid, recs in sorted(by_robot.items())}
    s = per_robot[focus]
    return RunSummary(
        rms=s["rms"], sup_p_norm=s["sup_p_norm"], sum_p_norm=s["sum_p_norm"],
        missed_fraction=s["missed_fraction"], mean_latency=s["mean_latency"],
        focus_robot=focus,
        rms_partner_view=per_robot[partner]["rms"] if partner in per_robot else None,
        nominal_selection_rate=s["nominal_selection_rate"],
        final_obs_ratio=s["final_obs_ratio"],
        steps=len(by_robot[focus]),
        aborted=abort_reason is not None, abort_reason=abort_reason,
        per_robot=per_robot,
    )
