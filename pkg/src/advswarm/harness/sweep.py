"""Parameter sweeps over seeds, reported as mean/min/max per summary metric."""
from __future__ import annotations

import json

import numpy as np

from .config import with_axis
from .runner import run_scenario

METRICS = ("rms", "sup_p_norm", "sum_p_norm", "missed_fraction", "mean_latency", "nominal_selection_rate")


def sweep(base, axis, values, seeds=1, robot=None):
    """One row per value: statistics of each metric over ``seeds`` runs.

    Seeds are ``base.seed, base.seed + 1, ...``; a metric that is not
    available in some run is aggregated over the runs where it is.
    """
    rows = []
    for value in values:
        cfg = with_axis(base, axis, value, robot)
        runs = []
        for s in range(seeds):
            c = with_axis(cfg, "seed", base.seed + s)
            runs.append(run_scenario(c)[1])
        row = {"axis": axis, "value": value, "runs": len(runs),
               "aborted": sum(r.aborted for r in runs)}
        for m in METRICS:
            vals = [getattr(r, m) for r in runs if getattr(r, m) is not None]
            if vals:
                row[m] = {"mean": float(np.mean(vals)), "min": float(np.min(vals)), "max": float(np.max(vals))}
            else:
                row[m] = None
        rows.append(row)
    return rows


def format_table(rows):
    head = f"{'value':>8}{'runs':>6}{'RMS':>10}{'sup|P|':>10}{'sum|P|':>12}{'missed':>9}{'T_s[ms]':>9}{'nominal':>9}"
    lines = [head, "-" * len(head)]

    def mean(row, m, scale=1.0, prec=3):
        v = row[m]
        return "n/a" if v is None else f"{scale * v['mean']:.{prec}f}"

    for r in rows:
        lines.append(f"{r['value']:>8g}{r['runs']:>6}{mean(r, 'rms'):>10}{mean(r, 'sup_p_norm'):>10}"
                     f"{mean(r, 'sum_p_norm', prec=2):>12}{mean(r, 'missed_fraction'):>9}"
                     f"{mean(r, 'mean_latency', 1000.0, 1):>9}{mean(r, 'nominal_selection_rate'):>9}")
    return "\n".join(lines)


def to_json(rows):
    return json.dumps(rows, indent=2, sort_keys=True)
