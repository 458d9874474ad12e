"""Per-tick CSV, JSON summaries and the text report."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import to_dict

CSV_COLUMNS = [
    "k", "robot", "t", "T_s", "m", "n_candidates", "beta", "nominal_selected",
    "px_hat", "py_hat", "pz_hat", "vx_hat", "vy_hat", "vz_hat", "p_norm",
    "tr_w_ad", "tr_w_sd", "obs_ratio", "px", "py", "pz", "ux", "uy", "u_a_x", "u_a_y",
    "formation_error", "rel_err_x", "rel_err_y",
]


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def record_row(r):
    return [r.k, r.robot, _fmt(r.t), _fmt(r.T_s), r.m, r.n_candidates, r.beta, _fmt(r.nominal_selected),
            *map(_fmt, r.x_hat), _fmt(r.p_norm), _fmt(r.tr_w_ad), _fmt(r.tr_w_sd), _fmt(r.obs_ratio),
            *map(_fmt, r.p_true), *map(_fmt, r.u), *map(_fmt, r.u_a), _fmt(r.formation_error),
            *map(_fmt, r.rel_err)]


def write_ticks(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(record_row(r))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def summary_json(summary, cfg):
    doc = {"name": cfg.name, "seed": cfg.seed, "summary": summary.to_dict(), "config": to_dict(cfg)}
    return json.dumps(_clean(doc), indent=2, sort_keys=True)


def write_outputs(records, summary, cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.name}_seed{cfg.seed}"
    write_ticks(records, out / f"{stem}_ticks.csv")
    (out / f"{stem}_summary.json").write_text(summary_json(summary, cfg) + "\n")
    return out / f"{stem}_summary.json"


def describe_attack(cfg_dict, robot):
    for a in cfg_dict.get("attacks", []):
        if a.get("target_robot") != robot:
            continue
        parts = []
        mc = a.get("misclass")
        if mc and mc.get("n_blocks"):
            parts.append(f"n={mc['n_blocks']} p={mc['p']:g}")
        ml = a.get("misloc")
        if ml and ml.get("b"):
            parts.append(f"b={ml['b']} q=±{100 * ml['q']:g}%")
        if parts:
            return ", ".join(parts)
    return "none"


def _num(v, width=10, prec=3):
    return f"{'n/a':>{width}}" if v is None else f"{v:>{width}.{prec}f}"


def report(out_dir):
    """Table-shaped text summary of every ``*_summary.json`` under ``out_dir``."""
    rows = []
    for p in sorted(Path(out_dir).glob("*_summary.json")):
        doc = json.loads(p.read_text())
        s = doc["summary"]
        rows.append((doc["name"], doc["seed"], describe_attack(doc["config"], s["focus_robot"]),
                     s["rms"], s["sup_p_norm"], s["sum_p_norm"], s["missed_fraction"], s["mean_latency"]))
    head = (f"{'experiment':<24}{'seed':>6}  {'adversary':<24}{'RMS':>10}{'sup|P|':>10}"
            f"{'sum|P|':>12}{'missed':>10}{'T_s[ms]':>10}")
    lines = [head, "-" * len(head)]
    for name, seed, adv, rms, sup, tot, miss, lat in rows:
        lines.append(f"{name:<24}{seed:>6}  {adv:<24}{_num(rms)}{_num(sup)}{_num(tot, 12, 2)}"
                     f"{_num(miss)}{_num(None if lat is None else 1000 * lat, 10, 1)}")
    return "\n".join(lines)
