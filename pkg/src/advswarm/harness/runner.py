"""Closed-loop tick simulation of the perception, estimation and control pipeline."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ..adversary import apply_misclassification, apply_mislocalization, frame_latency
from ..estimation import IntermittentKalmanFilter, NumericalAbort, initial_state
from ..geometry import FORWARD_MOUNT, ObjectModel, camera_rotation, euler_zyx, localize_from_box
from ..observability import GramianAccumulator
from ..perception import class_filter, confidence_thresh_filter, detect
from ..swarm import Network, RobotPhysState, Topology, attitude_map, consensus_control, step_dynamics
from .metrics import compute_summary

log = logging.getLogger(__name__)

# Substream tags for per-(robot, subsystem) seeding.
SUBSYSTEMS = {"detector": 0, "vio": 1, "misclass": 2, "misloc": 3}
NETWORK_STREAM = 1_000_003


def substream(seed, robot_id, subsystem):
    """Independent generator for one robot subsystem, derived from the master seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(robot_id), SUBSYSTEMS[subsystem]))
    return np.random.default_rng(ss)


@dataclass
class TickRecord:
    k: int
    robot: int
    t: float
    T_s: float
    m: int
    n_candidates: int
    beta: int
    nominal_selected: float  # 1/0, nan when nothing was associated
    x_hat: np.ndarray
    p_norm: float
    tr_w_ad: float
    tr_w_sd: float
    obs_ratio: float
    p_true: np.ndarray
    u: np.ndarray
    u_a: np.ndarray
    formation_error: float
    rel_err: np.ndarray  # x-y error of this robot's view of p_i - p_j against p*_i - p*_j


def vio_oracle(v_true, R_true, rng, velocity_std=0.0, rotation_std=0.0):
    """Velocity and attitude as onboard odometry would report them; never position."""
    v = np.array(v_true, dtype=float)
    if velocity_std > 0:
        v = v + rng.normal(0.0, velocity_std, size=3)
    R = np.array(R_true, dtype=float)
    if rotation_std > 0:
        R = R @ Rotation.from_rotvec(rng.normal(0.0, rotation_std, size=3)).as_matrix()
    return v, R


class _Robot:
    def __init__(self, rc, cfg):
        self.id = rc.id
        self.target = np.array(rc.target, dtype=float)
        v0 = np.array(rc.velocity) if rc.velocity is not None else np.append(cfg.control.v_ref(0), 0.0)
        self.phys = RobotPhysState(rc.position, v0, rc.yaw)
        self.R_WB = euler_zyx(rc.yaw)
        self.kf = IntermittentKalmanFilter(cfg.filter, initial_state())
        self.gram = GramianAccumulator()
        self.rng_det = substream(cfg.seed, rc.id, "detector")
        self.rng_vio = substream(cfg.seed, rc.id, "vio")
        atk = cfg.attack_for(rc.id)
        self.attack = atk
        self.sched = None
        self.rng_misloc = None
        if atk is not None:
            if atk.misclass is not None:
                self.sched = atk.misclass.schedule(cfg.horizon, substream(cfg.seed, rc.id, "misclass"))
            if atk.misloc is not None:
                self.rng_misloc = substream(cfg.seed, rc.id, "misloc")
        self.latency_model = atk.overload if atk is not None else cfg.latency
        self.u_a = np.array(cfg.synthetic_u_a.get(rc.id, (0.0, 0.0)), dtype=float)
        self.t = 0.0
        self.T_s = None  # interval since the previous iteration

    def p_tilde_hat(self):
        return self.kf.state.x[:2] - self.target


def _perceive(r, cfg, k, scene, intr):
    det = cfg.detector
    v_meas, R_meas = vio_oracle(r.phys.v, r.R_WB, r.rng_vio, cfg.vio.velocity_std, cfg.vio.rotation_std)
    R_CW_true = camera_rotation(r.R_WB, FORWARD_MOUNT)
    ds = detect(r.phys.p, R_CW_true, scene, intr, det.pixel_noise, r.rng_det, t=r.t,
                base_pr=det.base_pr, pr_jitter=det.pr_jitter)
    if r.attack is not None:
        if r.attack.misloc is not None and k >= r.attack.misloc.start_step:
            ds = apply_mislocalization(ds, r.attack.misloc, r.rng_misloc, cfg.landmark_class)
        if r.sched is not None:
            ds = apply_misclassification(ds, r.sched, k, cfg.landmark_class, r.attack.decoy_class)
    m = len(ds)
    kept = class_filter(confidence_thresh_filter(ds, det.conf_thresh), cfg.landmark_class)
    landmark = next(o for o in scene if o.class_id == cfg.landmark_class)
    R_CW_meas = camera_rotation(R_meas, FORWARD_MOUNT)
    fp = cfg.filter
    cands = [localize_from_box(d.box, R_CW_meas, intr, landmark, d.pr, fp.eps_bar, fp.eps_low, d.spurious)
             for d in kept]
    return v_meas, cands, m


def run_scenario(cfg, return_state=False):
    """Simulate ``cfg`` and return ``(records, summary)``.

    Every tick runs three phases: each robot senses and filters, estimates
    are broadcast and delivered, then each robot applies consensus control
    and integrates its dynamics over the latency-driven interval. A
    non-finite estimate aborts the run; the summary then carries
    ``aborted = True`` and the reason. With ``return_state`` a third item
    holds the network, the robots and the posterior covariance of every record.
    """
    intr = cfg.intrinsics()
    scene = [ObjectModel(o.width, o.height, o.position, o.class_id) for o in cfg.objects]
    robots = [_Robot(rc, cfg) for rc in cfg.robots]
    by_id = {r.id: r for r in robots}
    targets = {r.id: r.target for r in robots}
    topo = Topology(cfg.robot_ids, cfg.network.adjacency)
    net = Network(cfg.network.loss, cfg.network.delay,
                  np.random.default_rng(np.random.SeedSequence(int(cfg.seed), spawn_key=(NETWORK_STREAM,))))
    pair = cfg.focus_pair
    partner = {}
    if pair is not None:
        partner = {pair[0]: pair[1], pair[1]: pair[0]}
    ctrl = cfg.control
    records = []
    abort_reason = None
    nan2 = np.full(2, np.nan)

    covs = []  # posterior P per record; norms are taken in one batch at the end

    for k in range(cfg.horizon):
        staged = {}
        v_ref = np.zeros(3)
        v_ref[:2] = ctrl.v_ref(k)
        try:
            for r in robots:
                v_meas, cands, m = _perceive(r, cfg, k, scene, intr)
                y_vel = v_meas - v_ref
                rep = r.kf.step(r.T_s if r.T_s is not None else 0.0, y_vel, cands)
                if not math.isfinite(r.kf.state.x.sum() + r.kf.state.P.sum()):
                    raise NumericalAbort(f"non-finite estimate for robot {r.id}")
                T_next = max(cfg.ts_floor, frame_latency(m, r.latency_model))
                r.gram.accumulate(T_next, rep.beta == 0)
                staged[r.id] = (rep, m, T_next)
        except NumericalAbort as exc:
            abort_reason = f"step {k}: {exc}"
            log.error("run aborted at %s", abort_reason)
            break

        for r in robots:
            for j in topo.neighbors(r.id, k):
                net.send(r.id, j, r.p_tilde_hat(), k)
        net.deliver(k)

        for r in robots:
            rep, m, T_next = staged[r.id]
            inbox = net.inbox[r.id]
            fs = r.kf.state
            u = consensus_control(r.p_tilde_hat(), fs.x[3:5], inbox, topo.neighbors(r.id, k), ctrl, k, r.u_a)

            # perception-induced share of u: -alpha * sum_j (e_i - e_j), e = estimate error
            e_i = fs.x[:2] - r.phys.p[:2]
            u_attack = np.zeros(2)
            for j in topo.neighbors(r.id, k):
                if j in inbox:
                    e_j = inbox[j] + targets[j] - by_id[j].phys.p[:2]
                    u_attack -= ctrl.alpha * (e_i - e_j)

            errs = [math.hypot(*((r.phys.p[:2] - o.phys.p[:2]) - (r.target - o.target)))
                    for o in robots if o is not r]
            rel = nan2
            j = partner.get(r.id)
            if j is not None and j in inbox:
                rel = (fs.x[:2] - (inbox[j] + targets[j])) - (r.target - targets[j])
            tr_ad, tr_sd, ratio = r.gram.snapshot()
            sel = np.nan if rep.selected is None else float(not rep.selected.spurious)
            records.append(TickRecord(
                k, r.id, r.t, T_next, m, rep.n_candidates, rep.beta, sel,
                fs.x.copy(), np.nan, tr_ad, tr_sd, ratio,
                r.phys.p.copy(), u, u_attack, sum(errs) / len(errs) if errs else 0.0, np.array(rel)))
            covs.append(fs.P)

            theta, phi = attitude_map(u, r.phys.yaw)
            r.R_WB = euler_zyx(r.phys.yaw, theta, phi)
            r.phys = step_dynamics(r.phys, u, T_next, cfg.altitude)
            r.t += T_next
            r.T_s = T_next
            if not math.isfinite(r.phys.p.sum()):
                abort_reason = f"step {k}: non-finite state for robot {r.id}"
        if abort_reason is not None:
            break

    if covs:
        for rec, lam in zip(records, np.linalg.eigvalsh(np.array(covs))[:, -1]):
            rec.p_norm = float(lam)
    summary = compute_summary(records, cfg, abort_reason)
    if return_state:
        return records, summary, {"network": net, "robots": robots, "covariances": covs}
    return records, summary
