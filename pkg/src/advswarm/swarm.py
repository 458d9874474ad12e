"""Reduced-order quadrotor dynamics, consensus control and a lossy network.

Planar (x-y) motion is a double integrator driven directly by the consensus
acceleration; altitude is held by a critically damped regulator.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

GRAVITY = 9.81


@dataclass
class ControlParams:
    alpha: float = 0.72828
    gamma: float = 1.09242
    ref_freq: float = 0.1
    ref_period: int = 500
    # iterations per second used to turn the step-indexed profile into d/dt
    nominal_ts: float = 0.035

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0:
            raise ValueError("control gains must be positive")

    def v_ref(self, k):
        """Shared reference velocity at iteration ``k`` (x-y)."""
        w = 2.0 * math.pi / self.ref_period
        return np.array([0.0, 2.0 * math.pi * self.ref_freq * math.cos(w * k)])

    def v_ref_dot(self, k):
        w = 2.0 * math.pi / self.ref_period
        return np.array([0.0, -2.0 * math.pi * self.ref_freq * w * math.sin(w * k) / self.nominal_ts])


@dataclass
class RobotPhysState:
    p: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)


@dataclass(frozen=True)
class NeighborMessage:
    sender: int
    receiver: int
    p_tilde: np.ndarray
    send_step: int
    delivery_step: int

    def __post_init__(self):
        if self.delivery_step < self.send_step:
            raise ValueError("message delivered before it was sent")


class Topology:
    """Switching undirected-or-directed adjacency over robot ids.

    ``schedule`` is a list of ``(start_step, matrix)`` pairs sorted by start;
    the last entry whose start is ``<= k`` is active at step ``k``.
    """

    def __init__(self, ids, adjacency=None, schedule=None):
        self.ids = list(ids)
        n = len(self.ids)
        if schedule is None:
            if adjacency is None:
                adjacency = np.ones((n, n)) - np.eye(n)
            schedule = [(0, adjacency)]
        self.schedule = []
        for start, A in sorted(schedule, key=lambda s: s[0]):
            A = np.asarray(A, dtype=int)
            if A.shape != (n, n):
                raise ValueError(f"adjacency must be {n}x{n}")
            if np.any(np.diag(A) != 0) or not np.all(np.isin(A, (0, 1))):
                raise ValueError("adjacency must be binary with an empty diagonal")
            self.schedule.append((int(start), A))
        self._index = {rid: i for i, rid in enumerate(self.ids)}
        self._nbrs = [{rid: [self.ids[j] for j in np.flatnonzero(A[i])] for i, rid in enumerate(self.ids)}
                      for _, A in self.schedule]

    def _active(self, k):
        idx = 0
        for n, (start, _) in enumerate(self.schedule):
            if start <= k:
                idx = n
        return idx

    def matrix(self, k):
        return self.schedule[self._active(k)][1]

    def neighbors(self, rid, k):
        return self._nbrs[self._active(k)][rid]


def consensus_control(p_tilde, v_tilde, neighbor_p_tilde, neighbors, params, k, u_a=None):
    """Planar consensus acceleration for one robot.

    ``p_tilde`` and ``v_tilde`` are the robot's own x-y errors with respect
    to its target and the reference velocity; ``neighbor_p_tilde`` maps
    neighbour id to its last received x-y error. Neighbours that never
    reported are left out.
    """
    p_tilde = np.asarray(p_tilde, dtype=float)[:2]
    acc = np.zeros(2)
    for j in neighbors:
        pj = neighbor_p_tilde.get(j)
        if pj is None:
            log.debug("no message yet from neighbour %s at step %d", j, k)
            continue
        acc += p_tilde - np.asarray(pj, dtype=float)[:2]
    u = -params.alpha * acc - params.gamma * np.asarray(v_tilde, dtype=float)[:2] + params.v_ref_dot(k)
    if u_a is not None:
        u = u + np.asarray(u_a, dtype=float)
    return u


def step_dynamics(state, u, T_s, z_ref=None, z_omega=2.0):
    """Semi-implicit Euler step: velocity first, then position with the new velocity."""
    if T_s <= 0:
        raise ValueError("sampling interval must be positive")
    a = np.zeros(3)
    a[:2] = u
    if z_ref is not None:
        a[2] = -z_omega ** 2 * (state.p[2] - z_ref) - 2.0 * z_omega * state.v[2]
    v = state.v + a * T_s
    p = state.p + v * T_s
    return RobotPhysState(p, v, state.yaw)


def yaw_matrix(yaw):
    """Map from (pitch, roll) deviations to planar acceleration over g.

    Small-angle thrust tilt gives ``a_x = g (theta cos psi + phi sin psi)``
    and ``a_y = g (theta sin psi - phi cos psi)``.
    """
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, s], [s, -c]])


def attitude_map(u, yaw, g=GRAVITY):
    """Commanded ``(pitch, roll)`` deviations producing planar acceleration ``u``."""
    (a, b), (c, d) = yaw_matrix(yaw)
    det = a * d - b * c
    if abs(det) < 1e-12:
        raise ValueError(f"degenerate yaw {yaw}")
    ux, uy = float(u[0]), float(u[1])
    return (d * ux - b * uy) / (det * g), (a * uy - c * ux) / (det * g)


def network_deliver(queue, step, loss, delay, rng):
    """Pop the messages due at ``step``; each is dropped with probability ``loss``.

    Returns ``(delivered, remaining)``. Loss is drawn per message in queue
    order, so results are reproducible for a seeded ``rng``.
    """
    delivered, remaining = [], []
    for msg in queue:
        if msg.send_step + delay <= step:
            if loss <= 0 or rng.random() >= loss:
                delivered.append(msg)
        else:
            remaining.append(msg)
    return delivered, remaining


class Network:
    """Per-link message queue with fixed delay (in ticks) and i.i.d. loss."""

    def __init__(self, loss=0.0, delay=0, rng=None):
        if not 0.0 <= loss <= 1.0:
            raise ValueError("loss probability must lie in [0, 1]")
        if delay < 0:
            raise ValueError("delay must be non-negative")
        self.loss = loss
        self.delay = int(delay)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.queue = []
        self.inbox = defaultdict(dict)
        self.sent = 0
        self.delivered = 0

    def send(self, sender, receiver, p_tilde, step):
        self.queue.append(NeighborMessage(sender, receiver, np.array(p_tilde, dtype=float),
                                          step, step + self.delay))
        self.sent += 1

    def deliver(self, step):
        """Deliver due messages into per-receiver zero-order-hold inboxes."""
        delivered, self.queue = network_deliver(self.queue, step, self.loss, self.delay, self.rng)
        for msg in delivered:
            self.inbox[msg.receiver][msg.sender] = msg.p_tilde
        self.delivered += len(delivered)
        return delivered
