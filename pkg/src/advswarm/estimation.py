"""Kalman filter with intermittent position and persistent velocity measurements.

The state stacks ``d`` position components on top of ``d`` velocity
components (``d = 3`` in the simulator, ``d = 1`` in scalar checks). Each
step the predicted position is gated against every candidate measurement
with a per-candidate innovation covariance, the nearest admissible candidate
is fused, and then the velocity measurement is fused.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

GATE_COND_LIMIT = 1e12


class NumericalAbort(RuntimeError):
    """Raised when the filter produces a non-finite innovation."""


@dataclass
class FilterParams:
    sigma2_pos: float = 0.05
    sigma2_vel: float = 0.04
    r_vel: float = 0.078
    eps_bar: float = 0.4
    eps_low: float = 0.01
    gate_threshold: float = 2.4476

    def __post_init__(self):
        if min(self.sigma2_pos, self.sigma2_vel, self.r_vel) < 0:
            raise ValueError("noise variances must be non-negative")
        if self.gate_threshold <= 0:
            raise ValueError("gate threshold must be positive")

    def process_noise(self, d=3):
        q = np.empty(2 * d)
        q[:d], q[d:] = self.sigma2_pos, self.sigma2_vel
        return np.diag(q)


@dataclass
class FilterState:
    x: np.ndarray
    P: np.ndarray
    k: int = 0
    t: float = 0.0

    @property
    def dim(self):
        return self.x.shape[0] // 2

    @property
    def position(self):
        return self.x[:self.dim]

    @property
    def velocity(self):
        return self.x[self.dim:]

    def covariance_norm(self):
        """Induced 2-norm of ``P`` (its largest eigenvalue)."""
        return float(np.linalg.eigvalsh(self.P)[-1])


@dataclass
class MeasurementBundle:
    y_vel: np.ndarray
    pos_candidates: list = field(default_factory=list)
    associated: object = None

    @property
    def beta(self):
        """1 when no position measurement reaches the filter."""
        return 0 if self.associated is not None else 1


def initial_state(d=3, pos_var=1.0, vel_var=0.05):
    """Zero mean with ``P = diag(pos_var I, vel_var I)``."""
    return FilterState(np.zeros(2 * d), np.diag(np.repeat([pos_var, vel_var], d).astype(float)))


@lru_cache(maxsize=256)
def transition(T_s, d=3):
    F = np.eye(2 * d)
    F[range(d), range(d, 2 * d)] = T_s
    F.flags.writeable = False
    return F


def predict(fs, T_s, params, Q=None):
    if T_s < 0:
        raise ValueError("sampling interval must be non-negative")
    d = fs.dim
    F = transition(T_s, d)
    if Q is None:
        Q = params.process_noise(d)
    return FilterState(F @ fs.x, F @ fs.P @ F.T + Q, fs.k + 1, fs.t + T_s)


def mahalanobis_sq(candidate, fs):
    """Squared gate distance of one candidate; inf when S is ill-conditioned."""
    d = fs.dim
    S = fs.P[:d, :d] + candidate.cov
    if np.linalg.cond(S) > GATE_COND_LIMIT:
        log.warning("ill-conditioned innovation covariance at step %d; candidate rejected", fs.k)
        return np.inf
    e = candidate.p - fs.x[:d]
    return float(e @ np.linalg.solve(S, e))


@lru_cache(maxsize=8)
def _eye(d):
    return np.eye(d)


def gate_distances(candidates, fs):
    """Squared gate distances of all candidates against one predicted state.

    Isotropic candidate covariances share the eigenbasis of the predicted
    position block, so it is decomposed once per call and all such
    candidates are evaluated together.
    """
    if not candidates:
        return []
    d = fs.dim
    covs = np.array([c.cov for c in candidates])
    r = covs[:, 0, 0]
    iso = ~(covs - r[:, None, None] * _eye(d)).any(axis=(1, 2))
    lam, V = np.linalg.eigh(fs.P[:d, :d])
    ev = lam[None, :] + r[:, None]
    Z = (np.array([c.p for c in candidates]) - fs.x[:d]) @ V
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = np.sum(Z * Z / ev, axis=1)
        bad = (ev[:, 0] <= 0) | (ev[:, -1] / ev[:, 0] > GATE_COND_LIMIT)
    out = d2.tolist()
    for i, c in enumerate(candidates):
        if not iso[i]:
            out[i] = mahalanobis_sq(c, fs)
        elif bad[i]:
            log.warning("ill-conditioned innovation covariance at step %d; candidate rejected", fs.k)
            out[i] = np.inf
    return out


def gate(candidates, fs, params):
    """Admissible candidates as ``(index, distance_sq)`` pairs, plus beta.

    ``fs`` is the predicted state. A candidate passes when its squared
    Mahalanobis distance is at most ``gate_threshold ** 2``.
    """
    limit = params.gate_threshold ** 2
    admitted = [(i, d2) for i, d2 in enumerate(gate_distances(candidates, fs)) if d2 <= limit]
    return admitted, (0 if admitted else 1)


def associate(admissible, candidates, fs=None):
    """Nearest admissible candidate; ties go to the lowest index.

    ``admissible`` is the output of :func:`gate`. If ``fs`` is given the
    distances are recomputed against it instead of trusting the cached ones.
    """
    if not admissible:
        raise ValueError("nothing to associate")
    best_i, best_d2 = None, np.inf
    for i, d2 in admissible:
        if fs is not None:
            d2 = mahalanobis_sq(candidates[i], fs)
        if d2 < best_d2:
            best_i, best_d2 = i, d2
    return candidates[best_i]


def _correct(x, P, idx, y, R):
    """Kalman correction for a measurement of the state components ``idx``."""
    innov = y - x[idx]
    if not math.isfinite(innov.sum()):
        raise NumericalAbort("non-finite innovation")
    PHt = P[:, idx]
    K = PHt @ np.linalg.inv(P[idx, idx] + R)
    x = x + K @ innov
    P = P - K @ PHt.T
    return x, 0.5 * (P + P.T)


def update(fs, y_vel, y_pos, params, R_vel=None):
    """Sequential position-then-velocity correction of a predicted state.

    ``y_pos`` is the associated RelPosMeasurement, or None for a missed
    position measurement. The velocity stage always runs.
    """
    d = fs.dim
    x, P = fs.x, fs.P
    if y_pos is not None:
        x, P = _correct(x, P, slice(0, d), np.asarray(y_pos.p, dtype=float), y_pos.cov)
    if R_vel is None:
        R_vel = params.r_vel * np.eye(d)
    x, P = _correct(x, P, slice(d, 2 * d), np.asarray(y_vel, dtype=float), R_vel)
    return FilterState(x, P, fs.k, fs.t)


@dataclass
class StepReport:
    beta: int
    n_candidates: int
    n_admitted: int
    selected: object = None


class IntermittentKalmanFilter:
    """Per-robot filter driver: predict, gate, associate, update.

    The first call to :meth:`step` skips the prediction, since the initial
    state is already the prior for step 0.
    """

    def __init__(self, params=None, state=None):
        self.params = params or FilterParams()
        self.state = state if state is not None else initial_state()
        self._primed = False
        self._Q = self.params.process_noise(self.state.dim)
        self._R_vel = self.params.r_vel * np.eye(self.state.dim)

    def step(self, T_s, y_vel, candidates):
        fs = self.state
        if self._primed:
            fs = predict(fs, T_s, self.params, self._Q)
        self._primed = True
        admitted, beta = gate(candidates, fs, self.params)
        chosen = associate(admitted, candidates) if admitted else None
        self.state = update(fs, y_vel, chosen, self.params, self._R_vel)
        return StepReport(beta, len(candidates), len(admitted), chosen)
