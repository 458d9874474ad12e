"""Scenario configuration: dataclasses plus YAML loading and validation."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from ..adversary import AttackSpec, MisclassSpec, MislocSpec, OverloadModel
from ..estimation import FilterParams
from ..geometry import CameraIntrinsics
from ..swarm import ControlParams


class ConfigError(ValueError):
    pass


@dataclass
class RobotConfig:
    id: int
    position: list
    target: list
    yaw: float = 0.0
    velocity: list = None


@dataclass
class ObjectConfig:
    width: float
    height: float
    position: list
    class_id: int = 80


@dataclass
class DetectorConfig:
    focal: float = 200.0
    width: int = 960
    height: int = 720
    pixel_noise: float = 1.0
    base_pr: float = 0.9
    pr_jitter: float = 0.0
    conf_thresh: float = 0.15
    # carried for provenance only; the synthetic detector has no NMS stage
    iou_thresh: float = 0.45


@dataclass
class VioConfig:
    velocity_std: float = 0.05
    rotation_std: float = 0.0


@dataclass
class NetworkConfig:
    loss: float = 0.0
    delay: int = 0
    adjacency: list = None  # None means fully connected


@dataclass
class ScenarioConfig:
    name: str
    robots: list
    objects: list
    landmark_class: int = 80
    horizon: int = 1000
    seed: int = 0
    altitude: float = 0.5
    ts_floor: float = 0.02
    rms_t0: float = 10.0
    pair: tuple = None  # (i, j): RMS of p_i - p_j against targets; default last two robots
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    vio: VioConfig = field(default_factory=VioConfig)
    filter: FilterParams = field(default_factory=FilterParams)
    control: ControlParams = field(default_factory=ControlParams)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    latency: OverloadModel = field(default_factory=OverloadModel)
    attacks: list = field(default_factory=list)
    synthetic_u_a: dict = field(default_factory=dict)  # robot id -> constant x-y acceleration

    @property
    def robot_ids(self):
        return [r.id for r in self.robots]

    @property
    def focus_pair(self):
        if self.pair is not None:
            return tuple(self.pair)
        ids = self.robot_ids
        return (ids[-1], ids[-2]) if len(ids) >= 2 else None

    def attack_for(self, rid):
        for a in self.attacks:
            if a.target_robot == rid:
                return a
        return None

    def intrinsics(self):
        d = self.detector
        return CameraIntrinsics(d.focal, d.width, d.height)


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _vec(v, n, where):
    try:
        arr = np.asarray(v, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: not numeric") from exc
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where}: expected {n} finite numbers")
    return arr.tolist()


def _attack(data, i):
    where = f"attacks[{i}]"
    if not isinstance(data, dict) or "target_robot" not in data:
        raise ConfigError(f"{where}: needs target_robot")
    unknown = set(data) - {"target_robot", "misclass", "misloc", "overload", "decoy_class"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    misclass = _build(MisclassSpec, data["misclass"], f"{where}.misclass") if data.get("misclass") else None
    misloc = _build(MislocSpec, data["misloc"], f"{where}.misloc") if data.get("misloc") else None
    overload = _build(OverloadModel, data.get("overload"), f"{where}.overload")
    kw = {}
    if "decoy_class" in data:
        kw["decoy_class"] = int(data["decoy_class"])
    return AttackSpec(int(data["target_robot"]), misclass, misloc, overload, **kw)


def from_dict(raw):
    """Build and validate a ScenarioConfig from plain data."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a mapping")
    raw = copy.deepcopy(raw)
    nested = {
        "detector": DetectorConfig, "vio": VioConfig, "filter": FilterParams,
        "control": ControlParams, "network": NetworkConfig, "latency": OverloadModel,
    }
    kw = {}
    for key, cls in nested.items():
        if key in raw:
            kw[key] = _build(cls, raw.pop(key), key)
    robots = [_build(RobotConfig, r, f"robots[{i}]") for i, r in enumerate(raw.pop("robots", []) or [])]
    objects = [_build(ObjectConfig, o, f"objects[{i}]") for i, o in enumerate(raw.pop("objects", []) or [])]
    attacks = [_attack(a, i) for i, a in enumerate(raw.pop("attacks", []) or [])]
    u_a = raw.pop("synthetic_u_a", None) or {}
    top = {f.name for f in fields(ScenarioConfig)}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    if "name" not in raw:
        raise ConfigError("scenario needs a name")
    try:
        cfg = ScenarioConfig(robots=robots, objects=objects, attacks=attacks,
                             synthetic_u_a={int(k): v for k, v in u_a.items()}, **raw, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.horizon < 1:
        raise ConfigError("horizon must be at least 1")
    if not cfg.robots:
        raise ConfigError("at least one robot required")
    ids = cfg.robot_ids
    if len(set(ids)) != len(ids):
        raise ConfigError("robot ids must be unique")
    for r in cfg.robots:
        r.position = _vec(r.position, 3, f"robot {r.id} position")
        r.target = _vec(r.target, 2, f"robot {r.id} target")
        if r.velocity is not None:
            r.velocity = _vec(r.velocity, 3, f"robot {r.id} velocity")
    for i, o in enumerate(cfg.objects):
        o.position = _vec(o.position, 3, f"objects[{i}] position")
        if o.width <= 0 or o.height <= 0:
            raise ConfigError(f"objects[{i}]: size must be positive")
    if not any(o.class_id == cfg.landmark_class for o in cfg.objects):
        raise ConfigError("no scene object carries the landmark class")
    for a in cfg.attacks:
        if a.target_robot not in ids:
            raise ConfigError(f"attack targets unknown robot {a.target_robot}")
        if a.decoy_class == cfg.landmark_class:
            raise ConfigError("decoy class must differ from the landmark class")
        if a.misclass is not None:
            n, p = a.misclass.n_blocks, a.misclass.p
            if n < 0 or n > cfg.horizon:
                raise ConfigError("misclass.n_blocks must lie in [0, horizon]")
            if not 0.0 <= p <= 1.0:
                raise ConfigError("misclass.p must lie in [0, 1]")
    if len({a.target_robot for a in cfg.attacks}) != len(cfg.attacks):
        raise ConfigError("at most one attack entry per robot")
    for rid, u in cfg.synthetic_u_a.items():
        if rid not in ids:
            raise ConfigError(f"synthetic_u_a names unknown robot {rid}")
        cfg.synthetic_u_a[rid] = _vec(u, 2, f"synthetic_u_a[{rid}]")
    if cfg.pair is not None:
        if len(cfg.pair) != 2 or any(i not in ids for i in cfg.pair):
            raise ConfigError("pair must name two known robots")
    net = cfg.network
    if not 0.0 <= net.loss <= 1.0 or net.delay < 0:
        raise ConfigError("network loss must lie in [0, 1] and delay be non-negative")
    if net.adjacency is not None:
        A = np.asarray(net.adjacency)
        n = len(ids)
        if A.shape != (n, n) or np.any(np.diag(A) != 0) or not np.all(np.isin(A, (0, 1))):
            raise ConfigError("adjacency must be a binary matrix with empty diagonal")
    d = cfg.detector
    if d.focal <= 0 or d.width <= 0 or d.height <= 0 or d.pixel_noise < 0:
        raise ConfigError("detector intrinsics must be positive and noise non-negative")
    if cfg.ts_floor <= 0:
        raise ConfigError("ts_floor must be positive")
    return cfg


def load(path):
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return from_dict(raw)


def to_dict(cfg):
    """Plain-data echo of a config (inverse of :func:`from_dict`)."""
    out = asdict(cfg)
    out["attacks"] = [
        {k: v for k, v in asdict(a).items() if v is not None} for a in cfg.attacks
    ]
    out["synthetic_u_a"] = {int(k): list(v) for k, v in cfg.synthetic_u_a.items()}
    if cfg.pair is not None:
        out["pair"] = list(cfg.pair)
    return out


SWEEP_AXES = ("p", "n_blocks", "b", "q", "seed")


def with_axis(cfg, axis, value, robot=None):
    """Copy of ``cfg`` with one sweepable parameter set.

    Attack axes act on ``robot`` (default: first robot of the focus pair),
    creating an attack entry when none exists.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    cfg = copy.deepcopy(cfg)
    if axis == "seed":
        cfg.seed = int(value)
        return cfg
    if robot is None:
        robot = cfg.focus_pair[0] if cfg.focus_pair else cfg.robot_ids[0]
    atk = cfg.attack_for(robot) or AttackSpec(robot)
    if axis in ("p", "n_blocks"):
        mc = atk.misclass or MisclassSpec(cfg.horizon, 0.0)
        mc = replace(mc, p=float(value)) if axis == "p" else replace(mc, n_blocks=int(value))
        atk = replace(atk, misclass=mc)
    else:
        ml = atk.misloc or MislocSpec(0, 0.0)
        ml = replace(ml, b=int(value)) if axis == "b" else replace(ml, q=float(value))
        atk = replace(atk, misloc=ml)
    cfg.attacks = [a for a in cfg.attacks if a.target_robot != robot] + [atk]
    cfg.attacks.sort(key=lambda a: a.target_robot)
    validate(cfg)
    return cfg
