"""Scenario configuration: YAML schema, defaults, overrides and validation.

A scenario file is a key/value tree; every key is optional and falls back to
the defaults below, unknown keys are rejected. Obstacle velocities are
constant over an episode by construction (the schema has no time-varying
form). Overrides use dotted paths resolved against the same schema, with
integer segments indexing into lists, e.g. ``obstacles.0.velocity.0=-5``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .barriers import (
    TURN_RATE_MODES,
    BacksteppingConfig,
    CollisionGeometry,
    Obstacle,
)
from .dynamics import EPS_PITCH, EPS_SPEED, AircraftState
from .errors import ConfigError
from .nominal import ReferenceTrajectory, StraightTrajectory, TrackingGains, TurnTrajectory
from .safety_filter import ClassKappa

FILTER_KINDS = ("none", "naive", "backstepped", "baseline")

DEFAULT_TREE = {
    "initial_state": {
        "x": 0.0, "y": 0.0, "z": 0.0,
        "roll": 0.0, "pitch": 0.0, "yaw": 0.0,
        "speed": 20.0,
    },
    "obstacles": [],
    "geometry": {"aircraft_radius": 10.0, "safety_margin": 40.0},
    "trajectory": {"kind": "straight"},
    "gains": {"k_pos": 0.5, "k_v": 1.0, "k_theta": 2.0, "k_phi": 2.0},
    "kappa": {"gamma": 1.0},
    "filter_kind": "naive",
    "backstepping": {"scale": 1.0e-4, "turn_rate_mode": "reference"},
    "baseline": {"gamma1": 1.0},
    "dt": 0.01,
    "t_max": 120.0,
    "gravity": 9.81,
    "input_clamp": None,
}

DEFAULT_OBSTACLE = {"center": [500.0, 0.0, 0.0], "velocity": [0.0, 0.0, 0.0], "radius": 50.0}

_TRAJECTORY_DEFAULTS = {
    "straight": {"kind": "straight", "start": [0.0, 0.0, 0.0], "velocity": [20.0, 0.0, 0.0],
                 "duration": None},
    "turn": {"kind": "turn", "center": [0.0, 0.0, 0.0], "radius": 1000.0, "rate": 0.02,
             "phase": 0.0, "duration": None},
}


@dataclass
class ScenarioConfig:
    """Fully resolved scenario: typed objects ready for the episode runner."""

    initial_state: AircraftState
    obstacles: list[Obstacle]
    aircraft_radius: float
    safety_margin: float
    trajectory: ReferenceTrajectory
    gains: TrackingGains
    kappa: ClassKappa
    filter_kind: str
    backstepping: BacksteppingConfig
    baseline_gamma1: float
    dt: float
    t_max: float
    gravity: float
    input_clamp: tuple[float, float, float] | None = None
    label: str = ""

    def geometry_for(self, obstacle: Obstacle) -> CollisionGeometry:
        """Combined collision geometry for one obstacle."""
        return CollisionGeometry.combine(obstacle.radius, self.aircraft_radius, self.safety_margin)

    def geometries(self) -> list[CollisionGeometry]:
        return [self.geometry_for(ob) for ob in self.obstacles]

    def with_filter(self, kind: str, label: str | None = None) -> "ScenarioConfig":
        return replace(self, filter_kind=kind, label=kind if label is None else label)


def _fail(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _vec3(value, path: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise _fail(path, f"expected a 3-vector, got {value!r}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise _fail(path, f"expected a mapping, got {value!r}")
    return value


def _check_keys(node: dict, allowed, path: str) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise _fail(path, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _merge_section(defaults: dict, given, path: str) -> dict:
    given = _mapping(given, path) if given is not None else {}
    _check_keys(given, defaults.keys(), path)
    merged = copy.deepcopy(defaults)
    merged.update(given)
    return merged


def resolve_tree(raw: dict | None) -> dict:
    """Merge a raw scenario tree with the defaults; reject unknown keys.

    Shape errors (wrong types, unknown keys) raise ConfigError immediately;
    value invariants are checked by `violations` on the resolved tree.
    """
    raw = _mapping(raw, "scenario") if raw is not None else {}
    _check_keys(raw, DEFAULT_TREE.keys(), "scenario")
    tree: dict = {}
    tree["initial_state"] = _merge_section(
        DEFAULT_TREE["initial_state"], raw.get("initial_state"), "initial_state"
    )
    obstacles = raw.get("obstacles", [])
    if not isinstance(obstacles, list):
        raise _fail("obstacles", f"expected a list, got {obstacles!r}")
    tree["obstacles"] = [
        _merge_section(DEFAULT_OBSTACLE, ob, f"obstacles.{i}") for i, ob in enumerate(obstacles)
    ]
    tree["geometry"] = _merge_section(DEFAULT_TREE["geometry"], raw.get("geometry"), "geometry")

    traj_raw = _mapping(raw.get("trajectory", {}), "trajectory") if raw.get("trajectory") else {}
    kind = traj_raw.get("kind", "straight")
    if kind not in _TRAJECTORY_DEFAULTS:
        raise _fail("trajectory.kind", f"expected one of {sorted(_TRAJECTORY_DEFAULTS)}, got {kind!r}")
    tree["trajectory"] = _merge_section(_TRAJECTORY_DEFAULTS[kind], traj_raw, "trajectory")

    tree["gains"] = _merge_section(DEFAULT_TREE["gains"], raw.get("gains"), "gains")
    tree["kappa"] = _merge_section(DEFAULT_TREE["kappa"], raw.get("kappa"), "kappa")
    tree["filter_kind"] = raw.get("filter_kind", DEFAULT_TREE["filter_kind"])
    tree["backstepping"] = _merge_section(
        DEFAULT_TREE["backstepping"], raw.get("backstepping"), "backstepping"
    )
    tree["baseline"] = _merge_section(DEFAULT_TREE["baseline"], raw.get("baseline"), "baseline")
    for key in ("dt", "t_max", "gravity"):
        tree[key] = raw.get(key, DEFAULT_TREE[key])
    tree["input_clamp"] = raw.get("input_clamp", None)
    return tree


def violations(tree: dict) -> list[str]:
    """All invariant violations of a resolved tree, one message each."""
    out: list[str] = []

    def num(section, key, positive=False, nonnegative=False):
        try:
            v = _number(tree[section][key] if key else tree[section], f"{section}.{key}")
        except ConfigError as e:
            out.append(str(e))
            return None
        name = f"{section}.{key}" if key else section
        if positive and v <= 0:
            out.append(f"{name}: must be positive, got {v}")
        if nonnegative and v < 0:
            out.append(f"{name}: must be nonnegative, got {v}")
        return v

    st = tree["initial_state"]
    speed = num("initial_state", "speed")
    if speed is not None and speed <= EPS_SPEED:
        out.append(f"initial_state.speed: must exceed {EPS_SPEED} m/s, got {speed}")
    pitch = num("initial_state", "pitch")
    if pitch is not None and abs(pitch) >= math.pi / 2 - EPS_PITCH:
        out.append(f"initial_state.pitch: must stay clear of +-pi/2, got {pitch}")
    for key in ("x", "y", "z", "roll", "yaw"):
        num("initial_state", key)

    r_uav = num("geometry", "aircraft_radius", nonnegative=True)
    d_s = num("geometry", "safety_margin", nonnegative=True)

    for i, ob in enumerate(tree["obstacles"]):
        path = f"obstacles.{i}"
        try:
            center = _vec3(ob["center"], f"{path}.center")
            _vec3(ob["velocity"], f"{path}.velocity")
        except ConfigError as e:
            out.append(str(e))
            continue
        radius = ob["radius"]
        if not isinstance(radius, (int, float)) or isinstance(radius, bool) or radius < 0:
            out.append(f"{path}.radius: must be a nonnegative number, got {radius!r}")
            continue
        if r_uav is None or d_s is None:
            continue
        r = radius + r_uav + d_s
        try:
            pos = [_number(st[k], f"initial_state.{k}") for k in ("x", "y", "z")]
        except ConfigError:
            continue
        sep = math.dist(center, pos)
        if sep <= r:
            out.append(
                f"{path}: initial state inside the collision sphere "
                f"(separation {sep:.3f} m <= r {r:.3f} m)"
            )

    traj = tree["trajectory"]
    if traj["kind"] == "straight":
        try:
            vel = _vec3(traj["velocity"], "trajectory.velocity")
            _vec3(traj["start"], "trajectory.start")
            if math.hypot(*vel) <= EPS_SPEED:
                out.append("trajectory.velocity: reference speed must exceed the hover guard")
        except ConfigError as e:
            out.append(str(e))
    else:
        try:
            _vec3(traj["center"], "trajectory.center")
            radius = _number(traj["radius"], "trajectory.radius")
            rate = _number(traj["rate"], "trajectory.rate")
            _number(traj["phase"], "trajectory.phase")
            if radius <= 0:
                out.append(f"trajectory.radius: must be positive, got {radius}")
            elif radius * abs(rate) <= EPS_SPEED:
                out.append("trajectory: turn speed radius*|rate| must exceed the hover guard")
        except ConfigError as e:
            out.append(str(e))

    for key in ("k_pos", "k_v", "k_theta", "k_phi"):
        num("gains", key, positive=True)
    num("kappa", "gamma", positive=True)
    num("backstepping", "scale", positive=True)
    if tree["backstepping"]["turn_rate_mode"] not in TURN_RATE_MODES:
        out.append(
            f"backstepping.turn_rate_mode: expected one of {TURN_RATE_MODES}, "
            f"got {tree['backstepping']['turn_rate_mode']!r}"
        )
    num("baseline", "gamma1", positive=True)

    if tree["filter_kind"] not in FILTER_KINDS:
        out.append(f"filter_kind: expected one of {FILTER_KINDS}, got {tree['filter_kind']!r}")

    dt = num("dt", "", positive=True)
    t_max = num("t_max", "", positive=True)
    if dt is not None and t_max is not None and t_max <= dt:
        out.append(f"t_max: must exceed dt, got t_max={t_max} dt={dt}")
    duration = traj.get("duration")
    if duration is not None and t_max is not None:
        try:
            if _number(duration, "trajectory.duration") < t_max:
                out.append("trajectory.duration: shorter than t_max")
        except ConfigError as e:
            out.append(str(e))
    num("gravity", "", positive=True)

    clamp = tree["input_clamp"]
    if clamp is not None:
        try:
            vals = _vec3(clamp, "input_clamp")
            if any(v <= 0 for v in vals):
                out.append("input_clamp: limits must be positive")
        except ConfigError as e:
            out.append(str(e))
    return out


def config_from_tree(tree: dict, label: str = "") -> ScenarioConfig:
    """Build the typed config from a resolved tree; raises on any violation."""
    problems = violations(tree)
    if problems:
        raise ConfigError("; ".join(problems))
    st = tree["initial_state"]
    traj_tree = tree["trajectory"]
    duration = traj_tree.get("duration")
    duration = math.inf if duration is None else float(duration)
    if traj_tree["kind"] == "straight":
        trajectory: ReferenceTrajectory = StraightTrajectory(
            tuple(traj_tree["start"]), tuple(traj_tree["velocity"]), duration
        )
    else:
        trajectory = TurnTrajectory(
            tuple(traj_tree["center"]),
            float(traj_tree["radius"]),
            float(traj_tree["rate"]),
            float(traj_tree["phase"]),
            duration,
        )
    clamp = tree["input_clamp"]
    return ScenarioConfig(
        initial_state=AircraftState(
            st["x"], st["y"], st["z"], st["roll"], st["pitch"], st["yaw"], st["speed"]
        ),
        obstacles=[
            Obstacle(np.array(ob["center"], dtype=float), np.array(ob["velocity"], dtype=float),
                     float(ob["radius"]))
            for ob in tree["obstacles"]
        ],
        aircraft_radius=float(tree["geometry"]["aircraft_radius"]),
        safety_margin=float(tree["geometry"]["safety_margin"]),
        trajectory=trajectory,
        gains=TrackingGains(**{k: float(v) for k, v in tree["gains"].items()}),
        kappa=ClassKappa(float(tree["kappa"]["gamma"])),
        filter_kind=tree["filter_kind"],
        backstepping=BacksteppingConfig(
            float(tree["backstepping"]["scale"]), tree["backstepping"]["turn_rate_mode"]
        ),
        baseline_gamma1=float(tree["baseline"]["gamma1"]),
        dt=float(tree["dt"]),
        t_max=float(tree["t_max"]),
        gravity=float(tree["gravity"]),
        input_clamp=None if clamp is None else tuple(float(v) for v in clamp),
        label=label,
    )


def parse_scalar(text: str):
    """Parse an override value: YAML scalar/flow syntax, with bare floats
    like ``1e-4`` (not valid YAML floats) accepted too."""
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse override value {text!r}: {e}") from None
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def apply_override(tree: dict, dotted_key: str, value) -> None:
    """Set a dotted-path key in a resolved tree, validating the path.

    `value` may be a pre-parsed object or a string (parsed via parse_scalar).
    """
    if isinstance(value, str):
        value = parse_scalar(value)
    parts = dotted_key.split(".")
    node = tree
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        path = ".".join(parts[: depth + 1])
        if isinstance(node, list):
            try:
                idx = int(part)
            except ValueError:
                raise _fail(path, f"expected a list index, got {part!r}") from None
            if not 0 <= idx < len(node):
                raise _fail(path, f"index out of range (list has {len(node)} items)")
            if last:
                node[idx] = value
                return
            node = node[idx]
        elif isinstance(node, dict):
            if part not in node:
                raise _fail(path, f"unknown key; allowed: {sorted(node)}")
            if last:
                node[part] = value
                return
            node = node[part]
        else:
            raise _fail(path, "path descends into a scalar value")


def tree_from_file(path: str | Path) -> dict:
    """Load and resolve a scenario file (defaults applied, unknown keys rejected)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: malformed YAML: {e}") from None
    return resolve_tree(raw)


def load_scenario(
    path: str | Path,
    overrides: tuple[tuple[str, str], ...] = (),
    label: str | None = None,
) -> ScenarioConfig:
    """Load a scenario file, apply dotted-key overrides, validate, and build."""
    tree = tree_from_file(path)
    for key, value in overrides:
        apply_override(tree, key, value)
    return config_from_tree(tree, label=label if label is not None else Path(path).stem)
