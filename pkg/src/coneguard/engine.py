"""Closed-loop episode runner, metrics and multi-config comparison.

One episode iterates sense -> nominal control -> barrier evaluation -> safety
filter -> RK4 integration at a fixed step, with the control held constant over
each step. Obstacle positions are advanced analytically (exact for constant
velocities). Runs are deterministic: the same config produces a bit-identical
log. An episode terminates at t_max or as soon as any separation reaches the
combined collision radius; being inside the cone (h < 0) is recoverable and
does not end the episode.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .barriers import (
    BarrierEval,
    backstepped_cone_eval,
    collision_cone_eval,
    collision_cone_value,
    desired_turn_rate,
    distance_barrier_eval,
    relative_kinematics,
)
from .dynamics import AircraftState, ControlInput, step_rk4
from .errors import ConfigError, ConfigMismatch, DegenerateVelocity, DomainError
from .nominal import reference_eval, track
from .safety_filter import FilterOutput, compose_obstacles, constraint_margin
from .scenario import ScenarioConfig

logger = logging.getLogger(__name__)


@dataclass
class StepRecord:
    """Everything logged at one control instant (state is pre-integration)."""

    t: float
    state: AircraftState
    u_des: ControlInput
    u_safe: ControlInput
    u_star: ControlInput
    h: tuple[float, ...]
    psi: tuple[float, ...]
    active_obstacle: int  # -1 when the filter is inactive
    separations: tuple[float, ...]
    feasible: bool
    lg_active: np.ndarray | None = None  # gradient row of the governing barrier


@dataclass
class TrajectoryLog:
    """Time-indexed record of one episode."""

    records: list[StepRecord]
    n_obstacles: int
    dt: float
    terminated_early: bool


@dataclass
class EpisodeMetrics:
    """Summary metrics computable from the log alone."""

    min_separation: float
    min_h: float
    collision: bool
    filter_active_fraction: float
    control_effort: float  # integral of |u_safe|^2 dt, trapezoidal
    max_path_deviation: float
    infeasible_steps: int


def _evaluate_obstacle(
    config: ScenarioConfig, state: AircraftState, obstacle, geom, ref
) -> BarrierEval:
    kind = config.filter_kind
    if kind == "naive":
        return collision_cone_eval(state, obstacle, geom, config.gravity)
    if kind == "backstepped":
        rate = desired_turn_rate(state, ref, config.gravity, config.backstepping.turn_rate_mode)
        return backstepped_cone_eval(
            state, obstacle, geom, config.backstepping, rate, config.gravity
        )
    if kind == "baseline":
        return distance_barrier_eval(state, obstacle, geom, config.gravity, config.baseline_gamma1)
    raise ConfigError(f"no barrier evaluation for filter kind {kind!r}")


def run_episode(config: ScenarioConfig) -> TrajectoryLog:
    """Run one closed-loop episode and return its log."""
    problems = config_violations(config)
    if problems:
        raise ConfigError("; ".join(problems))

    geoms = config.geometries()
    n_obs = len(config.obstacles)
    n_steps = int(math.floor(config.t_max / config.dt + 1e-9))
    state = config.initial_state
    records: list[StepRecord] = []
    clamp_warned = False

    for k in range(n_steps + 1):
        t = k * config.dt
        obstacles_t = [ob.at_time(t) for ob in config.obstacles]
        seps = tuple(
            float(np.linalg.norm(ob.center - state.position)) for ob in obstacles_t
        )
        collided = any(sep <= geom.r for sep, geom in zip(seps, geoms))

        ref = reference_eval(config.trajectory, t)
        u_des = track(state, ref, config.gains, config.gravity)

        h_vals = [math.nan] * n_obs
        psi_vals = [math.nan] * n_obs
        active_idx = -1
        feasible = True
        lg_active = None
        u_safe = ControlInput()
        u_star = u_des

        if not collided:
            if config.filter_kind == "none":
                for i, (ob, geom) in enumerate(zip(obstacles_t, geoms)):
                    h_vals[i] = collision_cone_value(relative_kinematics(state, ob), geom)
            elif n_obs:
                evals: list[tuple[int, BarrierEval]] = []
                for i, (ob, geom) in enumerate(zip(obstacles_t, geoms)):
                    try:
                        ev = _evaluate_obstacle(config, state, ob, geom, ref)
                    except DegenerateVelocity:
                        # No relative motion: the cone is undefined and the
                        # obstacle cannot cause a collision; leave it out.
                        h_vals[i] = collision_cone_value(relative_kinematics(state, ob), geom)
                        continue
                    h_vals[i] = ev.h
                    evals.append((i, ev))
                if evals:
                    out: FilterOutput = compose_obstacles(
                        [ev for _, ev in evals], u_des, config.kappa
                    )
                    for i, ev in evals:
                        psi_vals[i] = constraint_margin(ev, u_des, config.kappa)
                    u_safe, u_star, feasible = out.u_safe, out.u_star, out.feasible
                    if out.active and out.active_index is not None:
                        active_idx = evals[out.active_index][0]
                        lg_active = evals[out.active_index][1].lg_h
            if config.input_clamp is not None:
                limits = np.array(config.input_clamp)
                clipped = np.clip(u_star.as_array(), -limits, limits)
                if not clamp_warned and not np.array_equal(clipped, u_star.as_array()):
                    logger.warning(
                        "input clamp engaged; the barrier guarantee no longer applies"
                    )
                    clamp_warned = True
                u_star = ControlInput.from_array(clipped)

        records.append(
            StepRecord(
                t=t,
                state=state,
                u_des=u_des,
                u_safe=u_safe,
                u_star=u_star,
                h=tuple(h_vals),
                psi=tuple(psi_vals),
                active_obstacle=active_idx,
                separations=seps,
                feasible=feasible,
                lg_active=lg_active,
            )
        )
        if collided:
            return TrajectoryLog(records, n_obs, config.dt, terminated_early=True)
        if k < n_steps:
            try:
                state = step_rk4(state, u_star, config.dt, config.gravity)
            except DomainError as e:
                raise DomainError(f"step {k} (t={t:.4f} s): {e}") from e
    return TrajectoryLog(records, n_obs, config.dt, terminated_early=False)


def config_violations(config: ScenarioConfig) -> list[str]:
    """Invariant check on an already-typed config (mirrors the tree check)."""
    out = []
    if config.dt <= 0:
        out.append("dt must be positive")
    if config.t_max <= config.dt:
        out.append("t_max must exceed dt")
    if config.filter_kind not in ("none", "naive", "backstepped", "baseline"):
        out.append(f"unknown filter kind {config.filter_kind!r}")
    if config.trajectory.duration < config.t_max:
        out.append("trajectory duration shorter than t_max")
    for i, ob in enumerate(config.obstacles):
        r = config.geometry_for(ob).r
        sep = float(np.linalg.norm(ob.center - config.initial_state.position))
        if sep <= r:
            out.append(
                f"obstacle {i}: initial separation {sep:.3f} m inside collision radius {r:.3f} m"
            )
    return out


def summarize(log: TrajectoryLog, config: ScenarioConfig) -> EpisodeMetrics:
    """Episode metrics from a log (reference positions recomputed from config)."""
    if not log.records:
        raise ValueError("cannot summarize an empty log")
    geoms = config.geometries()
    min_sep = math.inf
    collision = False
    min_h = math.nan
    deviations = []
    effort_samples = []
    active = 0
    infeasible = 0
    for rec in log.records:
        for sep, geom in zip(rec.separations, geoms):
            min_sep = min(min_sep, sep)
            if sep <= geom.r:
                collision = True
        finite_h = [v for v in rec.h if not math.isnan(v)]
        if finite_h:
            lo = min(finite_h)
            min_h = lo if math.isnan(min_h) else min(min_h, lo)
        ref = reference_eval(config.trajectory, rec.t)
        deviations.append(float(np.linalg.norm(rec.state.position - ref.position)))
        effort_samples.append(float(rec.u_safe.as_array() @ rec.u_safe.as_array()))
        if rec.active_obstacle >= 0:
            active += 1
        if not rec.feasible:
            infeasible += 1
    if not log.n_obstacles:
        min_sep = math.inf
    effort = float(np.trapezoid(effort_samples, dx=log.dt)) if len(effort_samples) > 1 else 0.0
    return EpisodeMetrics(
        min_separation=min_sep,
        min_h=min_h,
        collision=collision,
        filter_active_fraction=active / len(log.records),
        control_effort=effort,
        max_path_deviation=max(deviations),
        infeasible_steps=infeasible,
    )


def first_activation_time(log: TrajectoryLog) -> float:
    """Earliest time the filter was active, NaN if it never was."""
    for rec in log.records:
        if rec.active_obstacle >= 0:
            return rec.t
    return math.nan


@dataclass
class ComparisonEntry:
    label: str
    metrics: EpisodeMetrics
    first_activation: float
    max_position_diff_vs_first: float


@dataclass
class ComparisonReport:
    entries: list[ComparisonEntry]
    logs: list[TrajectoryLog]


def compare(configs: list[ScenarioConfig]) -> ComparisonReport:
    """Run each config and report metrics, first activation and path deltas.

    All configs must share trajectory, obstacles and dt; labels are made
    unique by suffixing duplicates.
    """
    if len(configs) < 2:
        raise ConfigMismatch("compare requires at least two configs")
    ref_cfg = configs[0]
    for i, cfg in enumerate(configs[1:], start=1):
        if cfg.dt != ref_cfg.dt:
            raise ConfigMismatch(f"config {i}: dt differs ({cfg.dt} vs {ref_cfg.dt})")
        if cfg.trajectory != ref_cfg.trajectory:
            raise ConfigMismatch(f"config {i}: trajectory differs")
        if len(cfg.obstacles) != len(ref_cfg.obstacles) or any(
            a != b for a, b in zip(cfg.obstacles, ref_cfg.obstacles)
        ):
            raise ConfigMismatch(f"config {i}: obstacles differ")

    labels: list[str] = []
    for i, cfg in enumerate(configs):
        label = cfg.label or cfg.filter_kind or f"config{i}"
        while label in labels:
            label = f"{label}_{i}"
        labels.append(label)

    logs = [run_episode(cfg) for cfg in configs]
    entries = []
    base_positions = np.array([rec.state.position for rec in logs[0].records])
    for label, cfg, log in zip(labels, configs, logs):
        positions = np.array([rec.state.position for rec in log.records])
        n = min(len(positions), len(base_positions))
        diff = float(np.max(np.linalg.norm(positions[:n] - base_positions[:n], axis=1))) if n else 0.0
        entries.append(
            ComparisonEntry(
                label=label,
                metrics=summarize(log, cfg),
                first_activation=first_activation_time(log),
                max_position_diff_vs_first=diff,
            )
        )
    return ComparisonReport(entries, logs)
