"""Shared fixtures: random sampling of valid states/obstacles, the
finite-difference oracle for barrier derivatives, and cached scenario runs."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from coneguard.barriers import CollisionGeometry, Obstacle
from coneguard.dynamics import AircraftState, ControlInput, state_derivative
from coneguard.engine import run_episode
from coneguard.scenario import load_scenario

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = REPO_ROOT / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.yaml"


def random_state(rng: np.random.Generator) -> AircraftState:
    """A state safely inside the model's guarded domain."""
    return AircraftState(
        x=rng.uniform(-2000, 2000),
        y=rng.uniform(-2000, 2000),
        z=rng.uniform(-2000, 2000),
        roll=rng.uniform(-1.4, 1.4),
        pitch=rng.uniform(-1.2, 1.2),
        yaw=rng.uniform(-math.pi, math.pi),
        speed=rng.uniform(5.0, 50.0),
    )


def random_input(rng: np.random.Generator) -> ControlInput:
    return ControlInput(
        accel=rng.uniform(-5, 5),
        roll_rate=rng.uniform(-1, 1),
        pitch_rate=rng.uniform(-1, 1),
    )


def random_obstacle(rng: np.random.Generator, state: AircraftState, min_rel_speed=0.5):
    """Obstacle outside the collision sphere with non-degenerate relative motion."""
    from coneguard.barriers import relative_kinematics

    r_obs = rng.uniform(10.0, 80.0)
    geom = CollisionGeometry.combine(r_obs, rng.uniform(1.0, 20.0), rng.uniform(0.0, 50.0))
    while True:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        distance = rng.uniform(geom.r + 50.0, 2500.0)
        obstacle = Obstacle(
            center=state.position + distance * direction,
            velocity=rng.uniform(-30, 30, size=3),
            radius=r_obs,
        )
        rel = relative_kinematics(state, obstacle)
        if np.linalg.norm(rel.v_rel) >= min_rel_speed:
            return obstacle, geom


def fd_hdot(eval_fn, state: AircraftState, obstacle: Obstacle, u: ControlInput,
            gravity: float = 9.81, delta: float = 1e-6) -> float:
    """Forward finite difference of a barrier value along the closed-loop flow.

    The state is advanced one Euler step of size delta under input u and the
    obstacle is advanced analytically, so the difference quotient captures all
    time dependence the analytic lf_h + lg_h.u decomposition claims to cover.
    """
    h0 = eval_fn(state, obstacle).h
    deriv = state_derivative(state, u, gravity).as_array()
    bumped = AircraftState.from_array(state.as_array() + delta * deriv)
    h1 = eval_fn(bumped, obstacle.at_time(delta)).h
    return (h1 - h0) / delta


def fd_relative_gap(ev, u: ControlInput, analytic: float, fd: float) -> float:
    """Gap between analytic and finite-difference dh/dt, normalized by the
    decomposition's component scale.

    lf_h and lg_h.u can cancel almost exactly, in which case the forward
    difference carries truncation error proportional to the components rather
    than to the cancelled sum; normalizing by the larger of the two is the
    usual gradient-check convention.
    """
    u_arr = u.as_array()
    component_scale = abs(ev.lf_h) + float(np.linalg.norm(ev.lg_h)) * float(
        np.linalg.norm(u_arr)
    )
    denom = max(1.0, abs(analytic), abs(fd), component_scale)
    return abs(analytic - fd) / denom


@pytest.fixture(scope="session")
def episode_cache():
    """Cache of scenario runs keyed by (scenario name, filter kind, dt)."""
    cache: dict = {}

    def get(name: str, kind: str, dt: float = 0.01):
        key = (name, kind, dt)
        if key not in cache:
            config = load_scenario(scenario_path(name)).with_filter(kind)
            if dt != config.dt:
                import dataclasses

                config = dataclasses.replace(config, dt=dt)
            cache[key] = (config, run_episode(config))
        return cache[key]

    return get
