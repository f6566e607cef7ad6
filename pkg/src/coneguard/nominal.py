"""Reference trajectories and the nominal tracking controller.

The controller is a cascaded proportional guidance law: position error feeds a
commanded velocity, whose magnitude drives the longitudinal acceleration, whose
vertical component drives a pitch command, and whose lateral error (together
with the reference feedforward acceleration) drives a coordinated-turn roll
command. It is exponentially convergent on the trajectory families provided
here; any other velocity-tracking law could be substituted without affecting
the safety layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DEFAULT_GRAVITY,
    EPS_PITCH,
    EPS_SPEED,
    AircraftState,
    ControlInput,
    inertial_velocity,
)
from .errors import ConfigError, DomainError, OutOfHorizon


@dataclass(frozen=True)
class ReferenceSample:
    """Reference position, velocity and acceleration at time t."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class TrackingGains:
    """Proportional gains (1/s) for the cascaded guidance loops."""

    k_pos: float = 0.5
    k_v: float = 1.0
    k_theta: float = 2.0
    k_phi: float = 2.0

    def __post_init__(self):
        for name in ("k_pos", "k_v", "k_theta", "k_phi"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"gain {name} must be positive")


@dataclass(frozen=True)
class StraightTrajectory:
    """Constant-velocity straight line p(t) = start + velocity * t."""

    start: tuple
    velocity: tuple
    duration: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))
        if math.hypot(*self.velocity) <= EPS_SPEED:
            raise ConfigError("straight trajectory speed must exceed the hover guard")

    def sample(self, t: float) -> ReferenceSample:
        v = np.array(self.velocity)
        return ReferenceSample(np.array(self.start) + v * t, v, np.zeros(3), t)


@dataclass(frozen=True)
class TurnTrajectory:
    """Constant-rate level circle of given radius about a center point.

    The path angle is rate * t + phase; speed is radius * |rate| and the
    acceleration magnitude is speed^2 / radius at all times.
    """

    center: tuple
    radius: float
    rate: float
    phase: float = 0.0
    duration: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if self.radius <= 0:
            raise ConfigError("turn radius must be positive")
        if self.radius * abs(self.rate) <= EPS_SPEED:
            raise ConfigError("turn trajectory speed must exceed the hover guard")

    def sample(self, t: float) -> ReferenceSample:
        a = self.rate * t + self.phase
        c, s = math.cos(a), math.sin(a)
        center = np.array(self.center)
        pos = center + self.radius * np.array([c, s, 0.0])
        vel = self.radius * self.rate * np.array([-s, c, 0.0])
        acc = -self.radius * self.rate**2 * np.array([c, s, 0.0])
        return ReferenceSample(pos, vel, acc, t)


ReferenceTrajectory = StraightTrajectory | TurnTrajectory


def reference_eval(trajectory: ReferenceTrajectory, t: float) -> ReferenceSample:
    """Sample the reference at time t; raises OutOfHorizon outside [0, duration]."""
    if t < 0.0 or t > trajectory.duration:
        raise OutOfHorizon(f"t={t:.6g} s outside horizon [0, {trajectory.duration:.6g}] s")
    return trajectory.sample(t)


def horizontal_normal_component(vec: np.ndarray, along: np.ndarray) -> float:
    """Signed component of vec along the horizontal left-normal of `along`.

    Positive values demand a turn that rotates the horizontal course from +x
    toward +y (positive yaw rate with the z-down convention). Returns 0 when
    `along` has no horizontal component.
    """
    tx, ty = float(along[0]), float(along[1])
    n = math.hypot(tx, ty)
    if n < 1e-12:
        return 0.0
    return float(-ty * vec[0] + tx * vec[1]) / n


def track(
    state: AircraftState,
    ref: ReferenceSample,
    gains: TrackingGains = TrackingGains(),
    gravity: float = DEFAULT_GRAVITY,
) -> ControlInput:
    """Nominal control toward the reference sample.

    Commanded velocity v_d = ref velocity + k_pos * position error, with the
    correction term saturated at half the reference speed so v_d can never
    reverse (an unsaturated norm-based speed loop is unstable once the
    aircraft overshoots the reference along-track). The speed loop gives
    accel = k_v * (|v_d| - V); the climb loop pitches toward
    -asin(v_d_z/|v_d|); the lateral loop rolls toward the coordinated-turn
    angle atan2(a_lat, g) where a_lat is the horizontal path-normal component
    of ref acceleration + k_pos * (v_d - v).
    """
    if state.speed <= EPS_SPEED:
        raise DomainError(f"speed {state.speed:.6g} m/s at or below guard {EPS_SPEED} m/s")
    if gravity <= 0:
        raise DomainError("gravity must be positive")

    v_corr = gains.k_pos * (ref.position - state.position)
    corr_cap = 0.5 * float(np.linalg.norm(ref.velocity))
    corr_norm = float(np.linalg.norm(v_corr))
    if corr_norm > corr_cap:
        v_corr = v_corr * (corr_cap / corr_norm)
    v_d = ref.velocity + v_corr
    speed_d = float(np.linalg.norm(v_d))
    accel = gains.k_v * (speed_d - state.speed)

    sin_climb = min(1.0, max(-1.0, float(v_d[2]) / max(speed_d, EPS_SPEED)))
    pitch_limit = math.pi / 2 - 2 * EPS_PITCH
    pitch_d = min(pitch_limit, max(-pitch_limit, -math.asin(sin_climb)))
    # Division guard keeps the pitch loop bounded near +-90 deg of roll.
    pitch_rate = gains.k_theta * (pitch_d - state.pitch) / max(math.cos(state.roll), 0.1)

    a_cmd = ref.acceleration + gains.k_pos * (v_d - inertial_velocity(state))
    a_lat = horizontal_normal_component(a_cmd, ref.velocity)
    roll_d = math.atan2(a_lat, gravity)
    roll_rate = gains.k_phi * (roll_d - state.roll)

    return ControlInput(accel, roll_rate, pitch_rate)
