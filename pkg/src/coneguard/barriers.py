"""Collision-cone barrier functions for spherical obstacles.

The cone barrier is

    h = <p_rel, v_rel> + |v_rel| * sqrt(|p_rel|^2 - r^2)

where p_rel points from the aircraft to the obstacle center, v_rel is the
relative velocity and r the combined collision radius. h >= 0 exactly when the
relative velocity ray misses the collision sphere; the sqrt factor is
|p_rel| cos(alpha) with alpha the cone half angle.

Each evaluation decomposes dh/dt = lf_h + lg_h . u against the fixed-wing
model. Because the earth-frame acceleration does not depend on the roll rate,
the roll-rate entry of lg_h is structurally zero for the plain cone barrier;
the backstepped variant restores it by penalising the gap between the
coordinated-turn rate and a desired turn rate. A generic second-order distance
barrier is included for comparison runs.

Obstacles move at constant velocity, so their acceleration is zero and all
time dependence enters through p_rel and v_rel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DEFAULT_GRAVITY,
    EPS_SPEED,
    AircraftState,
    acceleration_drift,
    acceleration_input_jacobian,
    coordinated_turn_rate,
    inertial_velocity,
)
from .errors import ConfigError, DegenerateVelocity, DomainError, InsideCollisionRadius
from .nominal import ReferenceSample, horizontal_normal_component

# Below this relative speed the cone direction v_rel/|v_rel| is undefined.
EPS_RELATIVE_SPEED = 1e-6  # m/s

NAIVE = "naive"
BACKSTEPPED = "backstepped"
BASELINE = "baseline"

TURN_RATE_MODES = ("reference", "zero")


@dataclass
class Obstacle:
    """Sphere of circumscribing radius `radius`, moving at constant velocity."""

    center: np.ndarray
    velocity: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.radius = float(self.radius)
        if self.radius < 0:
            raise ConfigError("obstacle radius must be nonnegative")

    def at_time(self, t: float) -> "Obstacle":
        """Obstacle advanced analytically to time t (exact for constant velocity)."""
        return Obstacle(self.center + self.velocity * t, self.velocity, self.radius)

    def __eq__(self, other):
        if not isinstance(other, Obstacle):
            return NotImplemented
        return (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.velocity, other.velocity)
            and self.radius == other.radius
        )


@dataclass(frozen=True)
class CollisionGeometry:
    """Combined collision radius r = obstacle radius + aircraft radius + margin."""

    r: float
    r_uav: float
    d_s: float

    def __post_init__(self):
        if self.r <= 0:
            raise ConfigError("combined collision radius must be positive")
        if self.r_uav < 0 or self.d_s < 0:
            raise ConfigError("aircraft radius and safety margin must be nonnegative")
        if self.r < self.r_uav + self.d_s:
            raise ConfigError("combined radius smaller than aircraft radius + margin")

    @classmethod
    def combine(cls, r_obs: float, r_uav: float, d_s: float) -> "CollisionGeometry":
        return cls(r_obs + r_uav + d_s, r_uav, d_s)


@dataclass(frozen=True)
class RelativeKinematics:
    """Obstacle-minus-aircraft position and velocity."""

    p_rel: np.ndarray
    v_rel: np.ndarray


@dataclass
class BarrierEval:
    """Barrier value with its dh/dt decomposition for one (state, obstacle) pair.

    lf_h collects every input-independent term, including the obstacle-motion
    time dependence; lg_h is the 1x3 row of input coefficients ordered
    (accel, roll rate, pitch rate). separation is |p_rel| at evaluation time.
    """

    h: float
    lf_h: float
    lg_h: np.ndarray
    kind: str
    separation: float

    def hdot(self, u: np.ndarray) -> float:
        """dh/dt under input u."""
        return self.lf_h + float(self.lg_h @ np.asarray(u, dtype=float))


@dataclass(frozen=True)
class BacksteppingConfig:
    """Penalty scale (the lambda of the quadratic turn-rate penalty) and the
    policy used to derive the desired turn rate from the reference."""

    scale: float = 1e-4
    turn_rate_mode: str = "reference"

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigError("backstepping scale must be positive")
        if self.turn_rate_mode not in TURN_RATE_MODES:
            raise ConfigError(
                f"turn_rate_mode must be one of {TURN_RATE_MODES}, got {self.turn_rate_mode!r}"
            )


def relative_kinematics(state: AircraftState, obstacle: Obstacle) -> RelativeKinematics:
    """p_rel = obstacle center - aircraft position, v_rel = d/dt p_rel."""
    return RelativeKinematics(
        obstacle.center - state.position,
        obstacle.velocity - inertial_velocity(state),
    )


def collision_cone_value(rel: RelativeKinematics, geom: CollisionGeometry) -> float:
    """Cone barrier value; raises InsideCollisionRadius when |p_rel| <= r."""
    pn = float(np.linalg.norm(rel.p_rel))
    if pn <= geom.r:
        raise InsideCollisionRadius(pn, geom.r)
    w = float(np.linalg.norm(rel.v_rel))
    s = math.sqrt(pn * pn - geom.r * geom.r)
    return float(rel.p_rel @ rel.v_rel) + w * s


def collision_cone_eval(
    state: AircraftState,
    obstacle: Obstacle,
    geom: CollisionGeometry,
    gravity: float = DEFAULT_GRAVITY,
) -> BarrierEval:
    """Cone barrier with its dh/dt decomposition against the aircraft model.

    Gradients: dh/dp = v_rel + |v_rel| p_rel / s and dh/dv = xi with
    xi = p_rel + v_rel s / |v_rel|, s = sqrt(|p_rel|^2 - r^2). The relative
    acceleration is minus the aircraft acceleration (constant-velocity
    obstacle), so lg_h = -xi . (acceleration input Jacobian), whose roll-rate
    column is structurally zero.
    """
    rel = relative_kinematics(state, obstacle)
    p, v = rel.p_rel, rel.v_rel
    pn = float(np.linalg.norm(p))
    if pn <= geom.r:
        raise InsideCollisionRadius(pn, geom.r)
    w = float(np.linalg.norm(v))
    if w <= EPS_RELATIVE_SPEED:
        raise DegenerateVelocity(
            f"relative speed {w:.3g} m/s at or below {EPS_RELATIVE_SPEED} m/s"
        )
    s = math.sqrt(pn * pn - geom.r * geom.r)
    h = float(p @ v) + w * s

    grad_p = v + (w / s) * p
    xi = p + (s / w) * v
    lf = float(grad_p @ v) - float(xi @ acceleration_drift(state, gravity))
    lg = -(xi @ acceleration_input_jacobian(state))
    return BarrierEval(h, lf, lg, NAIVE, pn)


def desired_turn_rate(
    state: AircraftState,
    ref: ReferenceSample,
    gravity: float = DEFAULT_GRAVITY,
    mode: str = "reference",
) -> float:
    """Desired coordinated-turn rate implied by the reference acceleration.

    mode "reference": take the horizontal path-normal component of the
    reference acceleration, convert it to a bank angle via atan2(a_lat, g) and
    to a turn rate via (g/V) sin(bank) cos(pitch). mode "zero" always returns 0
    (plain penalty toward wings-level flight).
    """
    if mode == "zero":
        return 0.0
    if mode != "reference":
        raise ConfigError(f"unknown turn rate mode {mode!r}")
    if state.speed <= EPS_SPEED:
        raise DomainError(f"speed {state.speed:.6g} m/s at or below guard {EPS_SPEED} m/s")
    a_lat = horizontal_normal_component(ref.acceleration, ref.velocity)
    bank = math.atan2(a_lat, gravity)
    return gravity / state.speed * math.sin(bank) * math.cos(state.pitch)


def backstepped_cone_eval(
    state: AircraftState,
    obstacle: Obstacle,
    geom: CollisionGeometry,
    penalty: BacksteppingConfig,
    desired_rate: float,
    gravity: float = DEFAULT_GRAVITY,
) -> BarrierEval:
    """Cone barrier minus a quadratic turn-rate penalty, restoring roll-rate authority.

    h_back = h - (desired_rate - R)^2 / (2 scale) with R the coordinated-turn
    rate. desired_rate is held constant between control updates, so its time
    derivative is zero and the penalty contributes (e/scale) * dR/dt with
    e = desired_rate - R. The roll-rate entry of dR/du is (g/V) cos(roll)
    cos(pitch); the pitch-rate entry cancels exactly.
    """
    base = collision_cone_eval(state, obstacle, geom, gravity)
    r_act = coordinated_turn_rate(state, gravity)
    e = desired_rate - r_act

    v = state.speed
    sphi, cphi = math.sin(state.roll), math.cos(state.roll)
    sth, cth = math.sin(state.pitch), math.cos(state.pitch)
    gv = gravity / v
    dr_dphi = gv * cphi * cth
    dr_dtheta = -gv * sphi * sth
    dr_dspeed = -gv / v * sphi * cth
    # Drift attitude rates from the model; speed drift is zero.
    roll_rate_drift = gv * sphi * cphi * sth
    pitch_rate_drift = -gv * sphi * sphi * cth
    rdot_drift = dr_dphi * roll_rate_drift + dr_dtheta * pitch_rate_drift
    # dR/du: the pitch-rate column dr_dphi*s(roll)tan(pitch) + dr_dtheta*c(roll)
    # reduces to (g/V) s(roll)c(roll) (c(pitch)tan(pitch) - s(pitch)) = 0.
    rdot_jac = np.array([dr_dspeed, dr_dphi, 0.0])

    scale = penalty.scale
    h = base.h - e * e / (2.0 * scale)
    lf = base.lf_h + (e / scale) * rdot_drift
    lg = base.lg_h + (e / scale) * rdot_jac
    return BarrierEval(h, lf, lg, BACKSTEPPED, base.separation)


def distance_barrier_eval(
    state: AircraftState,
    obstacle: Obstacle,
    geom: CollisionGeometry,
    gravity: float = DEFAULT_GRAVITY,
    gamma1: float = 1.0,
) -> BarrierEval:
    """Second-order distance barrier used as the comparison baseline.

    The squared-distance margin h0 = |p_rel|^2 - r^2 has no input in its first
    derivative, so the filtered quantity is H = dh0/dt + gamma1 * h0, whose
    derivative does contain the input. Well defined on |p_rel| >= r.
    """
    if gamma1 <= 0:
        raise ConfigError("gamma1 must be positive")
    rel = relative_kinematics(state, obstacle)
    p, v = rel.p_rel, rel.v_rel
    pn = float(np.linalg.norm(p))
    if pn < geom.r:
        raise InsideCollisionRadius(pn, geom.r)
    h0 = pn * pn - geom.r * geom.r
    hd0 = 2.0 * float(p @ v)
    big_h = hd0 + gamma1 * h0

    lf = 2.0 * float(v @ v) - 2.0 * float(p @ acceleration_drift(state, gravity)) + gamma1 * hd0
    lg = -2.0 * (p @ acceleration_input_jacobian(state))
    return BarrierEval(big_h, lf, lg, BASELINE, pn)
