"""3D Dubins-style fixed-wing kinematics.

State: earth-fixed position (x, y, z), Euler attitude (roll, pitch, yaw) and
total longitudinal speed V. The earth z axis points down: positive pitch gives
dz/dt = -V*sin(pitch) < 0, i.e. a climb. Inputs are longitudinal acceleration,
body roll rate and body pitch rate; the body yaw rate is not a free input --
the drift terms embed the coordinated-turn rate R = (g/V) sin(roll) cos(pitch).

All operations are pure functions of their arguments. The model divides by V
and cos(pitch), so every operation guards those with DomainError rather than
saturating silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_GRAVITY = 9.81  # m/s^2

# Singularity guards: the model is undefined at V = 0 and |pitch| = pi/2.
EPS_SPEED = 1e-3  # m/s
EPS_PITCH = 1e-3  # rad


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi] by exact modular reduction."""
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class AircraftState:
    """Aircraft state: position (m), roll/pitch/yaw (rad), speed (m/s)."""

    x: float
    y: float
    z: float
    roll: float
    pitch: float
    yaw: float
    speed: float

    def __post_init__(self):
        object.__setattr__(self, "roll", wrap_angle(self.roll))
        object.__setattr__(self, "pitch", wrap_angle(self.pitch))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.roll, self.pitch, self.yaw, self.speed])

    @classmethod
    def from_array(cls, arr) -> "AircraftState":
        x, y, z, roll, pitch, yaw, speed = (float(v) for v in arr)
        return cls(x, y, z, roll, pitch, yaw, speed)


@dataclass(frozen=True)
class ControlInput:
    """Input vector: longitudinal acceleration (m/s^2), roll rate, pitch rate (rad/s)."""

    accel: float = 0.0
    roll_rate: float = 0.0
    pitch_rate: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.accel, self.roll_rate, self.pitch_rate])

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        a, p, q = (float(v) for v in arr)
        return cls(a, p, q)


ZERO_INPUT = ControlInput(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of AircraftState, same field order, per-second units."""

    dx: float
    dy: float
    dz: float
    droll: float
    dpitch: float
    dyaw: float
    dspeed: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz, self.droll, self.dpitch, self.dyaw, self.dspeed])

    @classmethod
    def from_array(cls, arr) -> "StateDerivative":
        return cls(*(float(v) for v in arr))


def _guard(speed: float, pitch: float) -> None:
    if speed <= EPS_SPEED:
        raise DomainError(f"speed {speed:.6g} m/s at or below guard {EPS_SPEED} m/s")
    if abs(pitch) >= math.pi / 2 - EPS_PITCH:
        raise DomainError(f"pitch {pitch:.6g} rad within {EPS_PITCH} rad of +-pi/2")


def _drift_array(x: np.ndarray, gravity: float) -> np.ndarray:
    _, _, _, roll, pitch, yaw, speed = x
    _guard(speed, pitch)
    sphi, cphi = math.sin(roll), math.cos(roll)
    sth, cth = math.sin(pitch), math.cos(pitch)
    spsi, cpsi = math.sin(yaw), math.cos(yaw)
    gv = gravity / speed
    return np.array(
        [
            speed * cth * cpsi,
            speed * cth * spsi,
            -speed * sth,
            gv * sphi * cphi * sth,
            -gv * sphi * sphi * cth,
            gv * sphi * cphi,
            0.0,
        ]
    )


def _control_matrix_array(x: np.ndarray) -> np.ndarray:
    _, _, _, roll, pitch, _, _ = x
    if abs(pitch) >= math.pi / 2 - EPS_PITCH:
        raise DomainError(f"pitch {pitch:.6g} rad within {EPS_PITCH} rad of +-pi/2")
    sphi, cphi = math.sin(roll), math.cos(roll)
    tth, cth = math.tan(pitch), math.cos(pitch)
    g = np.zeros((7, 3))
    g[3] = (0.0, 1.0, sphi * tth)
    g[4] = (0.0, 0.0, cphi)
    g[5] = (0.0, 0.0, sphi / cth)
    g[6] = (1.0, 0.0, 0.0)
    return g


def _derivative_array(x: np.ndarray, u: np.ndarray, gravity: float) -> np.ndarray:
    return _drift_array(x, gravity) + _control_matrix_array(x) @ u


def drift(state: AircraftState, gravity: float = DEFAULT_GRAVITY) -> StateDerivative:
    """Drift field f(x): the zero-input state derivative. Speed derivative is 0."""
    if gravity <= 0:
        raise DomainError("gravity must be positive")
    return StateDerivative.from_array(_drift_array(state.as_array(), gravity))


def control_matrix(state: AircraftState) -> np.ndarray:
    """Input matrix g(x), shape (7, 3), columns ordered (accel, roll rate, pitch rate).

    The position rows are identically zero; the speed row is (1, 0, 0).
    """
    return _control_matrix_array(state.as_array())


def state_derivative(
    state: AircraftState, control: ControlInput, gravity: float = DEFAULT_GRAVITY
) -> StateDerivative:
    """Control-affine state derivative f(x) + g(x) u."""
    if gravity <= 0:
        raise DomainError("gravity must be positive")
    return StateDerivative.from_array(
        _derivative_array(state.as_array(), control.as_array(), gravity)
    )


def inertial_velocity(state: AircraftState) -> np.ndarray:
    """Earth-frame velocity vector; its norm equals the state's speed."""
    sth, cth = math.sin(state.pitch), math.cos(state.pitch)
    spsi, cpsi = math.sin(state.yaw), math.cos(state.yaw)
    return state.speed * np.array([cth * cpsi, cth * spsi, -sth])


def coordinated_turn_rate(state: AircraftState, gravity: float = DEFAULT_GRAVITY) -> float:
    """Body yaw rate R = (g/V) sin(roll) cos(pitch) implied by the drift terms."""
    if state.speed <= EPS_SPEED:
        raise DomainError(f"speed {state.speed:.6g} m/s at or below guard {EPS_SPEED} m/s")
    return gravity / state.speed * math.sin(state.roll) * math.cos(state.pitch)


def acceleration_input_jacobian(state: AircraftState) -> np.ndarray:
    """Jacobian of the earth-frame acceleration with respect to the input, shape (3, 3).

    Column 1 is the unit velocity direction (longitudinal acceleration), column 2
    (roll rate) is identically zero because neither pitch, yaw nor speed rates
    depend on it, column 3 carries the pitch-rate channel.
    """
    _guard(state.speed, state.pitch)
    v = state.speed
    sphi, cphi = math.sin(state.roll), math.cos(state.roll)
    sth, cth = math.sin(state.pitch), math.cos(state.pitch)
    spsi, cpsi = math.sin(state.yaw), math.cos(state.yaw)
    jac = np.zeros((3, 3))
    jac[:, 0] = (cth * cpsi, cth * spsi, -sth)
    jac[:, 2] = (
        -v * (cphi * sth * cpsi + sphi * spsi),
        v * (sphi * cpsi - cphi * sth * spsi),
        -v * cphi * cth,
    )
    return jac


def acceleration_drift(state: AircraftState, gravity: float = DEFAULT_GRAVITY) -> np.ndarray:
    """Earth-frame acceleration under zero input (drift-induced attitude rates only)."""
    _guard(state.speed, state.pitch)
    sphi, cphi = math.sin(state.roll), math.cos(state.roll)
    sth, cth = math.sin(state.pitch), math.cos(state.pitch)
    spsi, cpsi = math.sin(state.yaw), math.cos(state.yaw)
    # d/dt of V*(cth cpsi, cth spsi, -sth) with pitch/yaw drift rates substituted.
    return (
        gravity
        * sphi
        * cth
        * np.array(
            [
                sphi * sth * cpsi - cphi * spsi,
                sphi * sth * spsi + cphi * cpsi,
                sphi * cth,
            ]
        )
    )


def aircraft_acceleration(
    state: AircraftState, control: ControlInput, gravity: float = DEFAULT_GRAVITY
) -> np.ndarray:
    """Earth-frame acceleration of the aircraft, d/dt of inertial_velocity."""
    return acceleration_drift(state, gravity) + acceleration_input_jacobian(state) @ control.as_array()


def step_rk4(
    state: AircraftState, control: ControlInput, dt: float, gravity: float = DEFAULT_GRAVITY
) -> AircraftState:
    """Classical RK4 step with the input held constant over the step.

    Angles are re-wrapped afterwards; raises DomainError if any stage or the
    resulting state violates the speed/pitch guards.
    """
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    x = state.as_array()
    u = control.as_array()
    k1 = _derivative_array(x, u, gravity)
    k2 = _derivative_array(x + 0.5 * dt * k1, u, gravity)
    k3 = _derivative_array(x + 0.5 * dt * k2, u, gravity)
    k4 = _derivative_array(x + dt * k3, u, gravity)
    nxt = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = AircraftState.from_array(nxt)
    _guard(out.speed, out.pitch)
    return out
