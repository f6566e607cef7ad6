"""Minimally invasive safety filter in closed switching form.

The filter solves  min |u - u_des|^2  s.t.  lf_h + lg_h.u + gamma*h >= 0.
With a single constraint the solution switches on the sign of

    psi = lf_h + lg_h . u_des + gamma * h

(the constraint margin at the desired input): zero correction when psi >= 0,
otherwise the projection u_safe = -lg_h^T psi / (lg_h . lg_h^T), which makes
the constraint exactly tight. A from-first-principles half-space projection is
provided as a test oracle, and a min-margin rule composes several obstacles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .barriers import BarrierEval
from .dynamics import ControlInput
from .errors import ConfigError, Infeasible

# Below this squared gradient norm the closed form divides by numerical noise.
EPS_GRADIENT = 1e-10


@dataclass(frozen=True)
class ClassKappa:
    """Linear class-K shaping kappa(h) = gamma * h with gamma > 0."""

    gamma: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")


@dataclass
class FilterOutput:
    """Filter result: u_star = u_des + u_safe, with the switching margin psi.

    active means psi < 0 (constraint would be violated at u_des); feasible is
    False only when the filter is active but the gradient is degenerate, in
    which case u_star falls back to u_des and the caller decides the outcome.
    active_index identifies the governing obstacle in multi-obstacle runs.
    """

    u_star: ControlInput
    u_safe: ControlInput
    psi: float
    active: bool
    feasible: bool
    active_index: int | None = None


def constraint_margin(ev: BarrierEval, u_des: ControlInput, kappa: ClassKappa) -> float:
    """psi = lf_h + lg_h . u_des + gamma * h."""
    return ev.lf_h + float(ev.lg_h @ u_des.as_array()) + kappa.gamma * ev.h


def filter_control(
    ev: BarrierEval,
    u_des: ControlInput,
    kappa: ClassKappa,
    eps_grad: float = EPS_GRADIENT,
) -> FilterOutput:
    """Closed-form switching filter for a single barrier constraint."""
    psi = constraint_margin(ev, u_des, kappa)
    if psi >= 0.0:
        return FilterOutput(u_des, ControlInput(), psi, active=False, feasible=True)
    g2 = float(ev.lg_h @ ev.lg_h)
    if g2 <= eps_grad:
        # Degenerate gradient while violated: no control direction can help.
        return FilterOutput(u_des, ControlInput(), psi, active=True, feasible=False)
    u_safe = ControlInput.from_array(-ev.lg_h * (psi / g2))
    u_star = ControlInput.from_array(u_des.as_array() + u_safe.as_array())
    return FilterOutput(u_star, u_safe, psi, active=True, feasible=True)


def qp_reference_solve(
    ev: BarrierEval, u_des: ControlInput, kappa: ClassKappa
) -> ControlInput:
    """Reference QP oracle: project u_des onto {u : a.u >= b}.

    Independent of filter_control's code path: written as the Euclidean
    projection onto the constraint half-space, a.u >= b with a = lg_h and
    b = -(lf_h + gamma*h). Raises Infeasible when the gradient is exactly zero
    and the constraint is violated at u_des.
    """
    a = ev.lg_h
    b = -(ev.lf_h + kappa.gamma * ev.h)
    violation = b - float(a @ u_des.as_array())
    if violation <= 0.0:
        return u_des
    a2 = float(a @ a)
    if a2 == 0.0:
        raise Infeasible("zero barrier gradient with violated constraint")
    return ControlInput.from_array(u_des.as_array() + a * (violation / a2))


def compose_obstacles(
    evals: Sequence[BarrierEval],
    u_des: ControlInput,
    kappa: ClassKappa,
    eps_grad: float = EPS_GRADIENT,
) -> FilterOutput:
    """Filter against the most-violated constraint (minimum margin) of several.

    Keeps the single-constraint closed form; with one eval this is identical
    to filter_control. The returned active_index is the argmin-margin obstacle
    when the filter is active.
    """
    if not evals:
        raise ValueError("compose_obstacles requires at least one barrier evaluation")
    margins = [constraint_margin(ev, u_des, kappa) for ev in evals]
    idx = int(np.argmin(margins))
    out = filter_control(evals[idx], u_des, kappa, eps_grad)
    out.active_index = idx if out.active else None
    return out
