"""Safety filter tests: switching law, tightness, minimal-norm direction,
QP-oracle equivalence and multi-obstacle composition."""

import math

import numpy as np
import pytest

from coneguard.barriers import BarrierEval
from coneguard.dynamics import ControlInput
from coneguard.errors import ConfigError, Infeasible
from coneguard.safety_filter import (
    ClassKappa,
    compose_obstacles,
    constraint_margin,
    filter_control,
    qp_reference_solve,
)

KAPPA = ClassKappa(1.0)


def ev(h=0.0, lf=0.0, lg=(0.0, 0.0, 0.0), kind="naive"):
    return BarrierEval(h, lf, np.array(lg, dtype=float), kind, separation=math.nan)


def random_eval(rng):
    lg = rng.uniform(-5, 5, size=3)
    while np.linalg.norm(lg) < 0.1:
        lg = rng.uniform(-5, 5, size=3)
    return ev(h=rng.uniform(-50, 50), lf=rng.uniform(-50, 50), lg=lg)


class TestMargin:
    def test_drift_and_shaping(self):
        assert constraint_margin(ev(h=2.0, lf=-1.0), ControlInput(9, 9, 9), KAPPA) == 1.0

    def test_boundary(self):
        assert constraint_margin(ev(), ControlInput(), KAPPA) == 0.0

    def test_negative(self):
        assert constraint_margin(ev(h=-1.0), ControlInput(), KAPPA) == -1.0

    def test_includes_input_term(self):
        e = ev(lg=(1.0, 0.0, 2.0))
        assert constraint_margin(e, ControlInput(3.0, 0.0, -1.0), KAPPA) == 1.0


class TestFilterControl:
    def test_inactive_passthrough(self):
        u = ControlInput(1.0, 2.0, 3.0)
        out = filter_control(ev(h=5.0), u, KAPPA)
        assert out.u_star is u
        assert out.u_safe.as_array().tolist() == [0.0, 0.0, 0.0]
        assert not out.active and out.feasible

    def test_active_projection(self):
        out = filter_control(ev(h=-2.0, lg=(1.0, 0.0, 0.0)), ControlInput(), KAPPA)
        assert out.active and out.feasible
        assert out.u_safe.as_array() == pytest.approx([2.0, 0.0, 0.0])
        assert out.u_star.as_array() == pytest.approx([2.0, 0.0, 0.0])

    def test_degenerate_gradient_flagged(self):
        u = ControlInput(0.5, 0.0, 0.0)
        out = filter_control(ev(h=-1.0), u, KAPPA)
        assert out.active and not out.feasible
        assert out.u_star is u
        assert out.u_safe.as_array().tolist() == [0.0, 0.0, 0.0]

    def test_tightness_when_active(self):
        rng = np.random.default_rng(71)
        for _ in range(500):
            e = random_eval(rng)
            u = ControlInput.from_array(rng.uniform(-5, 5, size=3))
            out = filter_control(e, u, KAPPA)
            if out.active and out.feasible:
                residual = e.lf_h + float(e.lg_h @ out.u_star.as_array()) + KAPPA.gamma * e.h
                assert abs(residual) <= 1e-9

    def test_correction_parallel_to_gradient(self):
        rng = np.random.default_rng(73)
        for _ in range(500):
            e = random_eval(rng)
            out = filter_control(e, ControlInput.from_array(rng.uniform(-5, 5, 3)), KAPPA)
            if out.active and out.feasible:
                cross = np.cross(out.u_safe.as_array(), e.lg_h)
                denom = np.linalg.norm(out.u_safe.as_array()) * np.linalg.norm(e.lg_h)
                if denom > 0:
                    assert np.linalg.norm(cross) / denom < 1e-9

    def test_continuity_across_switch(self):
        # Sweep h so psi crosses zero; |u_safe| tends to 0 from the active side.
        lg = (1.0, -0.5, 2.0)
        norms = []
        for hval in np.linspace(-0.1, 0.0, 50):
            out = filter_control(ev(h=hval, lg=lg), ControlInput(), KAPPA)
            norms.append(np.linalg.norm(out.u_safe.as_array()))
        assert norms[0] > norms[-1]
        assert norms[-1] == pytest.approx(0.0, abs=1e-12)
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))

    def test_sum_decomposition_exact(self):
        rng = np.random.default_rng(79)
        for _ in range(200):
            e = random_eval(rng)
            u = ControlInput.from_array(rng.uniform(-5, 5, size=3))
            out = filter_control(e, u, KAPPA)
            assert np.array_equal(
                out.u_star.as_array(), u.as_array() + out.u_safe.as_array()
            )


class TestQPOracle:
    def test_interior_point(self):
        u = ControlInput(1.0, 0.0, 0.0)
        assert qp_reference_solve(ev(h=10.0, lg=(1, 0, 0)), u, KAPPA) is u

    def test_projection(self):
        out = qp_reference_solve(ev(h=-3.0, lg=(1.0, 0.0, 0.0)), ControlInput(), KAPPA)
        assert out.as_array() == pytest.approx([3.0, 0.0, 0.0])

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            qp_reference_solve(ev(h=-1.0), ControlInput(), KAPPA)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(83)
        for _ in range(1000):
            e = random_eval(rng)
            kappa = ClassKappa(rng.uniform(0.1, 5.0))
            u = ControlInput.from_array(rng.uniform(-5, 5, size=3))
            closed = filter_control(e, u, kappa).u_star.as_array()
            oracle = qp_reference_solve(e, u, kappa).as_array()
            assert np.linalg.norm(closed - oracle) <= 1e-9

    def test_minimal_norm_among_feasible(self):
        # Any feasible point is no closer to u_des than the returned one.
        rng = np.random.default_rng(89)
        for _ in range(200):
            e = random_eval(rng)
            u = ControlInput.from_array(rng.uniform(-5, 5, size=3))
            star = qp_reference_solve(e, u, KAPPA).as_array()
            b = -(e.lf_h + KAPPA.gamma * e.h)
            best = np.linalg.norm(star - u.as_array())
            for _ in range(20):
                cand = star + rng.normal(scale=0.5, size=3)
                if float(e.lg_h @ cand) >= b - 1e-12:
                    assert np.linalg.norm(cand - u.as_array()) >= best - 1e-9


class TestCompose:
    def test_single_matches_filter(self):
        rng = np.random.default_rng(97)
        for _ in range(100):
            e = random_eval(rng)
            u = ControlInput.from_array(rng.uniform(-5, 5, size=3))
            single = filter_control(e, u, KAPPA)
            composed = compose_obstacles([e], u, KAPPA)
            assert np.array_equal(single.u_star.as_array(), composed.u_star.as_array())
            assert composed.psi == single.psi

    def test_all_inactive(self):
        u = ControlInput(1.0, 0.0, 0.0)
        out = compose_obstacles([ev(h=3.0), ev(h=7.0)], u, KAPPA)
        assert out.u_star is u and not out.active
        assert out.active_index is None

    def test_min_margin_selected(self):
        e_bad = ev(h=-1.0, lg=(0.0, 0.0, 1.0))
        e_ok = ev(h=2.0, lg=(1.0, 0.0, 0.0))
        out = compose_obstacles([e_ok, e_bad], ControlInput(), KAPPA)
        assert out.active_index == 1
        assert out.u_safe.as_array() == pytest.approx([0.0, 0.0, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compose_obstacles([], ControlInput(), KAPPA)


def test_kappa_positive():
    with pytest.raises(ConfigError):
        ClassKappa(0.0)
    with pytest.raises(ConfigError):
        ClassKappa(-1.0)
