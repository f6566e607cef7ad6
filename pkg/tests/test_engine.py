"""Episode runner tests: log structure, determinism, metrics, composition,
termination semantics and comparisons."""

import dataclasses
import logging
import math

import numpy as np
import pytest

from coneguard.barriers import Obstacle
from coneguard.dynamics import AircraftState, ControlInput
from coneguard.engine import (
    EpisodeMetrics,
    StepRecord,
    TrajectoryLog,
    compare,
    first_activation_time,
    run_episode,
    summarize,
)
from coneguard.errors import ConfigError, ConfigMismatch, DomainError
from coneguard.scenario import apply_override, config_from_tree, load_scenario, resolve_tree

from conftest import scenario_path


def build_config(**over):
    tree = resolve_tree({})
    for key, value in over.items():
        apply_override(tree, key.replace("__", "."), value)
    return config_from_tree(tree)


def descend_config(obstacles, kind="naive", dt=0.01, t_max=50.0):
    tree = resolve_tree({})
    apply_override(tree, "trajectory.start", [0.0, 0.0, 250.0])
    apply_override(tree, "obstacles", obstacles)
    apply_override(tree, "filter_kind", kind)
    apply_override(tree, "dt", dt)
    apply_override(tree, "t_max", t_max)
    return config_from_tree(tree)


class TestRunBasics:
    def test_record_count_and_spacing(self):
        config = build_config(dt=0.1, t_max=1.0, filter_kind="none")
        log = run_episode(config)
        assert len(log.records) == 11
        ts = [rec.t for rec in log.records]
        assert np.allclose(np.diff(ts), 0.1)
        assert not log.terminated_early

    def test_obstacle_free_unfiltered(self):
        config = build_config(filter_kind="none", t_max=30.0)
        log = run_episode(config)
        metrics = summarize(log, config)
        assert metrics.control_effort == 0.0
        assert metrics.filter_active_fraction == 0.0
        assert metrics.min_separation == math.inf
        assert not metrics.collision
        assert metrics.max_path_deviation < 0.5

    def test_unfiltered_collision_terminates(self, episode_cache):
        config, log = episode_cache("static", "none")
        metrics = summarize(log, config)
        assert metrics.collision
        assert log.terminated_early
        last = log.records[-1]
        assert min(last.separations) <= 100.0
        assert len(log.records) < int(config.t_max / config.dt) + 1

    def test_filtered_head_on_safe(self, episode_cache):
        config, log = episode_cache("head_on", "naive")
        metrics = summarize(log, config)
        assert not metrics.collision
        assert metrics.min_separation > 100.0
        assert not log.terminated_early

    def test_determinism(self):
        config = load_scenario(scenario_path("head_on"))
        log1, log2 = run_episode(config), run_episode(config)
        assert len(log1.records) == len(log2.records)
        for a, b in zip(log1.records, log2.records):
            assert a.t == b.t
            assert np.array_equal(a.state.as_array(), b.state.as_array())
            assert np.array_equal(a.u_star.as_array(), b.u_star.as_array())
            assert a.h == b.h and a.psi == b.psi and a.separations == b.separations

    def test_invalid_config_rejected(self):
        config = build_config(filter_kind="none")
        bad = dataclasses.replace(config, dt=-0.1)
        with pytest.raises(ConfigError):
            run_episode(bad)

    def test_domain_error_reports_step(self):
        # Perfectly symmetric head-on: the cone gradient collapses onto the
        # thrust channel, the filter can only brake, and the speed decays
        # through the guard. The error must carry the offending step.
        tree = resolve_tree({})
        apply_override(
            tree,
            "obstacles",
            [{"center": [600.0, 0.0, 0.0], "velocity": [0.0, 0.0, 0.0], "radius": 50.0}],
        )
        apply_override(tree, "t_max", 30.0)
        config = config_from_tree(tree)
        with pytest.raises(DomainError, match="step"):
            run_episode(config)


class TestDegenerateAndMultiObstacle:
    def test_comoving_obstacle_ignored(self):
        # Obstacle matching the aircraft velocity: degenerate relative motion,
        # no constraint, episode completes.
        config = build_config(
            obstacles=[{"center": [500.0, 0.0, 0.0], "velocity": [20.0, 0.0, 0.0],
                        "radius": 50.0}],
            t_max=20.0,
        )
        log = run_episode(config)
        assert not log.terminated_early
        for rec in log.records:
            assert rec.active_obstacle == -1
            assert math.isnan(rec.psi[0])
            assert abs(rec.h[0]) < 1e-6  # cone value collapses near zero

    def test_min_margin_obstacle_governs(self, episode_cache):
        # Add a second, irrelevant obstacle far behind; the governing index
        # must stay on the threatening one.
        config, _ = episode_cache("static", "naive")
        far = dataclasses.replace(
            config,
            obstacles=config.obstacles
            + [Obstacle([-5000.0, 0.0, 0.0], [0.0, 0.0, 0.0], 50.0)],
        )
        log = run_episode(far)
        assert not summarize(log, far).collision
        active = {rec.active_obstacle for rec in log.records if rec.active_obstacle >= 0}
        assert active == {0}

    def test_input_clamp_engages(self, caplog):
        config = load_scenario(
            scenario_path("static"), overrides=(("input_clamp", "[10.0, 1.0, 0.001]"),)
        )
        with caplog.at_level(logging.WARNING):
            log = run_episode(config)
        assert any("clamp" in rec.message for rec in caplog.records)
        assert max(abs(rec.u_star.pitch_rate) for rec in log.records) <= 0.001


class TestSummarize:
    def test_constant_correction_effort(self):
        # Handcrafted log: u_safe = (1,0,0) for 10 s at dt = 0.01 integrates
        # to exactly 10 by the trapezoidal rule.
        state = AircraftState(0, 0, 0, 0, 0, 0, 20.0)
        records = [
            StepRecord(
                t=k * 0.01,
                state=state,
                u_des=ControlInput(),
                u_safe=ControlInput(accel=1.0),
                u_star=ControlInput(accel=1.0),
                h=(),
                psi=(),
                active_obstacle=0,
                separations=(),
                feasible=True,
            )
            for k in range(1001)
        ]
        log = TrajectoryLog(records, n_obstacles=0, dt=0.01, terminated_early=False)
        config = build_config(filter_kind="none", t_max=10.0)
        metrics = summarize(log, config)
        assert metrics.control_effort == pytest.approx(10.0, abs=1e-12)
        assert metrics.filter_active_fraction == 1.0

    def test_min_separation_definition(self, episode_cache):
        config, log = episode_cache("head_on", "naive")
        metrics = summarize(log, config)
        expect = min(min(rec.separations) for rec in log.records)
        assert metrics.min_separation == expect
        assert metrics.collision == (expect <= 100.0)

    def test_empty_log_rejected(self):
        config = build_config(filter_kind="none")
        with pytest.raises(ValueError):
            summarize(TrajectoryLog([], 0, 0.01, False), config)


class TestSafetyInvariants:
    def test_barrier_stays_above_tolerance(self, episode_cache):
        # Filtered run starting safely outside the cone: h never drops below
        # the discretization tolerance, and the worst negative excursion
        # (at most) halves when the step is halved.
        tol_h = 1e-2
        excursions = {}
        for dt in (0.01, 0.005):
            config, log = episode_cache("head_on", "naive", dt)
            hs = np.array([rec.h[0] for rec in log.records])
            hs = hs[~np.isnan(hs)]
            assert hs[0] > 0.0
            assert hs.min() >= -tol_h
            excursions[dt] = max(0.0, -float(hs.min()))
        assert excursions[0.005] <= 0.6 * excursions[0.01]

    def test_switching_minimality(self, episode_cache):
        config, log = episode_cache("static", "naive")
        for rec in log.records:
            finite = [p for p in rec.psi if not math.isnan(p)]
            if rec.active_obstacle < 0 and finite and min(finite) >= 0.0:
                assert rec.u_safe.as_array().tolist() == [0.0, 0.0, 0.0]
            if rec.active_obstacle >= 0:
                assert rec.lg_active is not None
                cross = np.cross(rec.u_safe.as_array(), rec.lg_active)
                denom = np.linalg.norm(rec.u_safe.as_array()) * np.linalg.norm(rec.lg_active)
                if denom > 0:
                    assert np.linalg.norm(cross) / denom < 1e-9


class TestCompare:
    def test_self_comparison_zero_deltas(self):
        config = load_scenario(scenario_path("static"))
        report = compare([config, dataclasses.replace(config, label="again")])
        a, b = report.entries
        assert a.metrics == b.metrics
        assert b.max_position_diff_vs_first == 0.0
        assert a.first_activation == b.first_activation

    def test_requires_two(self):
        config = load_scenario(scenario_path("static"))
        with pytest.raises(ConfigMismatch):
            compare([config])

    def test_dt_mismatch(self):
        config = load_scenario(scenario_path("static"))
        with pytest.raises(ConfigMismatch, match="dt"):
            compare([config, dataclasses.replace(config, dt=0.02)])

    def test_obstacle_mismatch(self):
        config = load_scenario(scenario_path("static"))
        other = load_scenario(scenario_path("head_on"))
        with pytest.raises(ConfigMismatch, match="obstacles"):
            compare([config, other])

    def test_filter_kind_comparison(self):
        config = load_scenario(scenario_path("static"))
        report = compare([config.with_filter("naive"), config.with_filter("baseline")])
        naive, baseline = report.entries
        assert naive.label == "naive" and baseline.label == "baseline"
        assert not naive.metrics.collision and not baseline.metrics.collision
        assert naive.first_activation < baseline.first_activation
        assert naive.metrics.control_effort < baseline.metrics.control_effort

    def test_label_uniquified(self):
        config = load_scenario(scenario_path("static"))
        report = compare([config, dataclasses.replace(config)])
        labels = [e.label for e in report.entries]
        assert len(set(labels)) == 2


class TestFirstActivation:
    def test_never_active(self):
        config = build_config(filter_kind="none", t_max=5.0)
        log = run_episode(config)
        assert math.isnan(first_activation_time(log))

    def test_active_from_start(self, episode_cache):
        _, log = episode_cache("static", "naive")
        assert first_activation_time(log) == 0.0
