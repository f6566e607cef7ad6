"""Report outputs: CSV logs, metric summaries and rendered figures.

All delimited output uses fixed column orders and 9-significant-digit floats,
so repeated runs of the same scenario produce byte-identical files. Figures
are rendered with the Agg backend straight to PNG next to the CSVs.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import ComparisonReport, EpisodeMetrics, TrajectoryLog
from .scenario import ScenarioConfig

STATE_COLUMNS = ("x", "y", "z", "roll", "pitch", "yaw", "speed")
INPUT_COLUMNS = ("accel", "roll_rate", "pitch_rate")
METRIC_FIELDS = (
    "min_separation",
    "min_h",
    "collision",
    "filter_active_fraction",
    "control_effort",
    "max_path_deviation",
    "infeasible_steps",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def trajectory_header(n_obstacles: int) -> list[str]:
    cols = ["t"]
    cols += list(STATE_COLUMNS)
    cols += [f"u_des_{c}" for c in INPUT_COLUMNS]
    cols += [f"u_safe_{c}" for c in INPUT_COLUMNS]
    cols += [f"u_star_{c}" for c in INPUT_COLUMNS]
    cols += [f"h{i}" for i in range(n_obstacles)]
    cols += [f"psi{i}" for i in range(n_obstacles)]
    cols += ["active_obstacle"]
    cols += [f"sep{i}" for i in range(n_obstacles)]
    cols += ["feasible"]
    return cols


def write_trajectory_csv(log: TrajectoryLog, path: str | Path) -> Path:
    """One row per control instant, columns per trajectory_header."""
    path = Path(path)
    lines = [",".join(trajectory_header(log.n_obstacles))]
    for rec in log.records:
        row = [_fmt(rec.t)]
        row += [_fmt(v) for v in rec.state.as_array()]
        row += [_fmt(v) for v in rec.u_des.as_array()]
        row += [_fmt(v) for v in rec.u_safe.as_array()]
        row += [_fmt(v) for v in rec.u_star.as_array()]
        row += [_fmt(v) for v in rec.h]
        row += [_fmt(v) for v in rec.psi]
        row.append(str(rec.active_obstacle))
        row += [_fmt(v) for v in rec.separations]
        row.append("1" if rec.feasible else "0")
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def format_metrics(metrics: EpisodeMetrics) -> str:
    lines = [f"{name}: {_fmt(getattr(metrics, name))}" for name in METRIC_FIELDS]
    return "\n".join(lines) + "\n"


def write_metrics_text(metrics: EpisodeMetrics, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_metrics(metrics))
    return path


def one_line_summary(metrics: EpisodeMetrics) -> str:
    return (
        f"min_separation={metrics.min_separation:.9g} m "
        f"effort={metrics.control_effort:.9g} "
        f"active_fraction={metrics.filter_active_fraction:.9g} "
        f"collision={'yes' if metrics.collision else 'no'}"
    )


def write_comparison_csv(report: ComparisonReport, path: str | Path) -> Path:
    """Metric per row, one column per config, plus a max-minus-min delta column."""
    path = Path(path)
    labels = [e.label for e in report.entries]
    lines = [",".join(["metric"] + labels + ["delta"])]
    rows: list[tuple[str, list[float]]] = []
    for name in METRIC_FIELDS:
        rows.append((name, [float(getattr(e.metrics, name)) for e in report.entries]))
    rows.append(("first_activation", [e.first_activation for e in report.entries]))
    rows.append(
        ("max_position_diff_vs_first", [e.max_position_diff_vs_first for e in report.entries])
    )
    for name, values in rows:
        finite = [v for v in values if not math.isnan(v)]
        delta = (max(finite) - min(finite)) if finite else math.nan
        lines.append(",".join([name] + [_fmt(v) for v in values] + [_fmt(delta)]))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sweep_csv(keys: list[str], rows: list[dict], path: str | Path) -> Path:
    """One row per grid cell: swept values then the episode metrics."""
    path = Path(path)
    header = keys + list(METRIC_FIELDS)
    lines = [",".join(header)]
    for row in rows:
        values = [_fmt(row[k]) for k in keys]
        metrics: EpisodeMetrics = row["metrics"]
        values += [_fmt(getattr(metrics, name)) for name in METRIC_FIELDS]
        lines.append(",".join(values))
    path.write_text("\n".join(lines) + "\n")
    return path


def _obstacle_positions(config: ScenarioConfig, times: np.ndarray) -> list[np.ndarray]:
    return [
        np.array([ob.at_time(t).center for t in times]) for ob in config.obstacles
    ]


def render_episode_figures(
    log: TrajectoryLog, config: ScenarioConfig, out_dir: str | Path, stem: str = ""
) -> list[Path]:
    """Render path, barrier and control figures for one episode."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = f"{stem}_" if stem else ""
    times = np.array([rec.t for rec in log.records])
    states = np.array([rec.state.as_array() for rec in log.records])
    refs = np.array([config.trajectory.sample(t).position for t in times])
    paths: list[Path] = []

    fig, (ax_top, ax_side) = plt.subplots(2, 1, figsize=(8, 8))
    ax_top.plot(refs[:, 0], refs[:, 1], "k--", lw=0.8, label="reference")
    ax_top.plot(states[:, 0], states[:, 1], "b-", label="aircraft")
    ax_side.plot(refs[:, 0], refs[:, 2], "k--", lw=0.8, label="reference")
    ax_side.plot(states[:, 0], states[:, 2], "b-", label="aircraft")
    for i, track_pts in enumerate(_obstacle_positions(config, times)):
        r = config.geometry_for(config.obstacles[i]).r
        ax_top.plot(track_pts[:, 0], track_pts[:, 1], "r:", lw=0.8)
        ax_side.plot(track_pts[:, 0], track_pts[:, 2], "r:", lw=0.8)
        # Collision circle at the instant of closest approach.
        seps = np.array([rec.separations[i] for rec in log.records])
        k = int(np.argmin(seps))
        cx, cy, cz = track_pts[k]
        angle = np.linspace(0, 2 * np.pi, 120)
        ax_top.plot(cx + r * np.cos(angle), cy + r * np.sin(angle), "r-", lw=1.0)
        ax_side.plot(cx + r * np.cos(angle), cz + r * np.sin(angle), "r-", lw=1.0)
    ax_top.set_xlabel("x [m]")
    ax_top.set_ylabel("y [m]")
    ax_top.set_title("top view")
    ax_top.axis("equal")
    ax_top.legend(loc="best", fontsize=8)
    ax_side.set_xlabel("x [m]")
    ax_side.set_ylabel("z [m] (down positive)")
    ax_side.set_title("side view")
    ax_side.invert_yaxis()
    ax_side.axis("equal")
    fig.tight_layout()
    p = out_dir / f"{prefix}path.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for i in range(log.n_obstacles):
        axes[0].plot(times, [rec.h[i] for rec in log.records], label=f"obstacle {i}")
        axes[1].plot(times, [rec.psi[i] for rec in log.records], label=f"obstacle {i}")
        axes[2].plot(times, [rec.separations[i] for rec in log.records], label=f"obstacle {i}")
        axes[2].axhline(config.geometry_for(config.obstacles[i]).r, color="r", ls="--", lw=0.8)
    axes[0].axhline(0.0, color="k", lw=0.6)
    axes[0].set_ylabel("barrier h")
    axes[1].axhline(0.0, color="k", lw=0.6)
    axes[1].set_ylabel("margin psi")
    axes[2].set_ylabel("separation [m]")
    axes[2].set_xlabel("t [s]")
    for ax in axes:
        if log.n_obstacles:
            ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    p = out_dir / f"{prefix}barrier.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for ax, name, label in zip(
        axes, INPUT_COLUMNS, ("accel [m/s^2]", "roll rate [rad/s]", "pitch rate [rad/s]")
    ):
        idx = INPUT_COLUMNS.index(name)
        ax.plot(times, [rec.u_des.as_array()[idx] for rec in log.records], "k--", label="nominal")
        ax.plot(times, [rec.u_star.as_array()[idx] for rec in log.records], "b-", label="filtered")
        ax.set_ylabel(label)
        ax.legend(loc="best", fontsize=8)
    axes[2].set_xlabel("t [s]")
    fig.tight_layout()
    p = out_dir / f"{prefix}controls.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths


def render_comparison_figures(
    report: ComparisonReport, configs: list[ScenarioConfig], out_dir: str | Path
) -> list[Path]:
    """Overlay the compared trajectories and barrier traces."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, (ax_side, ax_h) = plt.subplots(2, 1, figsize=(8, 8))
    for entry, log in zip(report.entries, report.logs):
        states = np.array([rec.state.as_array() for rec in log.records])
        times = np.array([rec.t for rec in log.records])
        ax_side.plot(states[:, 0], states[:, 2], label=entry.label)
        if log.n_obstacles:
            ax_h.plot(times, [rec.h[0] for rec in log.records], label=entry.label)
    cfg = configs[0]
    times = np.array([rec.t for rec in report.logs[0].records])
    for i, track_pts in enumerate(_obstacle_positions(cfg, times)):
        r = cfg.geometry_for(cfg.obstacles[i]).r
        seps = np.array([rec.separations[i] for rec in report.logs[0].records])
        k = int(np.argmin(seps))
        cx, _, cz = track_pts[k]
        angle = np.linspace(0, 2 * np.pi, 120)
        ax_side.plot(cx + r * np.cos(angle), cz + r * np.sin(angle), "r-", lw=1.0)
    ax_side.set_xlabel("x [m]")
    ax_side.set_ylabel("z [m] (down positive)")
    ax_side.invert_yaxis()
    ax_side.axis("equal")
    ax_side.legend(loc="best", fontsize=8)
    ax_h.axhline(0.0, color="k", lw=0.6)
    ax_h.set_xlabel("t [s]")
    ax_h.set_ylabel("barrier h (obstacle 0)")
    ax_h.legend(loc="best", fontsize=8)
    fig.tight_layout()
    p = out_dir / "comparison.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return [p]
