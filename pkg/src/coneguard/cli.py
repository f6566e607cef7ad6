"""Command-line front end: run episodes, comparisons and sweeps from scenario files.

Exit codes: 0 success (run: collision-free), 2 collision (run only), 1 any
config or runtime error. All outputs are pure functions of the scenario files
and overrides, so repeated invocations write byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import sys
from pathlib import Path

import yaml

from . import report
from .engine import compare, run_episode, summarize
from .errors import ConeguardError, ConfigError, ConfigMismatch
from .scenario import (
    FILTER_KINDS,
    apply_override,
    config_from_tree,
    parse_scalar,
    tree_from_file,
    violations,
)


def _add_common(parser: argparse.ArgumentParser, multi_scenario: bool = False) -> None:
    parser.add_argument(
        "--scenario",
        action="append" if multi_scenario else None,
        required=True,
        help="scenario YAML file" + (" (repeatable)" if multi_scenario else ""),
    )
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-key config override, e.g. kappa.gamma=2 (repeatable)",
    )
    parser.add_argument("--dt", type=float, default=None, help="shorthand for dt override")
    parser.add_argument("--tmax", type=float, default=None, help="shorthand for t_max override")
    parser.add_argument(
        "--filter",
        choices=FILTER_KINDS,
        default=None,
        help="shorthand for filter_kind override",
    )
    parser.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _split_overrides(args) -> list[tuple[str, str]]:
    pairs = []
    for item in args.override:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form KEY=VALUE")
        key, _, value = item.partition("=")
        pairs.append((key.strip(), value.strip()))
    if args.dt is not None:
        pairs.append(("dt", str(args.dt)))
    if args.tmax is not None:
        pairs.append(("t_max", str(args.tmax)))
    if getattr(args, "filter", None) is not None:
        pairs.append(("filter_kind", args.filter))
    return pairs


def _load_tree(path: str, overrides) -> dict:
    tree = tree_from_file(path)
    for key, value in overrides:
        apply_override(tree, key, value)
    return tree


def cmd_run(args) -> int:
    tree = _load_tree(args.scenario, _split_overrides(args))
    config = config_from_tree(tree, label=Path(args.scenario).stem)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log = run_episode(config)
    metrics = summarize(log, config)
    report.write_trajectory_csv(log, out_dir / "trajectory.csv")
    report.write_metrics_text(metrics, out_dir / "metrics.txt")
    if not args.no_plots:
        report.render_episode_figures(log, config, out_dir)
    print(report.one_line_summary(metrics))
    return 2 if metrics.collision else 0


def cmd_compare(args) -> int:
    overrides = _split_overrides(args)
    scenarios: list[str] = args.scenario
    kinds = [k.strip() for k in args.filters.split(",")] if args.filters else []
    for kind in kinds:
        if kind not in FILTER_KINDS:
            raise ConfigError(f"--filters entry {kind!r} not one of {FILTER_KINDS}")
    configs = []
    if len(scenarios) == 1 and kinds:
        base = _load_tree(scenarios[0], overrides)
        for kind in kinds:
            config = config_from_tree(base, label=kind)
            configs.append(config.with_filter(kind))
    elif len(scenarios) >= 2 and not kinds:
        for path in scenarios:
            tree = _load_tree(path, overrides)
            configs.append(config_from_tree(tree, label=Path(path).stem))
    else:
        raise ConfigError(
            "compare needs either two or more --scenario files, "
            "or exactly one --scenario with --filters kind1,kind2,..."
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = compare(configs)
    for entry, log in zip(result.entries, result.logs):
        report.write_trajectory_csv(log, out_dir / f"trajectory_{entry.label}.csv")
    report.write_comparison_csv(result, out_dir / "comparison.csv")
    if not args.no_plots:
        report.render_comparison_figures(result, configs, out_dir)
    for entry in result.entries:
        print(f"{entry.label}: {report.one_line_summary(entry.metrics)}")
    return 0


def cmd_sweep(args) -> int:
    overrides = _split_overrides(args)
    specs: list[tuple[str, list]] = []
    for item in args.sweep:
        if "=" not in item:
            raise ConfigError(f"sweep spec {item!r} is not of the form KEY=V1,V2,...")
        key, _, values_text = item.partition("=")
        values = [parse_scalar(v) for v in values_text.split(",") if v.strip() != ""]
        if not values:
            raise ConfigError(f"sweep spec {item!r} has an empty value list")
        specs.append((key.strip(), values))
    if not 1 <= len(specs) <= 2:
        raise ConfigError("sweep takes one or two --sweep KEY=V1,V2,... specs")

    base = _load_tree(args.scenario, overrides)
    keys = [k for k, _ in specs]
    rows = []
    # Grid cells in lexicographic order over the value lists as given.
    for combo in itertools.product(*(vals for _, vals in specs)):
        tree = copy.deepcopy(base)
        for key, value in zip(keys, combo):
            apply_override(tree, key, value)
        config = config_from_tree(tree, label="sweep")
        log = run_episode(config)
        row = dict(zip(keys, combo))
        row["metrics"] = summarize(log, config)
        rows.append(row)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_sweep_csv(keys, rows, out_dir / "sweep.csv")
    print(f"swept {len(rows)} cell(s) over {keys}; results in {out_dir / 'sweep.csv'}")
    return 0


def cmd_validate(args) -> int:
    tree = _load_tree(args.scenario, _split_overrides(args))
    problems = violations(tree)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    print(yaml.safe_dump(tree, sort_keys=False, default_flow_style=None).rstrip())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coneguard",
        description="Collision-cone barrier safety filtering for a fixed-wing aircraft model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one episode, write trajectory.csv + metrics.txt")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run several configs on the same scenario geometry")
    _add_common(p_cmp, multi_scenario=True)
    p_cmp.add_argument(
        "--filters",
        default="",
        help="comma-separated filter kinds applied to a single --scenario",
    )
    p_cmp.set_defaults(func=cmd_compare)

    p_sweep = sub.add_parser("sweep", help="grid of episodes over one or two config keys")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--sweep",
        action="append",
        default=[],
        metavar="KEY=V1,V2,...",
        help="swept config key with value list (repeatable, max twice)",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="schema/invariant check; echo the resolved config")
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigMismatch as e:
        print(f"error: config mismatch: {e}", file=sys.stderr)
        return 1
    except ConeguardError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
