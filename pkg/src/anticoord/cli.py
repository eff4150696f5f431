"""Command-line entry point.

Examples::

    anticoord --algorithm canony --agents 16 --resources 4 --runs 128
    anticoord --preset table2 --runs 32 --format json --out table2.json
    anticoord --config run.json --seed 7      # flags override the file

Exit codes: 0 success, 2 invalid configuration, 3 infeasible experiment.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import ALGORITHMS
from .experiment import (DEFAULT_RUNS, EXPERT_SETS, PRESETS, ExperimentSpec,
                         InfeasibleError, emit, emit_series, preset_specs,
                         run_experiment, series_path)
from .game import GameConfig

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

DEFAULTS = {
    "algorithm": "canony",
    "agents": 16,
    "resources": 4,
    "contexts": None,
    "backoff": GameConfig.__dataclass_fields__["backoff_prob"].default,
    "collision_cost": -1.0,
    "discount": 0.99,
    "horizon": 10**6,
    "t_ind": 0,
    "runs": DEFAULT_RUNS,
    "seed": 0,
    "preset": None,
    "format": "csv",
    "out": None,
    "experts": "fair",
    "monitor_cost": False,
    "payoff_only": False,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="anticoord",
        description="Simulate repeated allocation games and write aggregated metrics.",
    )
    # every default is None so that values from --config can be told apart
    ap.add_argument("--config", type=Path, help="JSON file with any of the options below")
    ap.add_argument("--algorithm", choices=ALGORITHMS)
    ap.add_argument("--agents", type=int, help="N")
    ap.add_argument("--resources", type=int, help="R")
    ap.add_argument("--contexts", type=int, help="K (default ceil(N/R))")
    ap.add_argument("--backoff", type=float, help="back-off probability p")
    ap.add_argument("--collision-cost", type=float, help="zeta < 0")
    ap.add_argument("--discount", type=float, help="delta in (0, 1)")
    ap.add_argument("--horizon", type=int, help="T")
    ap.add_argument("--t-ind", type=int, help="indifference period")
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--preset", choices=PRESETS)
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--out", type=Path, help="output file (default stdout)")
    ap.add_argument("--experts", choices=EXPERT_SETS, help="expert set for exp4/exp4p")
    ap.add_argument("--monitor-cost", action="store_const", const=True,
                    help="charge the collision cost per monitoring action")
    ap.add_argument("--payoff-only", action="store_const", const=True,
                    help="stop simulating once the remaining discount mass is negligible")
    return ap


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if args.config is not None:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            opts[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def specs_from_options(opts: dict) -> list[ExperimentSpec]:
    if opts["preset"]:
        return preset_specs(opts["preset"], runs=int(opts["runs"]),
                            seed=int(opts["seed"]), horizon=int(opts["horizon"]))
    N, R = int(opts["agents"]), int(opts["resources"])
    if N < 1 or R < 1:
        raise ValueError("agents and resources must be positive")
    K = opts["contexts"]
    K = -(-N // R) if K is None else int(K)
    game = GameConfig(n_agents=N, n_resources=R, context_size=K,
                      collision_cost=float(opts["collision_cost"]),
                      discount=float(opts["discount"]),
                      backoff_prob=float(opts["backoff"]),
                      horizon=int(opts["horizon"]),
                      indifference_period=int(opts["t_ind"]),
                      seed=int(opts["seed"]))
    if opts["experts"] not in EXPERT_SETS:
        raise ValueError(f"experts must be one of {EXPERT_SETS}")
    return [ExperimentSpec(game, opts["algorithm"], runs=int(opts["runs"]),
                           monitor_cost_enabled=bool(opts["monitor_cost"]),
                           output=opts["format"], experts=opts["experts"],
                           payoff_only=bool(opts["payoff_only"]))]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        specs = specs_from_options(opts)
    except (ValueError, TypeError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    reports = []
    try:
        for spec in specs:
            reports.append(run_experiment(spec))
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    fmt = opts["format"]
    keep = any(s.keep_series for s in specs)
    if opts["out"] is None:
        sys.stdout.write(emit(reports, fmt, None, series=keep and fmt == "json"))
        return EXIT_OK
    try:
        emit(reports, fmt, opts["out"], series=keep and fmt == "json")
        if keep and fmt == "csv":
            for rep in reports:
                emit_series(rep, series_path(opts["out"], rep))
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
