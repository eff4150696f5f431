"""Experiment specs, table/figure presets, batch execution and output files.

Summary files hold one row per (algorithm, grid point) with the columns in
:data:`SUMMARY_COLUMNS`. Per-step series go to separate files with
:data:`SERIES_COLUMNS`. Floats are written with ``repr`` so a file parses
back to exactly the numbers that were written; NaN marks a missing value
(for instance a convergence goal that some run never reached).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bandits
from .batch import payoff_horizon, simulate, simulate_reference
from .convention import OPTIMAL_BACKOFF
from .engine import ALGORITHMS
from .game import GameConfig
from .metrics import MetricsReport

SUMMARY_COLUMNS = (
    "algorithm", "R", "K", "N", "p_backoff", "delta", "t_ind", "runs",
    "convergence_step_mean", "convergence_step_std", "jain_mean",
    "payoff_mean", "payoff_std", "utilization_final",
)
SERIES_COLUMNS = ("step", "utilization_mean", "collisions_mean")

BACKOFF_GRID = (0.1, 0.25, OPTIMAL_BACKOFF, 0.75, 0.9)
TABLE_R = (2, 4, 8, 16)
FIG_GRID = (2, 4, 8, 16, 32, 64)
FIG_FIXED = 16
DEFAULT_RUNS = 128
UNRESTRICTED_LIMIT = 64
EXPERT_SETS = ("fair", "unrestricted")
PRESETS = ("table1", "table2", "table3", "fig1", "fig2", "fig3")


class InfeasibleError(ValueError):
    """The requested experiment cannot be run at this scale."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One algorithm on one game configuration.

    ``payoff_only`` truncates the simulated horizon once the remaining
    discount mass is negligible (see :func:`anticoord.batch.payoff_horizon`);
    bandit tuning still assumes the full horizon.
    """

    game: GameConfig
    algorithm: str = "canony"
    runs: int = DEFAULT_RUNS
    monitor_cost_enabled: bool = False
    output: str = "csv"
    table_preset: str | None = None
    payoff_only: bool = False
    experts: str = "fair"
    keep_series: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.output not in ("csv", "json"):
            raise ValueError("output must be csv or json")
        if self.table_preset is not None and self.table_preset not in PRESETS:
            raise ValueError(f"unknown preset {self.table_preset!r}")
        if self.experts not in EXPERT_SETS:
            raise ValueError(f"experts must be one of {EXPERT_SETS}")

    @property
    def effective_algorithm(self) -> str:
        if self.algorithm == "canony" and self.monitor_cost_enabled:
            return "canony-star"
        return self.algorithm


def _unrestricted_experts(R: int, K: int) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(R + 1)] * K, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def check_feasible(spec: ExperimentSpec) -> None:
    if spec.experts == "unrestricted":
        if spec.algorithm not in (bandits.EXP4, bandits.EXP4P):
            raise ValueError("unrestricted experts only apply to exp4/exp4p")
        if spec.game.n_agents >= UNRESTRICTED_LIMIT:
            raise InfeasibleError(
                f"{spec.algorithm} with unrestricted experts is infeasible for "
                f"N >= {UNRESTRICTED_LIMIT} ((R+1)^K experts per agent)"
            )


def run_experiment(spec: ExperimentSpec) -> MetricsReport:
    """Run ``spec.runs`` seeded instances (seeds ``seed + i``) and aggregate."""
    check_feasible(spec)
    cfg = spec.game
    steps = payoff_horizon(cfg) if spec.payoff_only else None
    alg = spec.effective_algorithm
    if spec.experts == "unrestricted":
        return simulate_reference(cfg, alg, spec.runs, steps=steps,
                                  experts=_unrestricted_experts(cfg.n_resources,
                                                                cfg.context_size))
    return simulate(cfg, alg, spec.runs, steps=steps)


def _square(R, K=None, **kw) -> GameConfig:
    K = R if K is None else K
    return GameConfig(n_agents=R * K, n_resources=R, context_size=K, **kw)


def preset_specs(name: str, runs: int = DEFAULT_RUNS, seed: int = 0,
                 horizon: int = 10**6, algorithms=None) -> list[ExperimentSpec]:
    """Grid of specs reproducing one table or figure.

    Tables use ``R = K`` and ``N = R K`` with ``delta = 0.99``. ``fig2``
    grows ``R`` at ``K = 16`` and ``fig3`` grows ``K`` at ``R = 16``, both
    capped at ``N = 1024``.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    common = dict(runs=runs, table_preset=name)
    specs = []

    def pick(default):
        return tuple(algorithms) if algorithms else default

    if name == "table1":
        for R in TABLE_R:
            for p in BACKOFF_GRID:
                g = _square(R, backoff_prob=p, horizon=horizon, seed=seed)
                specs.append(ExperimentSpec(g, "canony", payoff_only=True, **common))
    elif name == "table2":
        for alg in pick(("canony",) + bandits.VARIANTS):
            for R in TABLE_R:
                specs.append(ExperimentSpec(_square(R, horizon=horizon, seed=seed), alg,
                                            **common))
    elif name == "table3":
        for t_ind in (False, True):
            for alg in pick(("canony", "canony-star") + bandits.VARIANTS):
                for R in TABLE_R:
                    ti = R**4 if t_ind else 0
                    g = _square(R, horizon=horizon, seed=seed, indifference_period=ti)
                    specs.append(ExperimentSpec(g, alg, payoff_only=True, **common))
    elif name == "fig1":
        for alg in pick(("canony",) + bandits.VARIANTS):
            specs.append(ExperimentSpec(_square(4, horizon=horizon, seed=seed), alg,
                                        keep_series=True, **common))
    else:
        for alg in pick(("canony", bandits.EXP3)):
            for x in FIG_GRID:
                R, K = (x, FIG_FIXED) if name == "fig2" else (FIG_FIXED, x)
                specs.append(ExperimentSpec(_square(R, K, horizon=horizon, seed=seed),
                                            alg, **common))
    return specs


# ---------------------------------------------------------------- output

def summary_row(report: MetricsReport) -> dict:
    return {
        "algorithm": report.algorithm,
        "R": report.R,
        "K": report.K,
        "N": report.N,
        "p_backoff": report.p_backoff,
        "delta": report.delta,
        "t_ind": report.t_ind,
        "runs": report.runs_aggregated,
        "convergence_step_mean": report.convergence_step,
        "convergence_step_std": report.convergence_step_std,
        "jain_mean": report.jain,
        "payoff_mean": report.payoff_mean,
        "payoff_std": report.payoff_std,
        "utilization_final": report.utilization_final,
    }


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def format_summary(reports, fmt: str = "csv", series: bool = False) -> str:
    reports = [reports] if isinstance(reports, MetricsReport) else list(reports)
    rows = [summary_row(r) for r in reports]
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")
        return buf.getvalue()
    if fmt != "json":
        raise ValueError("format must be csv or json")
    out = []
    for rep, row in zip(reports, rows):
        d = {c: _json_value(row[c]) for c in SUMMARY_COLUMNS}
        if series:
            d["series"] = {
                "utilization_mean": [_json_value(x) for x in rep.utilization_series],
                "collisions_mean": [_json_value(x) for x in rep.collision_series],
            }
        out.append(d)
    return json.dumps({"rows": out}, indent=1, sort_keys=False) + "\n"


def format_series(report: MetricsReport) -> str:
    buf = io.StringIO()
    buf.write(",".join(SERIES_COLUMNS) + "\n")
    for t, (u, c) in enumerate(zip(report.utilization_series, report.collision_series)):
        buf.write(f"{t},{_fmt(float(u))},{_fmt(float(c))}\n")
    return buf.getvalue()


def emit(report, fmt: str = "csv", path=None, series: bool = False) -> str:
    """Write one or several reports as a summary file and return the text.

    ``path=None`` only returns the text. Raises ``OSError`` when the path
    cannot be written.
    """
    text = format_summary(report, fmt, series)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def emit_series(report: MetricsReport, path) -> str:
    text = format_series(report)
    Path(path).write_text(text, encoding="utf-8")
    return text


def series_path(path, report: MetricsReport) -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}_{report.algorithm}_R{report.R}_K{report.K}_series.csv")


def _parse_value(col, text):
    if col == "algorithm":
        return text
    if col in ("R", "K", "N", "t_ind", "runs"):
        return int(text)
    return float(text)


def parse_summary(text: str, fmt: str = "csv") -> list[dict]:
    """Inverse of :func:`format_summary` for the summary columns."""
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}")
        return [{c: _parse_value(c, row[c]) for c in SUMMARY_COLUMNS} for row in reader]
    rows = json.loads(text)["rows"]
    out = []
    for row in rows:
        out.append({c: (math.nan if row[c] is None else _parse_value(c, row[c]))
                    for c in SUMMARY_COLUMNS})
    return out


def parse_series(text: str) -> dict:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SERIES_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    rows = list(reader)
    return {
        "step": np.array([int(r["step"]) for r in rows], dtype=np.int64),
        "utilization_mean": np.array([float(r["utilization_mean"]) for r in rows]),
        "collisions_mean": np.array([float(r["collisions_mean"]) for r in rows]),
    }


# ---------------------------------------------------------------- sweeps

@dataclass
class BackoffTable:
    """Mean payoff per back-off probability (rows) and R (columns)."""

    backoffs: tuple
    resources: tuple
    payoff: np.ndarray
    reports: list = field(default_factory=list, repr=False)

    def column(self, R) -> np.ndarray:
        return self.payoff[:, self.resources.index(R)]


def sweep_backoff(preset: str = "table1", runs: int = DEFAULT_RUNS, seed: int = 0,
                  resources=TABLE_R, backoffs=BACKOFF_GRID) -> BackoffTable:
    """Mean discounted payoff of the convention for each ``(p, R)`` pair."""
    if preset != "table1":
        raise ValueError("sweep_backoff reproduces the table1 preset only")
    table = np.zeros((len(backoffs), len(resources)))
    reports = []
    for j, R in enumerate(resources):
        for i, p in enumerate(backoffs):
            spec = ExperimentSpec(_square(R, backoff_prob=p, seed=seed), "canony",
                                  runs=runs, payoff_only=True, table_preset=preset)
            rep = run_experiment(spec)
            table[i, j] = rep.payoff_mean
            reports.append(rep)
    return BackoffTable(tuple(backoffs), tuple(resources), table, reports)


def with_overrides(spec: ExperimentSpec, **game) -> ExperimentSpec:
    return replace(spec, game=replace(spec.game, **game))
