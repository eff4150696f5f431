"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a one-line verdict; the lines are printed in the pytest
terminal summary and when this file is run as a script::

    python3 tests/test_acceptance.py
"""
from __future__ import annotations

import functools
import math
import sys

import numpy as np
import pytest

from anticoord import theory as th
from anticoord.batch import payoff_horizon, simulate, simulate_reference
from anticoord.cli import main as cli_main
from anticoord.convention import OPTIMAL_BACKOFF
from anticoord.experiment import BACKOFF_GRID
from anticoord.game import GameConfig

RUNS = 128
# R = K = 16 bandit payoff runs cost ~10 s each for the four variants together;
# per-run spread is tiny next to the margin, so fewer runs suffice there
BANDIT_PAYOFF_RUNS = 16
BANDITS = ("exp3", "cexp3", "exp4", "exp4p")

VERDICTS: dict[int, str] = {}
REPORTS: list = []


def verdict(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    VERDICTS[n] = line
    print(line)
    assert ok, line


def square(R, K=None, **kw) -> GameConfig:
    K = R if K is None else K
    return GameConfig(n_agents=R * K, n_resources=R, context_size=K, **kw)


@functools.lru_cache(maxsize=None)
def full_run(alg, R, K=None, runs=RUNS, p=OPTIMAL_BACKOFF):
    """Full 10^6-step horizon (fairness, convergence)."""
    rep = simulate(square(R, K, backoff_prob=p), alg, runs)
    REPORTS.append(rep)
    return rep


@functools.lru_cache(maxsize=None)
def payoff_run(alg, R, t_ind=0, runs=RUNS, p=OPTIMAL_BACKOFF):
    cfg = square(R, backoff_prob=p, indifference_period=t_ind)
    rep = simulate(cfg, alg, runs, steps=payoff_horizon(cfg))
    REPORTS.append(rep)
    return rep


def test_criterion_01_fairness():
    parts, ok = [], True
    for R in (2, 4):
        c = full_run("canony", R).jain
        e = full_run("exp3", R).jain
        ok &= abs(c - 1.0) <= 1e-3 and abs(e - 1.0 / R) <= 0.05
        parts.append(f"R={R}: canony {c:.4f}, exp3 {e:.4f} (target {1 / R:.4f})")
    verdict(1, "Jain index (table2)", ok, "; ".join(parts))


def test_criterion_02_convergence_gap():
    c = full_run("canony", 4)
    e = full_run("exp3", 4)
    full = c.converged_fraction == 1.0 and c.utilization_final == 1.0
    # collisions after convergence
    after = max(c.collision_series[max(v for v in c.per_run_convergence):].max(), 0.0)
    e_lower = e.censored_mean()
    ok = full and after == 0.0 and 100 * c.convergence_step <= e_lower
    verdict(2, "convergence gap (fig1, R=4 N=16)", ok,
            f"canony full convergence at {c.convergence_step:.1f} steps "
            f"(all {c.runs_aggregated} runs), exp3 90% goal reached in "
            f"{e.converged_fraction:.0%} of runs, censored mean >= {e_lower:.0f}, "
            f"ratio >= {e_lower / c.convergence_step:.0f}")


def test_criterion_03_backoff_ordering():
    tab = {(p, R): payoff_run("canony", R, p=p).payoff_mean
           for R in (2, 4, 8, 16) for p in BACKOFF_GRID}
    ok = True
    parts = []
    for R in (8, 16):
        col = [tab[p, R] for p in BACKOFF_GRID]
        worst = col[0] < min(col[1:])
        top = [tab[p, R] for p in BACKOFF_GRID[2:]]
        spread = max(abs(a - b) / max(abs(a), abs(b)) for a in top for b in top)
        ok &= worst and spread <= 0.20
        parts.append(f"R={R}: p=0.1 worst={worst}, spread over p>=p* {spread:.0%} "
                     f"({', '.join(f'{v:.1f}' for v in col)})")
    signs = all(tab[p, 2] > 0 for p in BACKOFF_GRID) and all(
        tab[p, R] < 0 for p in BACKOFF_GRID for R in (8, 16))
    ok &= signs
    parts.append(f"signs (+ at R=2, - at R>=8) {'hold' if signs else 'violated'}")
    verdict(3, "back-off sweep (table1)", ok, "; ".join(parts))


def test_criterion_04_indifference_period():
    pays = [payoff_run("canony", R, t_ind=R**4).payoff_mean for R in (2, 4, 8, 16)]
    growing = all(a < b for a, b in zip(pays, pays[1:])) and pays[0] > 0
    R = 16
    t_ind = R**4
    # "strongly negative": losing at least 0.1 per own-context slot of the indifference period
    threshold = -0.1 * t_ind / R
    band = {a: payoff_run(a, R, t_ind=t_ind, runs=BANDIT_PAYOFF_RUNS).payoff_mean
            for a in BANDITS}
    neg = all(v <= threshold for v in band.values())
    below = all(v < pays[-1] for v in band.values())
    ok = growing and neg and below
    verdict(4, "indifference period T_ind = RNK (table3)", ok,
            f"canony {', '.join(f'{v:.1f}' for v in pays)} over R=K=2..16; at R=K=16 "
            + ", ".join(f"{a} {v:.0f}" for a, v in band.items())
            + f" (threshold {threshold:.0f}, {BANDIT_PAYOFF_RUNS} runs)")


def test_criterion_05_hitting_lemma():
    worst_gap, worst_eq = np.inf, 0.0
    for p in BACKOFF_GRID:
        bound = 2 * (1 - p) / (2 - p)
        for n in range(2, 129):
            h = th.hitting_probability(th.DTMCSpec(th.Y_CHAIN, n, p))
            worst_gap = min(worst_gap, h[1:].min() - bound)
            worst_eq = max(worst_eq, abs(h[2] - bound))
    ok = worst_gap >= -1e-10 and worst_eq <= 1e-10
    verdict(5, "hitting-probability lower bound", ok,
            f"min_i h_i - bound = {worst_gap:.2e}, |h_2 - bound| <= {worst_eq:.1e}")


def test_criterion_06_hitting_time_scaling():
    ok = True
    parts = []
    Ns = (8, 16, 32, 64, 128)
    for p in BACKOFF_GRID:
        c = np.array([th.hitting_time(th.DTMCSpec(th.X_CHAIN, n, p)).max()
                      / (math.log(n) / p) for n in Ns])
        dev = np.abs(c / c.mean() - 1).max()
        ok &= dev <= 0.25
        parts.append(f"p={p:.3g}: c={c.mean():.3f} +-{dev:.0%}")
    z_max = 0.0
    for p in (0.25, OPTIMAL_BACKOFF, 0.9):
        spec = th.DTMCSpec(th.X_CHAIN, 64, p)
        k = th.hitting_time(spec)
        est = th.simulate_chain(spec, 64, (0, 1), n_paths=10**5, rng=2024)
        z_max = max(z_max, abs(est.mean_steps - k[64]) / est.steps_stderr)
    ok &= z_max <= 3.0
    parts.append(f"Monte Carlo vs solve: max |z| = {z_max:.2f}")
    verdict(6, "hitting-time scaling", ok, "; ".join(parts))


def test_criterion_07_optimal_backoff():
    arg = th.grid_argmin_backoff(1e-4)
    conv = {p: full_run("canony", 4, 64, p=p).convergence_step for p in BACKOFF_GRID}
    best = min(conv.values())
    rel = conv[OPTIMAL_BACKOFF] / best - 1
    ok = abs(arg - (2 - math.sqrt(2))) <= 1e-4 and rel <= 0.10
    verdict(7, "optimal back-off", ok,
            f"grid argmin {arg:.4f}; R=4 K=64 mean convergence "
            + ", ".join(f"p={p:.3g}: {v:.0f}" for p, v in conv.items())
            + f"; p* is {rel:.1%} above best")


def test_criterion_08_spe_ratio():
    delta = 1 - 1e-6
    parts, ok = [], True
    for K in (2, 4, 8, 16):
        E = full_run("canony", K).convergence_step
        # the bound counts one payoff per round before convergence: E(X) in episodes
        b = th.BoundParams(N=K * K, R=K, K=K, delta=delta, zeta=-1.0, E_X=E / K)
        r = th.spe_payoff_ratio(b).ratio
        grid = np.linspace(0.9, 1 - 1e-9, 2001)
        mono = bool(np.all(np.diff(th.ratio_curve(b, grid)) >= 0))
        ok &= (E > 1e3 or r > 0.999) and mono
        parts.append(f"K={K}: E(X)={E:.0f} steps = {E / K:.1f} episodes, ratio {r:.5f}"
                     f"{'' if mono else ' non-monotone'}")
    verdict(8, "epsilon-SPE ratio at delta = 1 - 1e-6", ok, "; ".join(parts))


def test_criterion_09_tail():
    tails = [th.indifference_tail(th.BoundParams(N=4 * K, R=4, K=K), runs=RUNS)
             for K in (4, 16, 64)]
    emp = [t.empirical for t in tails]
    ok = all(a >= b for a, b in zip(emp, emp[1:]))
    verdict(9, "not converged by T_ind = RNK", ok,
            ", ".join(f"K={K}: {t.empirical:.3f} (bound {t.theoretical:.3f})"
                      for K, t in zip((4, 16, 64), tails)))


def test_criterion_10_quota():
    # every batch experiment above tracks the largest per-episode success count
    worst = max((r.max_successes_per_episode for r in REPORTS), default=0)
    n = sum(r.runs_aggregated for r in REPORTS)
    # full ledger audits through the object engine, every algorithm
    audits = 0
    for alg in ("canony", "canony-star") + BANDITS:
        ledgers = []
        simulate_reference(square(3, horizon=3000, seed=77), alg, runs=2, ledgers=ledgers)
        for led in ledgers:
            audits += len(led.history)
            worst = max(worst, max(h["max_successes"] for h in led.history))
    ok = worst <= 1 and audits > 0
    verdict(10, "one success per agent per episode", ok,
            f"max successes in an episode = {worst} over {n} batch runs "
            f"and {audits} audited ledger episodes")


def test_criterion_11_determinism(tmp_path):
    ok = True
    for extra in (["--algorithm", "canony", "--agents", "64", "--resources", "8"],
                  ["--algorithm", "exp4p", "--agents", "16", "--resources", "4",
                   "--horizon", "20000"]):
        outs = []
        for i in range(2):
            path = tmp_path / f"run{i}.csv"
            code = cli_main(extra + ["--runs", "8", "--seed", "123", "--out", str(path)])
            ok &= code == 0
            outs.append(path.read_bytes())
        ok &= outs[0] == outs[1]
    verdict(11, "byte-identical CSV", ok, "two CLI invocations per setting compared")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
