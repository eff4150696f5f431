"""Fast batch simulation of many seeded runs.

Runs use seeds ``config.seed + i``. Inside a run every agent draws exactly
one uniform per step from its own stream (after its strategy table, for
convention agents), which is what :class:`anticoord.engine.Simulation`
does too, so a batch run and a step-by-step run with the same seed agree.

Convention runs stop simulating once the population reaches the efficient
state: from then on every episode repeats identically, so the rest of the
horizon is accounted for in closed form.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels as kr
from . import bandits
from .engine import ALGORITHMS, CONVENTION_ALGORITHMS, Simulation, agent_streams
from .game import YIELD, GameConfig
from .metrics import (FULL, MetricsReport, convergence_step, discount_weights,
                      jain_index, periodic_weight_sum)
from .monitor import QUOTA_LOG

BLOCK = 4096
FRACTION_GOAL = 0.9
_VARIANT_CODE = {bandits.EXP3: 0, bandits.CEXP3: 0, bandits.EXP4: 2, bandits.EXP4P: 3}


def payoff_horizon(config: GameConfig, tol: float = 1e-12) -> int:
    """Steps after which the remaining discount mass is below ``tol``."""
    tail = math.log(tol * (1.0 - config.discount)) / math.log(config.discount)
    return min(config.horizon, config.indifference_period + int(math.ceil(tail)) + 1)


def final_window_start(T: int, K: int) -> int:
    """Episode-aligned start of the last ~1% of the horizon."""
    width = max(K, T // 100)
    return max(0, (T - width) // K * K)


class _Run:
    """Per-run accumulators."""

    def __init__(self, N, T, K):
        self.payoff = np.zeros(N)
        self.payoff_star = np.zeros(N)
        self.succ = np.zeros(N, dtype=np.int64)
        self.ep_succ = np.zeros(N, dtype=np.int64)
        self.stats = kr.new_stats()
        self.ring = np.zeros(K, dtype=np.int64)
        self.window_base = None


def _draw(streams, n):
    U = np.empty((len(streams), n))
    for i, rng in enumerate(streams):
        rng.random(out=U[i])
    return U


def _drive(step_fn, run, streams, T, window_start, block):
    t = 0
    while t < T:
        if run.window_base is None and t >= window_start:
            run.window_base = run.succ.copy()
        stop = window_start if t < window_start else T
        n = min(block, stop - t)
        nxt = step_fn(_draw(streams, n), t)
        if nxt < t + n:
            return nxt
        t = nxt
    if run.window_base is None:
        run.window_base = run.succ.copy()
    return t


def _fast_forward(g, t, T, cfg, run, window_start, util_acc):
    """Account for steps ``t..T-1`` of a run whose episodes now repeat."""
    N, K = g.shape
    zeta = cfg.collision_cost
    accessed = np.zeros(N, dtype=bool)
    base = run.succ.copy()
    for c in range(K):
        go = (g[:, c] > 0) & ~accessed
        accessed |= go
        pay = go.astype(float)
        pay_star = np.where(g[:, c] == 0, zeta, pay)
        s = periodic_weight_sum(t + c, K, T, cfg.discount, cfg.indifference_period)
        run.payoff += pay * s
        run.payoff_star += pay_star * s
        run.succ[go] += len(range(t + c, T, K))
        base[go] += len(range(t + c, window_start, K))
    if run.window_base is None:
        run.window_base = base
    util_acc[t:T] += 1.0


def _run_convention(cfg, streams, run, T, window_start, util_acc, coll_acc,
                    fraction_goal, block, fast_forward):
    R, K = cfg.n_resources, cfg.context_size
    g = np.stack([rng.integers(0, R + 1, size=K) for rng in streams]).astype(np.int64)
    accessed = np.zeros(len(streams), dtype=np.bool_)

    def step_fn(U, t):
        return kr.convention_block(
            g, accessed, run.ep_succ, U, t, T, R, K, cfg.backoff_prob,
            cfg.collision_cost, cfg.discount, cfg.indifference_period,
            run.payoff, run.payoff_star, run.succ, util_acc, coll_acc,
            run.stats, run.ring, fraction_goal, fast_forward)

    t = _drive(step_fn, run, streams, T, window_start, block)
    if t < T:
        _fast_forward(g, t, T, cfg, run, window_start, util_acc)
    run.strategies = g


def _run_bandit(cfg, algorithm, streams, run, T, hint, window_start, util_acc,
                coll_acc, fraction_goal, refused_occupy, block):
    N, R, K = cfg.n_agents, cfg.n_resources, cfg.context_size
    A = R + 1
    gamma = p_min = bonus = 0.0
    if algorithm in (bandits.EXP3, bandits.CEXP3):
        C = K if algorithm == bandits.CEXP3 else 1
        w = np.ones((N, C, A))
        tot = np.full((N, C), float(A))
        gamma = bandits.exp3_gamma(A, hint / C)
    else:
        M = R * K
        w = np.ones((N, K, R))
        tot = np.full((N, K), float(R))
        if algorithm == bandits.EXP4:
            gamma = bandits.exp4_gamma(A, M, hint)
        else:
            p_min, bonus = bandits.exp4p_params(A, M, hint)
    code = _VARIANT_CODE[algorithm]

    def step_fn(U, t):
        return kr.bandit_block(
            code, w, tot, run.ep_succ, U, t, T, R, K, cfg.collision_cost,
            cfg.discount, cfg.indifference_period, gamma, p_min, bonus,
            refused_occupy, run.payoff, run.succ, util_acc, coll_acc,
            run.stats, run.ring, fraction_goal)

    _drive(step_fn, run, streams, T, window_start, block)
    run.payoff_star = run.payoff
    run.weights = w


def simulate(config: GameConfig, algorithm: str, runs: int = 1, *,
             steps: int | None = None, horizon_hint: int | None = None,
             refused_occupy: bool = True, block: int = BLOCK,
             fraction_goal: float = FRACTION_GOAL,
             fast_forward: bool = True) -> MetricsReport:
    """Simulate ``runs`` seeded instances and aggregate them.

    ``steps`` truncates the simulated horizon (e.g. to :func:`payoff_horizon`
    when only discounted payoffs matter) while bandit tuning still uses
    ``horizon_hint`` or ``config.horizon``.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    N, R, K = config.n_agents, config.n_resources, config.context_size
    T = config.horizon if steps is None else min(steps, config.horizon)
    hint = horizon_hint or config.horizon
    window_start = final_window_start(T, K)
    util_acc = np.zeros(T)
    coll_acc = np.zeros(T)
    per_run = []
    for i in range(runs):
        streams = agent_streams(config.seed + i, N)
        run = _Run(N, T, K)
        if algorithm in CONVENTION_ALGORITHMS:
            _run_convention(config, streams, run, T, window_start, util_acc,
                            coll_acc, fraction_goal, block, fast_forward)
        else:
            _run_bandit(config, algorithm, streams, run, T, hint, window_start,
                        util_acc, coll_acc, fraction_goal, refused_occupy, block)
        per_run.append(run)

    star = algorithm == "canony-star"
    payoffs = np.array([(r.payoff_star if star else r.payoff) for r in per_run])
    succ = np.array([r.succ for r in per_run])
    window = np.array([r.succ - r.window_base for r in per_run])

    def step_or_none(v):
        return None if v < 0 else int(v)

    return MetricsReport(
        algorithm=algorithm, R=R, K=K, N=N,
        p_backoff=config.backoff_prob, delta=config.discount,
        t_ind=config.indifference_period, horizon=T,
        runs_aggregated=runs,
        utilization_series=util_acc / runs,
        collision_series=coll_acc / runs,
        per_run_payoff=payoffs.mean(axis=1),
        per_run_jain=np.array([jain_index(w) for w in window]),
        per_run_jain_horizon=np.array([jain_index(s) for s in succ]),
        per_run_convergence=[step_or_none(r.stats[kr.CONV]) for r in per_run],
        per_run_fraction_convergence=[step_or_none(r.stats[kr.FRAC]) for r in per_run],
        per_agent_success_counts=succ,
        per_agent_discounted_payoff=payoffs,
        max_successes_per_episode=int(max(r.stats[kr.MAX_EP] for r in per_run)),
        goal=FULL if algorithm in CONVENTION_ALGORITHMS else fraction_goal,
    )


def simulate_reference(config: GameConfig, algorithm: str, runs: int = 1, *,
                       steps: int | None = None, horizon_hint: int | None = None,
                       refused_occupy: bool = True,
                       fraction_goal: float = FRACTION_GOAL,
                       ledger_mode: str = QUOTA_LOG, experts=None,
                       ledgers: list | None = None) -> MetricsReport:
    """Same aggregate as :func:`simulate`, computed with the object engine.

    Slow but independent of the compiled kernels; every access goes through
    a :class:`~anticoord.monitor.Ledger`. Pass a list as ``ledgers`` to
    collect each run's ledger for auditing. Unrestricted expert tables for
    the EXP4 variants are only supported here.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    N, R, K = config.n_agents, config.n_resources, config.context_size
    T = config.horizon if steps is None else min(steps, config.horizon)
    window_start = final_window_start(T, K)
    w = discount_weights(T, config.discount, config.indifference_period)
    zeta = config.collision_cost
    star = algorithm == "canony-star"
    util_acc = np.zeros(T)
    coll_acc = np.zeros(T)
    pay, succ, window, conv, frac, max_ep = [], [], [], [], [], 0
    for i in range(runs):
        cfg = GameConfig(**{**config.__dict__, "seed": config.seed + i})
        sim = Simulation(cfg, algorithm, ledger_mode, refused_occupy, horizon_hint,
                         experts)
        u = np.zeros(T)
        c = np.zeros(T)
        p_run = np.zeros(N)
        s_run = np.zeros(N, dtype=np.int64)
        base = None
        changed = np.zeros(T // K + 1, dtype=bool)
        before = None
        for t in range(T):
            if t == window_start:
                base = s_run.copy()
            if sim.is_convention and t % K == 0:
                before = np.stack([a.strategy.g.copy() for a in sim.agents])
            out = sim.step()
            u[t] = out.success_resources / R
            c[t] = out.collision_resources
            gain = out.payoffs.copy()
            if star:
                gain[out.actions == YIELD] = zeta
            p_run += w[t] * gain
            s_run += out.successes
            if sim.is_convention and t % K == K - 1:
                after = np.stack([a.strategy.g for a in sim.agents])
                changed[t // K] = not np.array_equal(before, after)
        if base is None:
            base = s_run.copy()
        full = _stable_convergence(u, c, K, changed)
        conv.append(full)
        frac.append(convergence_step(u, c, K, fraction_goal))
        util_acc += u
        coll_acc += c
        pay.append(p_run)
        succ.append(s_run)
        window.append(s_run - base)
        max_ep = max([max_ep] + [h["max_successes"] for h in sim.ledger.history])
        if ledgers is not None:
            ledgers.append(sim.ledger)
    pay = np.array(pay)
    succ = np.array(succ)
    return MetricsReport(
        algorithm=algorithm, R=R, K=K, N=N,
        p_backoff=config.backoff_prob, delta=config.discount,
        t_ind=config.indifference_period, horizon=T, runs_aggregated=runs,
        utilization_series=util_acc / runs, collision_series=coll_acc / runs,
        per_run_payoff=pay.mean(axis=1),
        per_run_jain=np.array([jain_index(x) for x in window]),
        per_run_jain_horizon=np.array([jain_index(x) for x in succ]),
        per_run_convergence=conv, per_run_fraction_convergence=frac,
        per_agent_success_counts=succ, per_agent_discounted_payoff=pay,
        max_successes_per_episode=int(max_ep),
        goal=FULL if algorithm in CONVENTION_ALGORITHMS else fraction_goal,
    )


def _stable_convergence(util, coll, K, changed):
    n_ep = util.size // K
    for e in range(n_ep):
        blk = slice(e * K, (e + 1) * K)
        if np.all(util[blk] >= 1.0) and not np.any(coll[blk]) and not changed[e]:
            return e * K
    return None
