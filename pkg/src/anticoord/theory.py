"""Numerical counterparts of the convergence and equilibrium analysis.

Two birth-death-free Markov chains describe how many agents still contend
for one resource. From state ``i >= 2`` each contender independently keeps
accessing with probability ``1 - p``, so the next state is
``Binomial(i, 1 - p)``. State 1 (a single owner) is absorbing in both.

* X-chain: state 0 (everybody backed off) restarts at ``n``.
* Y-chain: state 0 is absorbing as well.

Asymptotic bounds are evaluated with constant 1 and natural logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg, stats

from .convention import OPTIMAL_BACKOFF

X_CHAIN = "x"
Y_CHAIN = "y"


class GridLimitError(ValueError):
    """The requested precision lies beyond the resolution of the search grid."""


@dataclass(frozen=True)
class DTMCSpec:
    variant: str
    n: int
    p: float

    def __post_init__(self):
        if self.variant not in (X_CHAIN, Y_CHAIN):
            raise ValueError(f"unknown chain variant {self.variant!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the bound formulas.

    ``E_X`` is the expected number of episodes (rounds of ``K`` steps) to
    convergence, normally the simulated convergence step divided by ``K``.
    """

    N: int
    R: int
    K: int
    p: float = OPTIMAL_BACKOFF
    delta: float = 0.99
    zeta: float = -1.0
    E_X: float = 1.0
    epsilon: float = 0.01

    def __post_init__(self):
        if min(self.N, self.R, self.K) < 1:
            raise ValueError("N, R and K must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def build_chain(spec: DTMCSpec) -> np.ndarray:
    """Row-stochastic ``(n+1, n+1)`` transition matrix."""
    n, p = spec.n, spec.p
    P = np.zeros((n + 1, n + 1))
    j = np.arange(n + 1)
    for i in range(2, n + 1):
        # Pr(i -> j) = C(i, j) p^(i-j) (1-p)^j
        P[i] = stats.binom.pmf(j, i, 1.0 - p)
    P[1, 1] = 1.0
    if spec.variant == X_CHAIN:
        P[0, n] = 1.0
    else:
        P[0, 0] = 1.0
    return P


def _as_set(target, n):
    t = sorted({int(s) for s in np.atleast_1d(target)})
    if not t or t[0] < 0 or t[-1] > n:
        raise ValueError("target states must lie in 0..n")
    return t


def _solve(A, b):
    # the chains only move downwards from i >= 2, so most systems are triangular
    if np.allclose(A, np.tril(A)):
        return linalg.solve_triangular(A, b, lower=True)
    return linalg.solve(A, b)


def hitting_probability(spec: DTMCSpec, target=(1,)) -> np.ndarray:
    """Probability of ever reaching ``target`` from each state.

    Minimal non-negative solution of ``h = P h`` with ``h = 1`` on the
    target; absorbing states outside the target get 0.
    """
    P = build_chain(spec)
    n = spec.n
    tgt = _as_set(target, n)
    h = np.zeros(n + 1)
    h[tgt] = 1.0
    absorbing = np.isclose(np.diag(P), 1.0)
    free = [i for i in range(n + 1) if i not in tgt and not absorbing[i]]
    if free:
        A = np.eye(len(free)) - P[np.ix_(free, free)]
        b = P[np.ix_(free, tgt)].sum(axis=1)
        try:
            x = _solve(A, b)
        except linalg.LinAlgError as exc:
            raise ArithmeticError(f"singular hitting system for {spec}") from exc
        h[free] = x
    return np.clip(h, 0.0, 1.0)


def hitting_time(spec: DTMCSpec, target=(0, 1)) -> np.ndarray:
    """Expected steps to reach ``target``; ``inf`` where it is not reached a.s."""
    P = build_chain(spec)
    n = spec.n
    tgt = _as_set(target, n)
    k = np.zeros(n + 1)
    sure = hitting_probability(spec, tgt) > 1.0 - 1e-12
    free = [i for i in range(n + 1) if i not in tgt]
    k[[i for i in free if not sure[i]]] = np.inf
    free = [i for i in free if sure[i]]
    if free:
        A = np.eye(len(free)) - P[np.ix_(free, free)]
        k[free] = _solve(A, np.ones(len(free)))
    return k


class ChainEstimate(NamedTuple):
    hit_fraction: float
    hit_stderr: float
    mean_steps: float
    steps_stderr: float


def simulate_chain(spec: DTMCSpec, start: int, target=(0, 1), n_paths: int = 10**5,
                   rng=None, max_steps: int = 10**6) -> ChainEstimate:
    """Monte Carlo estimate of hitting probability and hitting time.

    Paths are advanced together with binomial thinning. ``mean_steps``
    averages over the paths that hit the target.
    """
    rng = np.random.default_rng(rng)
    tgt = np.zeros(spec.n + 1, dtype=bool)
    tgt[_as_set(target, spec.n)] = True
    state = np.full(n_paths, int(start))
    steps = np.zeros(n_paths, dtype=np.int64)
    hit = tgt[state].copy()
    alive = ~hit
    for _ in range(max_steps):
        if not alive.any():
            break
        s = state[alive]
        nxt = rng.binomial(s, 1.0 - spec.p)
        nxt[s == 1] = 1
        zero = s == 0
        nxt[zero] = spec.n if spec.variant == X_CHAIN else 0
        state[alive] = nxt
        steps[alive] += 1
        reached = tgt[state] & alive
        hit |= reached
        # paths stuck in an absorbing state outside the target are done
        stuck = ~tgt[state] & ((state == 1) | ((state == 0) & (spec.variant == Y_CHAIN)))
        alive &= ~(reached | stuck)
    frac = hit.mean()
    t = steps[hit].astype(float)
    t_mean = t.mean() if t.size else math.nan
    t_err = t.std(ddof=1) / math.sqrt(t.size) if t.size > 1 else math.nan
    return ChainEstimate(float(frac), float(math.sqrt(frac * (1 - frac) / n_paths)),
                         float(t_mean), float(t_err))


def backoff_objective(p):
    """``(2 - p) / (2 (1 - p) p)``, the p-dependent factor of the bound."""
    p = np.asarray(p, dtype=float)
    return (2.0 - p) / (2.0 * (1.0 - p) * p)


def optimal_backoff() -> float:
    return OPTIMAL_BACKOFF


def grid_argmin_backoff(step: float = 1e-4) -> float:
    """Numeric argmin of :func:`backoff_objective` over ``step, 2 step, ... < 1``."""
    grid = np.arange(1, int(round(1.0 / step))) * step
    return float(grid[np.argmin(backoff_objective(grid))])


def convergence_bound(params: BoundParams) -> float:
    """``(K ln K + 2K) R (2-p)/(2(1-p)) ((1/p) ln N + R)``."""
    N, R, K, p = params.N, params.R, params.K, params.p
    return ((K * math.log(K) + 2 * K) * R * (2 - p) / (2 * (1 - p))
            * (math.log(N) / p + R))


def convergence_order(N: int, R: int) -> float:
    """``N (ln ceil(N/R) + 1)(ln N + R)``: the bound with default K and constant p."""
    return N * (math.log(-(-N // R)) + 1) * (math.log(N) + R)


class PayoffBounds(NamedTuple):
    ratio: float
    best_response: float
    courteous: float


def spe_payoff_ratio(params: BoundParams) -> PayoffBounds:
    """Compare the courteous payoff with the best quota-respecting deviation.

    The deviator succeeds once per episode from the start, which is worth
    at most ``1 / (1 - delta^K)``. A courteous agent pays at most ``zeta``
    once per episode for the ``E`` episodes before convergence and then
    succeeds once per episode, giving
    ``(zeta (1 - delta^(E K)) + delta^E) / (1 - delta^K)``. Their ratio is
    ``zeta (1 - delta^(E K)) + delta^E``.
    """
    ld = math.log(params.delta)
    E, K, z = params.E_X, params.K, params.zeta
    best = -1.0 / math.expm1(K * ld)
    ratio = z * -math.expm1(E * K * ld) + math.exp(E * ld)
    return PayoffBounds(ratio, best, ratio * best)


def delta_for_epsilon(params: BoundParams, step: float = 1e-6) -> float:
    """Smallest grid discount ``delta_0`` with ratio ``>= 1 - epsilon`` on ``[delta_0, 1)``.

    The ratio is increasing in ``delta`` for ``zeta <= 0``. Raises
    :class:`GridLimitError` when even the last grid point falls short.
    """
    eps = params.epsilon
    if not 0.0 < eps <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    grid = np.arange(1, int(round(1.0 / step))) * step
    ld = np.log(grid)
    ratio = params.zeta * -np.expm1(params.E_X * params.K * ld) + np.exp(params.E_X * ld)
    bad = np.flatnonzero(ratio < 1.0 - eps)
    if bad.size == 0:
        return float(grid[0])
    if bad[-1] == grid.size - 1:
        raise GridLimitError(
            f"ratio {ratio[-1]:.6g} < {1 - eps:.6g} at delta = {grid[-1]}; grid step {step} too coarse"
        )
    return float(grid[bad[-1] + 1])


def ratio_curve(params: BoundParams, deltas) -> np.ndarray:
    """Vectorized ratio lower bound for several discount factors."""
    ld = np.log(np.asarray(deltas, dtype=float))
    return params.zeta * -np.expm1(params.E_X * params.K * ld) + np.exp(params.E_X * ld)


def indifference_period(R: int, N: int, K: int, c: float = 1.0) -> int:
    return int(math.ceil(c * R * N * K))


def theoretical_tail(N: int, R: int) -> float:
    """``(ln ceil(N/R) + 1)(ln N + R) / N`` (constant 1)."""
    return (math.log(-(-N // R)) + 1) * (math.log(N) + R) / N


class TailEstimate(NamedTuple):
    t_ind: int
    empirical: float
    theoretical: float


def indifference_tail(params: BoundParams, runs: int = 128, c: float = 1.0,
                      seed: int = 0) -> TailEstimate:
    """Fraction of seeded convention runs not fully converged within ``T_ind = c R N K``."""
    from .batch import simulate
    from .game import GameConfig

    t_ind = indifference_period(params.R, params.N, params.K, c)
    cfg = GameConfig(n_agents=params.N, n_resources=params.R, context_size=params.K,
                     collision_cost=params.zeta, discount=params.delta,
                     backoff_prob=params.p, horizon=t_ind, indifference_period=t_ind,
                     seed=seed)
    rep = simulate(cfg, "canony", runs=runs)
    missed = sum(v is None for v in rep.per_run_convergence)
    return TailEstimate(t_ind, missed / runs, theoretical_tail(params.N, params.R))
