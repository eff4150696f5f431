"""Efficiency, fairness and payoff metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import StepOutcome

NO_ALLOCATION = float("nan")
FULL = "full"


def jain_index(x) -> float:
    """Jain fairness index ``(sum x)^2 / (N sum x^2)``.

    Returns :data:`NO_ALLOCATION` (NaN) when nobody received anything.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0 or np.any(x < 0):
        raise ValueError("allocations must be a non-empty non-negative vector")
    sq = float(np.dot(x, x))
    if sq == 0.0:
        return NO_ALLOCATION
    return float(x.sum()) ** 2 / (x.size * sq)


def utilization(outcome: StepOutcome) -> float:
    """Fraction of resources with exactly one successful accessor."""
    return outcome.success_resources / outcome.n_resources


def discount_weights(n_steps: int, delta: float, t_ind: int = 0) -> np.ndarray:
    t = np.arange(n_steps, dtype=float)
    return np.where(t <= t_ind, 1.0, delta ** np.maximum(t - t_ind, 0.0))


def discounted_payoff(payoffs, delta: float, t_ind: int = 0) -> float:
    """Sum of ``w_t u_t`` with ``w_t = 1`` up to ``t_ind`` and ``delta**(t - t_ind)`` after."""
    u = np.asarray(payoffs, dtype=float)
    return float(np.dot(discount_weights(u.size, delta, t_ind), u))


def periodic_weight_sum(first: int, period: int, stop: int, delta: float,
                        t_ind: int = 0) -> float:
    """Closed-form sum of discount weights over ``first, first+period, ... < stop``."""
    if first >= stop:
        return 0.0
    count = (stop - first + period - 1) // period
    total = 0.0
    # steps still inside the indifference period weigh 1
    if first <= t_ind:
        flat = min(count, (t_ind - first) // period + 1)
        total += flat
        first += flat * period
        count -= flat
    if count > 0:
        q = delta ** period
        total += delta ** (first - t_ind) * (1.0 - q ** count) / (1.0 - q)
    return total


def convergence_step(util, coll, K: int, goal=FULL):
    """First converged step of a run given its per-step series.

    ``goal="full"``: start of the first episode-aligned block of ``K`` steps
    with full utilization and no collision. A float goal ``f``: start of the
    first ``K``-step window whose mean utilization reaches ``f``. ``None``
    when the goal is never met.
    """
    util = np.asarray(util, dtype=float)
    coll = np.asarray(coll, dtype=float)
    if goal == FULL:
        n_ep = util.size // K
        if n_ep == 0:
            return None
        u = util[: n_ep * K].reshape(n_ep, K)
        c = coll[: n_ep * K].reshape(n_ep, K)
        ok = np.all(u >= 1.0 - 1e-12, axis=1) & np.all(c == 0, axis=1)
        hits = np.flatnonzero(ok)
        return int(hits[0] * K) if hits.size else None
    f = float(goal)
    if util.size < K:
        return None
    window = np.convolve(util, np.ones(K), mode="valid") / K
    hits = np.flatnonzero(window >= f - 1e-12)
    return int(hits[0]) if hits.size else None


def detect_convergence(trace, K: int, goal=FULL):
    """:func:`convergence_step` over a list of :class:`StepOutcome`."""
    util = [utilization(o) for o in trace]
    coll = [o.collision_resources for o in trace]
    return convergence_step(util, coll, K, goal)


@dataclass
class MetricsReport:
    """Aggregate of a batch of runs of one configuration.

    Per-run arrays are indexed by run; ``utilization_series`` and
    ``collision_series`` are means over runs per step. ``jain`` is the mean
    over runs of the Jain index of the allocations received in the final
    window; ``jain_horizon`` uses the whole horizon instead.

    ``goal`` selects which convergence record the summary statistics use:
    :data:`FULL` for convention agents, a utilization fraction for bandits.
    A mean convergence step is only reported when every run reached the
    goal; otherwise it is NaN (a gap).
    """

    algorithm: str
    R: int
    K: int
    N: int
    p_backoff: float
    delta: float
    t_ind: int
    horizon: int
    runs_aggregated: int
    utilization_series: np.ndarray = field(repr=False)
    collision_series: np.ndarray = field(repr=False)
    per_run_payoff: np.ndarray = field(repr=False)
    per_run_jain: np.ndarray = field(repr=False)
    per_run_jain_horizon: np.ndarray = field(repr=False)
    per_run_convergence: list = field(repr=False)
    per_run_fraction_convergence: list = field(repr=False)
    per_agent_success_counts: np.ndarray = field(repr=False)
    per_agent_discounted_payoff: np.ndarray = field(repr=False)
    max_successes_per_episode: int = 0
    goal: object = FULL

    @property
    def jain(self) -> float:
        return float(np.mean(self.per_run_jain))

    @property
    def jain_horizon(self) -> float:
        return float(np.mean(self.per_run_jain_horizon))

    @property
    def payoff_mean(self) -> float:
        return float(np.mean(self.per_run_payoff))

    @property
    def payoff_std(self) -> float:
        return float(np.std(self.per_run_payoff))

    def _steps(self, values):
        return np.array([v for v in values if v is not None], dtype=float)

    @property
    def per_run_goal(self) -> list:
        """Per-run convergence steps for :attr:`goal` (``None`` = never)."""
        if self.goal == FULL:
            return self.per_run_convergence
        return self.per_run_fraction_convergence

    @property
    def convergence_step(self) -> float:
        """Mean over runs; NaN unless every run converged."""
        s = self._steps(self.per_run_goal)
        return float(s.mean()) if s.size == self.runs_aggregated else math.nan

    @property
    def convergence_step_std(self) -> float:
        s = self._steps(self.per_run_goal)
        return float(s.std()) if s.size == self.runs_aggregated else math.nan

    @property
    def converged_fraction(self) -> float:
        return len(self._steps(self.per_run_goal)) / self.runs_aggregated

    def censored_mean(self, values=None) -> float:
        """Mean step with unconverged runs counted at the horizon (a lower bound)."""
        values = self.per_run_goal if values is None else values
        return float(np.mean([self.horizon if v is None else v for v in values]))

    @property
    def utilization_final(self) -> float:
        if self.utilization_series.size == 0:
            return math.nan
        tail = max(self.K, self.utilization_series.size // 100)
        return float(self.utilization_series[-tail:].mean())
