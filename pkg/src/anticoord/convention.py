"""Courteous learning rule.

Every agent keeps a table ``g`` mapping each context to an action. It
accesses the resource its table names (once per episode), backs off to
yielding with a constant probability after a collision, and while yielding
watches one random resource and claims it if it turns out free.

Each call consumes the agent's single uniform draw ``u`` for the step, so
the same stream drives both the monitor choice and the back-off coin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import IDLE, YIELD, StepOutcome

OPTIMAL_BACKOFF = 2.0 - math.sqrt(2.0)


@dataclass
class AgentStrategy:
    g: np.ndarray
    accessed: bool = False
    backoff_prob: float = OPTIMAL_BACKOFF

    @property
    def context_size(self) -> int:
        return len(self.g)


def init_strategy(K: int, R: int, rng: np.random.Generator,
                  backoff_prob: float = OPTIMAL_BACKOFF) -> AgentStrategy:
    """Draw every table entry uniformly from ``{Y, A_1, ..., A_R}``."""
    if K < 1 or R < 1:
        raise ValueError("K and R must be >= 1")
    g = rng.integers(0, R + 1, size=K).astype(np.int64)
    return AgentStrategy(g=g, accessed=False, backoff_prob=backoff_prob)


def choose_action(strategy: AgentStrategy, context: int, u: float,
                  n_resources: int) -> tuple[int, int]:
    """Return ``(action, monitored_resource)`` for ``context`` (1-based).

    The monitored resource is 0 unless the agent yields.
    """
    a = int(strategy.g[context - 1])
    if a > 0:
        return (a, 0) if not strategy.accessed else (IDLE, 0)
    m = min(int(u * n_resources) + 1, n_resources)
    return YIELD, m


def update_on_feedback(strategy: AgentStrategy, context: int,
                       outcome: StepOutcome, agent: int, u: float) -> AgentStrategy:
    """Apply one step of feedback for ``agent`` in place and return the strategy."""
    k = context - 1
    action = int(outcome.actions[agent])
    if action != _expected(strategy, k):
        raise ValueError(
            f"outcome action {action} does not match the strategy's choice"
        )
    pay = outcome.payoffs[agent]
    if action > 0:
        if not outcome.admitted[agent]:
            raise ValueError("convention agents never exceed their quota")
        if pay == 1.0:
            strategy.accessed = True
        elif pay < 0:
            if u < strategy.backoff_prob:
                strategy.g[k] = YIELD
        else:
            raise ValueError("an admitted access cannot earn 0")
    else:
        if pay != 0.0:
            raise ValueError(f"a non-accessing agent cannot earn {pay}")
        r = int(outcome.observed[agent])
        if action == YIELD and r > 0 and outcome.observed_free[agent]:
            strategy.g[k] = r
    return strategy


def end_episode(strategy: AgentStrategy) -> AgentStrategy:
    strategy.accessed = False
    return strategy


def _expected(strategy: AgentStrategy, k: int) -> int:
    a = int(strategy.g[k])
    if a > 0 and strategy.accessed:
        return IDLE
    return a


class ConventionAgent:
    """A courteous agent; its table is drawn from ``rng`` at construction."""

    kind = "canony"

    def __init__(self, K: int, R: int, rng: np.random.Generator,
                 backoff_prob: float = OPTIMAL_BACKOFF):
        self.n_resources = R
        self.strategy = init_strategy(K, R, rng, backoff_prob)
        self._u = 0.0

    def act(self, context: int, u: float) -> tuple[int, int]:
        self._u = u
        return choose_action(self.strategy, context, u, self.n_resources)

    def observe(self, context: int, outcome: StepOutcome, agent: int) -> None:
        update_on_feedback(self.strategy, context, outcome, agent, self._u)

    def end_episode(self) -> None:
        end_episode(self.strategy)
