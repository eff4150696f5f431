"""Step-by-step simulation with explicit agent objects and a ledger.

This is the readable reference path: every step produces a full
:class:`~anticoord.game.StepOutcome` and the monitoring authority audits
every access. Batch experiments use the compiled kernels in
:mod:`anticoord.batch`, which consume the same random streams and therefore
reproduce these traces exactly.
"""
from __future__ import annotations

import numpy as np

from . import bandits
from .convention import ConventionAgent
from .game import GameConfig, StepOutcome, context_signal, resolve_step
from .monitor import QUOTA_LOG, Ledger

CONVENTION_ALGORITHMS = ("canony", "canony-star")
ALGORITHMS = CONVENTION_ALGORITHMS + bandits.VARIANTS


def agent_streams(seed: int, n_agents: int) -> list[np.random.Generator]:
    """Independent generators, one per agent.

    Child ``n`` depends only on ``(seed, n)``, so adding agents leaves the
    draws of existing agents untouched.
    """
    children = np.random.SeedSequence(seed).spawn(n_agents)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def make_agents(config: GameConfig, algorithm: str, streams, horizon_hint=None,
                experts=None):
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    K, R = config.context_size, config.n_resources
    if algorithm in CONVENTION_ALGORITHMS:
        return [ConventionAgent(K, R, rng, config.backoff_prob) for rng in streams]
    horizon = horizon_hint or config.horizon
    return [
        bandits.BanditAgent(algorithm, R, K, horizon, config.collision_cost, experts)
        for _ in streams
    ]


class Simulation:
    """One seeded game instance.

    ``refused_occupy`` controls whether an access refused by the monitoring
    authority still occupies the resource (see :func:`resolve_step`).
    """

    def __init__(self, config: GameConfig, algorithm: str = "canony",
                 ledger_mode: str = QUOTA_LOG, refused_occupy: bool = True,
                 horizon_hint: int | None = None, experts=None, **ledger_kwargs):
        self.config = config
        self.algorithm = algorithm
        self.refused_occupy = refused_occupy
        self.streams = agent_streams(config.seed, config.n_agents)
        self.agents = make_agents(config, algorithm, self.streams, horizon_hint,
                                  experts)
        self.ledger = Ledger(config.n_agents, config.n_resources, ledger_mode,
                             **ledger_kwargs)
        self.time = 0

    @property
    def is_convention(self) -> bool:
        return self.algorithm in CONVENTION_ALGORITHMS

    def step(self) -> StepOutcome:
        cfg = self.config
        t = self.time
        context = context_signal(t, cfg.context_size)
        n = cfg.n_agents
        u = np.array([rng.random() for rng in self.streams])
        actions = np.zeros(n, dtype=np.int64)
        monitors = np.zeros(n, dtype=np.int64)
        for i, agent in enumerate(self.agents):
            if self.is_convention:
                actions[i], monitors[i] = agent.act(context, u[i])
            else:
                actions[i] = agent.act(context, u[i])
        admissions = np.zeros(n, dtype=bool)
        for i in np.flatnonzero(actions > 0):
            admissions[i] = self.ledger.admit(int(i), int(actions[i]))

        outcome = resolve_step(actions, admissions, monitors, cfg.n_resources,
                               cfg.collision_cost, t, context, self.refused_occupy)
        for i in np.flatnonzero(outcome.admitted):
            self.ledger.record(int(i), int(actions[i]), bool(outcome.payoffs[i] == 1.0))

        for i, agent in enumerate(self.agents):
            if self.is_convention:
                agent.observe(context, outcome, i)
            else:
                a = int(actions[i])
                if a > 0 and not outcome.admitted[i]:
                    # refused: learn from the occupancy signal, earn nothing
                    reward = 1.0 if outcome.observed_free[i] else cfg.collision_cost
                else:
                    reward = float(outcome.payoffs[i])
                agent.update(context, a, reward)

        self.time += 1
        if context == cfg.context_size:
            for agent in self.agents:
                if self.is_convention:
                    agent.end_episode()
            self.ledger.end_episode()
        return outcome

    def run(self, steps: int) -> list[StepOutcome]:
        return [self.step() for _ in range(steps)]
