"""Repeated allocation game: configuration, context signal, payoffs, step resolution.

Actions are plain integers so they can live in numpy arrays:

* ``YIELD`` (0) -- do not access; a yielding agent may monitor one resource.
* ``r`` in ``1..R`` -- access resource ``r``.
* ``IDLE`` (-1) -- neither access nor monitor (a convention agent whose
  strategy points at a resource but which already succeeded this episode).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

YIELD = 0
IDLE = -1
NO_MONITOR = 0


def access(r: int) -> int:
    """Action code for accessing resource ``r`` (1-based)."""
    if r < 1:
        raise ValueError(f"resource id must be >= 1, got {r}")
    return int(r)


def is_access(action: int) -> bool:
    return action >= 1


@dataclass(frozen=True)
class GameConfig:
    """Static parameters of one game instance.

    Use :meth:`default` to get the usual ``K = ceil(N / R)`` context space.
    Constructing directly allows any ``K``; :attr:`nondefault_context` tells
    whether the standard constraint is violated.
    """

    n_agents: int
    n_resources: int
    context_size: int
    collision_cost: float = -1.0
    discount: float = 0.99
    backoff_prob: float = 2.0 - math.sqrt(2.0)
    horizon: int = 10**6
    indifference_period: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_agents", "n_resources", "context_size", "horizon"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.collision_cost < 0:
            raise ValueError("collision_cost must be negative")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if not 0.0 < self.backoff_prob <= 1.0:
            raise ValueError("backoff_prob must lie in (0, 1]")
        if self.indifference_period < 0:
            raise ValueError("indifference_period must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")

    @classmethod
    def default(cls, n_agents: int, n_resources: int, **kwargs) -> "GameConfig":
        k = -(-n_agents // n_resources)
        return cls(n_agents=n_agents, n_resources=n_resources, context_size=k, **kwargs)

    @property
    def nondefault_context(self) -> bool:
        return self.context_size != -(-self.n_agents // self.n_resources)

    @property
    def n_actions(self) -> int:
        return self.n_resources + 1


def payoff(action: int, accessor_count: int = 0, collision_cost: float = -1.0) -> float:
    """Stage payoff of one agent.

    0 when not accessing, 1 for a sole accessor, ``collision_cost`` when
    two or more admitted agents hit the same resource.
    """
    if action <= 0:
        return 0.0
    if accessor_count < 1:
        raise ValueError("an accessing agent counts itself: accessor_count must be >= 1")
    return 1.0 if accessor_count == 1 else float(collision_cost)


def context_signal(time: int, K: int) -> int:
    """Public periodic context in ``1..K``."""
    if time < 0 or K < 1:
        raise ValueError("time must be >= 0 and K >= 1")
    return time % K + 1


@dataclass
class StepOutcome:
    """Everything that happened in one time step.

    ``accessor_count`` counts admitted accessors per resource; ``occupancy``
    also counts refused transmitters when they are configured to occupy the
    channel. ``observed`` holds the monitored resource for yielding agents
    and the attempted resource for refused agents (0 when nothing was
    observed); ``observed_free`` tells whether that resource had no *other*
    occupant and is only meaningful where ``observed > 0``.
    """

    time: int
    context: int
    actions: np.ndarray
    admitted: np.ndarray
    payoffs: np.ndarray
    observed: np.ndarray
    observed_free: np.ndarray
    accessor_count: np.ndarray = field(repr=False)
    occupancy: np.ndarray = field(repr=False)

    @property
    def n_resources(self) -> int:
        return len(self.accessor_count)

    @property
    def successes(self) -> np.ndarray:
        return self.admitted & (self.payoffs == 1.0)

    @property
    def refused(self) -> np.ndarray:
        return (self.actions > 0) & ~self.admitted

    @property
    def collided(self) -> np.ndarray:
        """Admitted agents that took part in a collision."""
        return self.admitted & (self.payoffs < 0)

    @property
    def success_resources(self) -> int:
        return int(np.count_nonzero((self.accessor_count == 1) & (self.occupancy == 1)))

    @property
    def collision_resources(self) -> int:
        return int(np.count_nonzero(self.occupancy >= 2))

    @property
    def idle_resources(self) -> int:
        return int(np.count_nonzero(self.occupancy == 0))

    @property
    def blocked_resources(self) -> int:
        """Resources held only by a refused transmitter."""
        return int(np.count_nonzero((self.occupancy == 1) & (self.accessor_count == 0)))


def resolve_step(
    actions,
    admissions,
    monitors=None,
    n_resources: int = 1,
    collision_cost: float = -1.0,
    time: int = 0,
    context: int = 1,
    refused_occupy: bool = True,
) -> StepOutcome:
    """Resolve simultaneous actions into payoffs and observations.

    ``admissions[n]`` is the monitoring authority's verdict for agent ``n``;
    it is ignored unless the agent accesses. A refused access earns nothing
    and is turned into an observation of the attempted resource. With
    ``refused_occupy`` the refused transmission still occupies the resource
    (it can collide with an admitted accessor); without it the attempt
    vanishes from the channel. ``monitors[n]`` is the resource a yielding
    agent watches (0 for none).
    """
    actions = np.asarray(actions, dtype=np.int64)
    admissions = np.asarray(admissions, dtype=bool)
    if actions.shape != admissions.shape:
        raise ValueError(
            f"got {actions.size} actions but {admissions.size} admission flags"
        )
    n = actions.size
    if monitors is None:
        monitors = np.zeros(n, dtype=np.int64)
    monitors = np.asarray(monitors, dtype=np.int64)
    if monitors.shape != actions.shape:
        raise ValueError("monitors must have one entry per agent")
    if np.any(actions > n_resources) or np.any(monitors > n_resources):
        raise ValueError("resource id out of range")

    accessing = actions > 0
    admitted = accessing & admissions
    refused = accessing & ~admissions
    counts = np.bincount(actions[admitted], minlength=n_resources + 1)[1:]
    occupancy = counts.copy()
    if refused_occupy:
        occupancy += np.bincount(actions[refused], minlength=n_resources + 1)[1:]

    payoffs = np.zeros(n)
    busy = occupancy[np.maximum(actions, 1) - 1]
    payoffs[admitted & (busy == 1)] = 1.0
    payoffs[admitted & (busy >= 2)] = collision_cost

    observed = np.zeros(n, dtype=np.int64)
    yielding = actions == YIELD
    observed[yielding] = monitors[yielding]
    observed[refused] = actions[refused]
    others = np.zeros(n, dtype=np.int64)
    seen = observed > 0
    others[seen] = occupancy[observed[seen] - 1]
    if refused_occupy:
        others[refused] -= 1
    observed_free = seen & (others == 0)

    return StepOutcome(
        time=time,
        context=context,
        actions=actions,
        admitted=admitted,
        payoffs=payoffs,
        observed=observed,
        observed_free=observed_free,
        accessor_count=counts,
        occupancy=occupancy,
    )
