"""Monitoring authority: per-episode access quotas.

Two bookkeeping modes are supported. ``quota-log`` keeps a flag per agent
telling whether it already succeeded in the current episode. ``currency``
runs the artificial-cash scheme: every agent starts with ``m`` units, an
access costs the resource's current fee (refunded minus a commission on
success, refunded fully on collision), and fees shrink by ``1 - xi`` after
every episode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUOTA_LOG = "quota-log"
CURRENCY = "currency"


class QuotaError(RuntimeError):
    """Raised when the ledger is driven out of protocol."""


@dataclass
class Ledger:
    n_agents: int
    n_resources: int
    mode: str = QUOTA_LOG
    initial_cash: float = 1.0
    commission: float = 1e-3
    invalidation_interval: int | None = None
    episode_success: np.ndarray = field(init=False)
    success_count: np.ndarray = field(init=False)
    balances: np.ndarray = field(init=False)
    fees: np.ndarray = field(init=False)
    episode: int = field(init=False, default=0)
    history: list = field(init=False, default_factory=list)

    def __post_init__(self):
        if self.mode not in (QUOTA_LOG, CURRENCY):
            raise ValueError(f"unknown ledger mode {self.mode!r}")
        if not 0.0 < self.commission < 1.0:
            raise ValueError("commission must lie in (0, 1)")
        if self.invalidation_interval is not None and self.invalidation_interval < 1:
            raise ValueError("invalidation_interval must be >= 1")
        self.episode_success = np.zeros(self.n_agents, dtype=bool)
        # successes recorded in the current episode; the quota audit reads it
        self.success_count = np.zeros(self.n_agents, dtype=np.int64)
        self._reissue()
        self._pending = {}

    def _reissue(self):
        self.balances = np.full(self.n_agents, float(self.initial_cash))
        self.fees = np.full(self.n_resources, float(self.initial_cash))

    def _check_agent(self, agent: int):
        if not 0 <= agent < self.n_agents:
            raise KeyError(f"unknown agent id {agent}")

    def admit(self, agent: int, action: int) -> bool:
        """Decide whether ``agent`` may perform access ``action`` (resource id)."""
        self._check_agent(agent)
        if action < 1:
            raise ValueError("only access actions need admission")
        r = action - 1
        if self.mode == QUOTA_LOG:
            ok = not self.episode_success[agent]
        else:
            ok = self.balances[agent] >= self.fees[r]
            if ok:
                self.balances[agent] -= self.fees[r]
        if ok:
            self._pending[agent] = (r, self.fees[r])
        return bool(ok)

    def record(self, agent: int, resource: int, success: bool) -> None:
        self._check_agent(agent)
        try:
            r, fee = self._pending.pop(agent)
        except KeyError:
            raise QuotaError(f"agent {agent} was not admitted this step") from None
        if r != resource - 1:
            raise QuotaError(f"agent {agent} was admitted to resource {r + 1}, not {resource}")
        if success:
            self.episode_success[agent] = True
            self.success_count[agent] += 1
            if self.mode == CURRENCY:
                self.balances[agent] += (1.0 - self.commission) * fee
        elif self.mode == CURRENCY:
            self.balances[agent] += fee

    def end_episode(self) -> dict:
        """Close the episode and return an audit snapshot of it."""
        if self._pending:
            raise QuotaError("admitted accesses were never recorded")
        snap = {
            "episode": self.episode,
            "max_successes": int(self.success_count.max(initial=0)),
            "successes": self.success_count.tolist(),
        }
        if self.mode == CURRENCY:
            snap["balances"] = self.balances.tolist()
            snap["fees"] = self.fees.tolist()
        self.history.append(snap)
        self.episode += 1
        self.episode_success[:] = False
        self.success_count[:] = 0
        if self.mode == CURRENCY:
            self.fees *= 1.0 - self.commission
            if self.invalidation_interval and self.episode % self.invalidation_interval == 0:
                self._reissue()
        return snap


def episodes_to_halve_fee(commission: float) -> int:
    """Episodes until a fee has decayed to half its issue value.

    Only then could an agent holding the issued cash pay for two accesses at
    once.
    """
    if not 0.0 < commission < 1.0:
        raise ValueError("commission must lie in (0, 1)")
    return math.ceil(math.log(0.5) / math.log1p(-commission))
