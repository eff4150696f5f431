"""Adversarial bandit baselines: EXP3, CEXP3, EXP4 and EXP4.P.

Arm 0 is yielding and arm ``r`` accesses resource ``r``, so every learner
has ``R + 1`` arms. Stage payoffs ``{collision_cost, 0, 1}`` are mapped
affinely onto ``[0, 1]`` before the importance-weighted update.

Tuning follows the original algorithms' horizon-based prescriptions:

* EXP3 (Auer et al., 2002): ``gamma = min(1, sqrt(A ln A / ((e - 1) T)))``.
* EXP4 (Auer et al., 2002): ``gamma = min(1, sqrt(A ln M / ((e - 1) T)))`` for
  ``M`` experts.
* EXP4.P (Beygelzimer et al., 2011): ``p_min = sqrt(ln M / (A T))`` and a
  confidence term ``sqrt(ln(M / delta) / (A T))`` with ``delta = 0.05``.

CEXP3 runs an independent EXP3 per context, each tuned for ``T / K`` rounds.
Weights are kept on a linear scale and rescaled whenever their sum leaves
``[1e-200, 1e200]``; entries are floored at ``1e-300`` so they stay positive.
"""
from __future__ import annotations

import math

import numpy as np

from .game import YIELD

EXP3 = "exp3"
CEXP3 = "cexp3"
EXP4 = "exp4"
EXP4P = "exp4p"
VARIANTS = (EXP3, CEXP3, EXP4, EXP4P)

FAILURE_PROB = 0.05
_TINY = 1e-300
_BIG = 1e200


def map_reward(reward: float, collision_cost: float = -1.0) -> float:
    if not collision_cost - 1e-12 <= reward <= 1.0 + 1e-12:
        raise ValueError(f"reward {reward} outside [{collision_cost}, 1]")
    return (reward - collision_cost) / (1.0 - collision_cost)


def exp3_gamma(n_arms: int, horizon: float) -> float:
    return min(1.0, math.sqrt(n_arms * math.log(n_arms) / ((math.e - 1.0) * horizon)))


def exp4_gamma(n_arms: int, n_experts: int, horizon: float) -> float:
    return min(1.0, math.sqrt(n_arms * math.log(n_experts) / ((math.e - 1.0) * horizon)))


def exp4p_params(n_arms: int, n_experts: int, horizon: float,
                 failure_prob: float = FAILURE_PROB) -> tuple[float, float]:
    """Return ``(p_min, confidence_term)``."""
    p_min = min(1.0 / n_arms, math.sqrt(math.log(n_experts) / (n_arms * horizon)))
    bonus = math.sqrt(math.log(n_experts / failure_prob) / (n_arms * horizon))
    return p_min, bonus


def build_fair_expert_set(R: int, K: int) -> np.ndarray:
    """Single-slot schedules: expert ``(r, k)`` accesses ``r`` at context ``k`` only.

    Returned as an ``(R*K, K)`` table of actions; row ``(k-1)*R + (r-1)``
    belongs to expert ``(r, k)``.
    """
    if R < 1 or K < 1:
        raise ValueError("R and K must be >= 1")
    experts = np.full((R * K, K), YIELD, dtype=np.int64)
    for k in range(K):
        for r in range(R):
            experts[k * R + r, k] = r + 1
    return experts


def sample_arm(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF draw; same accumulation order as the compiled kernels.

    Falls back to the last arm if rounding leaves ``u`` above the total mass.
    """
    x = u
    acc = 0.0
    last = len(probs) - 1
    for a in range(last):
        acc += probs[a]
        if x < acc:
            return a
    return last


class BanditAgent:
    """One exponential-weights learner.

    ``horizon`` is the number of rounds the tuning assumes. ``experts`` is
    an ``(M, K)`` action table and is required for the EXP4 variants.
    """

    def __init__(self, variant: str, n_resources: int, context_size: int,
                 horizon: int, collision_cost: float = -1.0, experts=None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown bandit variant {variant!r}")
        self.variant = variant
        self.kind = variant
        self.n_resources = n_resources
        self.n_arms = n_resources + 1
        self.context_size = context_size
        self.horizon = horizon
        self.collision_cost = collision_cost
        A = self.n_arms
        if variant in (EXP3, CEXP3):
            n_sets = context_size if variant == CEXP3 else 1
            self.weights = np.ones((n_sets, A))
            rounds = horizon / n_sets
            self.gamma = exp3_gamma(A, rounds)
            self.experts = None
        else:
            if experts is None:
                experts = build_fair_expert_set(n_resources, context_size)
            experts = np.asarray(experts, dtype=np.int64)
            if experts.ndim != 2 or experts.shape[1] != context_size:
                raise ValueError("experts must be an (M, K) table of actions")
            if experts.min() < 0 or experts.max() > n_resources:
                raise ValueError("expert advice must be a valid action")
            self.experts = experts
            M = len(experts)
            self.weights = np.ones(M)
            if variant == EXP4:
                self.gamma = exp4_gamma(A, M, horizon)
                self.p_min, self.bonus = 0.0, 0.0
            else:
                self.p_min, self.bonus = exp4p_params(A, M, horizon)
                self.gamma = A * self.p_min
        self._probs = None

    @property
    def floor(self) -> float:
        """Smallest probability any arm can get."""
        return self.p_min if self.variant == EXP4P else self.gamma / self.n_arms

    def probabilities(self, context: int) -> np.ndarray:
        A = self.n_arms
        if self.experts is None:
            w = self.weights[(context - 1) if self.variant == CEXP3 else 0]
            return (1.0 - self.gamma) * w / w.sum() + self.gamma / A
        advice = self.experts[:, context - 1]
        mass = np.bincount(advice, weights=self.weights, minlength=A)
        return (1.0 - self.gamma) * mass / self.weights.sum() + self.floor

    def select_arm(self, context: int, u: float) -> int:
        self._probs = self.probabilities(context)
        return sample_arm(self._probs, u)

    def update(self, context: int, chosen: int, reward: float) -> None:
        """Importance-weighted update after playing ``chosen`` at ``context``."""
        x = map_reward(reward, self.collision_cost)
        probs = self._probs if self._probs is not None else self.probabilities(context)
        self._probs = None
        A = self.n_arms
        pa = probs[chosen]
        if self.experts is None:
            row = self.weights[(context - 1) if self.variant == CEXP3 else 0]
            row[chosen] *= math.exp(self.gamma * x / (pa * A))
            if row.sum() > _BIG:
                row[:] = np.maximum(row / row.sum(), _TINY)
            return
        advice = self.experts[:, context - 1]
        if self.variant == EXP4:
            gain = np.where(advice == chosen, x / pa, 0.0)
            self.weights *= np.exp(self.gamma * gain / A)
        else:
            r_hat = np.zeros(A)
            r_hat[chosen] = x / pa
            y_hat = r_hat[advice]
            v_hat = 1.0 / probs[advice]
            self.weights *= np.exp(0.5 * self.p_min * (y_hat + v_hat * self.bonus))
        total = self.weights.sum()
        if total > _BIG or total < 1.0 / _BIG:
            self.weights = np.maximum(self.weights / total, _TINY)

    # agent protocol used by the object engine
    def act(self, context: int, u: float) -> int:
        return self.select_arm(context, u)
