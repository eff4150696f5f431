import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anticoord.engine import Simulation
from anticoord.game import (IDLE, YIELD, GameConfig, access, context_signal, payoff,
                            resolve_step)


def test_payoff_cases():
    assert payoff(YIELD) == 0.0
    assert payoff(access(3), 1) == 1.0
    assert payoff(access(3), 2, collision_cost=-1.0) == -1.0
    assert payoff(access(1), 5, collision_cost=-0.3) == -0.3
    assert payoff(IDLE) == 0.0


def test_payoff_requires_self_in_count():
    with pytest.raises(ValueError):
        payoff(access(2), 0)


def test_access_rejects_bad_resource():
    with pytest.raises(ValueError):
        access(0)


@pytest.mark.parametrize("t,K,want", [(0, 4, 1), (7, 4, 4), (4, 4, 1), (16, 16, 1)])
def test_context_signal(t, K, want):
    assert context_signal(t, K) == want


def test_context_signal_errors():
    with pytest.raises(ValueError):
        context_signal(-1, 3)
    with pytest.raises(ValueError):
        context_signal(0, 0)


@given(st.integers(1, 50), st.integers(0, 10**6))
def test_context_period_and_uniformity(K, t0):
    window = [context_signal(t, K) for t in range(t0, t0 + K)]
    assert sorted(window) == list(range(1, K + 1))
    assert context_signal(t0 + K, K) == context_signal(t0, K)


def test_config_defaults_and_validation():
    cfg = GameConfig.default(17, 4)
    assert cfg.context_size == 5 and not cfg.nondefault_context
    assert GameConfig(16, 4, 3).nondefault_context
    assert math.isclose(cfg.backoff_prob, 2 - math.sqrt(2))
    assert cfg.n_actions == 5
    for bad in (dict(collision_cost=0.0), dict(discount=1.0), dict(backoff_prob=0.0),
                dict(horizon=0), dict(indifference_period=-1), dict(seed=-1),
                dict(seed=2**64)):
        with pytest.raises(ValueError):
            GameConfig.default(4, 2, **bad)
    with pytest.raises(ValueError):
        GameConfig(0, 1, 1)


def test_resolve_collision():
    out = resolve_step([1, 1], [True, True], n_resources=1, collision_cost=-1.0)
    assert list(out.payoffs) == [-1.0, -1.0]
    assert out.accessor_count[0] == 2
    assert out.collision_resources == 1 and out.success_resources == 0


def test_resolve_access_and_monitor():
    out = resolve_step([1, YIELD], [True, False], monitors=[0, 2], n_resources=2)
    assert list(out.payoffs) == [1.0, 0.0]
    assert out.observed[1] == 2 and out.observed_free[1]
    assert not out.observed_free[0]


def test_resolve_single_agent():
    out = resolve_step([1], [True], n_resources=1)
    assert out.payoffs[0] == 1.0
    assert out.success_resources / out.n_resources == 1.0


def test_resolve_monitor_sees_collision_as_occupied():
    out = resolve_step([1, 1, YIELD], [True, True, False], monitors=[0, 0, 1], n_resources=1)
    assert not out.observed_free[2]


def test_resolve_length_mismatch():
    with pytest.raises(ValueError):
        resolve_step([1, 2], [True], n_resources=2)
    with pytest.raises(ValueError):
        resolve_step([1, 2], [True, True], monitors=[0], n_resources=2)
    with pytest.raises(ValueError):
        resolve_step([3], [True], n_resources=2)


def test_refused_attempt_occupies_channel():
    # agent 1 is over quota: its transmission still collides with agent 0
    out = resolve_step([1, 1], [True, False], n_resources=1)
    assert out.payoffs[0] == -1.0 and out.payoffs[1] == 0.0
    assert out.refused[1] and out.observed[1] == 1 and not out.observed_free[1]
    assert out.accessor_count[0] == 1 and out.occupancy[0] == 2
    # a refused attempt alone blocks the resource but sees it free of others
    out = resolve_step([2], [False], n_resources=2)
    assert out.observed_free[0] and out.blocked_resources == 1


def test_refused_attempt_vanishes_when_configured():
    out = resolve_step([1, 1], [True, False], n_resources=1, refused_occupy=False)
    assert out.payoffs[0] == 1.0 and out.payoffs[1] == 0.0
    assert not out.observed_free[1]


@st.composite
def step_inputs(draw):
    R = draw(st.integers(1, 5))
    n = draw(st.integers(1, 12))
    actions = draw(st.lists(st.integers(-1, R), min_size=n, max_size=n))
    adm = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    mon = draw(st.lists(st.integers(1, R), min_size=n, max_size=n))
    mon = [m if a == YIELD else 0 for a, m in zip(actions, mon)]
    occupy = draw(st.booleans())
    return R, actions, adm, mon, occupy


@given(step_inputs())
def test_resolve_matches_case_analysis(args):
    R, actions, adm, mon, occupy = args
    zeta = -0.7
    out = resolve_step(actions, adm, mon, R, zeta, refused_occupy=occupy)
    # independent oracle from raw actions
    admitted = [a > 0 and ok for a, ok in zip(actions, adm)]
    for i, a in enumerate(actions):
        if not admitted[i]:
            want = 0.0
        else:
            others = sum(1 for j, b in enumerate(actions)
                         if j != i and b == a and (admitted[j] or (occupy and b > 0)))
            want = 1.0 if others == 0 else zeta
        assert out.payoffs[i] == want
    assert set(out.payoffs) <= {0.0, 1.0, zeta}
    assert out.accessor_count.sum() == sum(admitted)
    free = out.occupancy == 0
    coll = out.occupancy >= 2
    assert not np.any(free & coll)
    total = (out.success_resources + out.collision_resources + out.idle_resources
             + out.blocked_resources)
    assert total == R


def test_simulation_deterministic():
    cfg = GameConfig.default(12, 3, seed=42)
    a = Simulation(cfg).run(200)
    b = Simulation(cfg).run(200)
    for x, y in zip(a, b):
        assert np.array_equal(x.actions, y.actions)
        assert np.array_equal(x.payoffs, y.payoffs)
        assert np.array_equal(x.observed, y.observed)
