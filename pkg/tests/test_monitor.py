import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anticoord.batch import simulate_reference
from anticoord.engine import Simulation
from anticoord.game import GameConfig
from anticoord.monitor import (CURRENCY, QUOTA_LOG, Ledger, QuotaError,
                               episodes_to_halve_fee)


def test_quota_log_admission():
    led = Ledger(2, 2)
    assert led.admit(0, 1)
    led.record(0, 1, True)
    assert not led.admit(0, 2)
    assert led.admit(1, 2)
    led.record(1, 2, False)
    assert led.admit(1, 2)
    led.record(1, 2, True)
    snap = led.end_episode()
    assert snap["max_successes"] == 1
    assert not led.episode_success.any()
    assert led.admit(0, 1)


def test_ledger_errors():
    led = Ledger(2, 2)
    with pytest.raises(KeyError):
        led.admit(5, 1)
    with pytest.raises(ValueError):
        led.admit(0, 0)
    with pytest.raises(QuotaError):
        led.record(0, 1, True)
    led.admit(0, 1)
    with pytest.raises(QuotaError):
        led.record(0, 2, True)
    led.admit(1, 1)
    with pytest.raises(QuotaError):
        led.end_episode()
    with pytest.raises(ValueError):
        Ledger(2, 2, mode="barter")
    with pytest.raises(ValueError):
        Ledger(2, 2, commission=0.0)


def test_currency_success_and_collision():
    xi = 0.01
    led = Ledger(2, 1, CURRENCY, initial_cash=1.0, commission=xi)
    assert led.admit(0, 1)
    assert led.balances[0] == 0.0
    led.record(0, 1, True)
    assert math.isclose(led.balances[0], 1 - xi)
    assert not led.admit(0, 1)
    assert led.admit(1, 1)
    led.record(1, 1, False)
    assert led.balances[1] == 1.0


def test_currency_fee_decay_and_reissue():
    led = Ledger(1, 2, CURRENCY, commission=0.01, invalidation_interval=3)
    led.end_episode()
    assert np.allclose(led.fees, [0.99, 0.99])
    led.end_episode()
    assert np.allclose(led.fees, [0.99**2] * 2)
    led.end_episode()
    assert np.allclose(led.fees, [1.0, 1.0]) and led.balances[0] == 1.0
    assert "fees" in led.history[0] and len(led.history) == 3


def test_fee_halving_time():
    assert episodes_to_halve_fee(0.001) == 693
    xi = 0.001
    t = episodes_to_halve_fee(xi)
    assert (1 - xi) ** t <= 0.5 < (1 - xi) ** (t - 1)
    grid = [0.1, 0.03, 0.01, 0.003, 0.001, 1e-4, 1e-5]
    times = [episodes_to_halve_fee(x) for x in grid]
    assert all(a < b for a, b in zip(times, times[1:]))
    for x, n in zip(grid, times):
        assert abs(n - math.log(2) / x) <= 1 + math.log(2)


def _currency_run(successes, xi, interval=None):
    """Drive one agent through episodes; ``successes[e]`` says whether it succeeds."""
    led = Ledger(1, 3, CURRENCY, commission=xi, invalidation_interval=interval)
    after = []
    for ok in successes:
        if ok:
            assert led.admit(0, 1)
            led.record(0, 1, True)
            after.append((led.balances[0], led.fees.min()))
        led.end_episode()
    return after


@given(st.integers(1, 400), st.floats(1e-4, 0.1))
def test_currency_invariant_for_compliant_agent(episodes, xi):
    # an agent that succeeds once in every episode can never afford a second access
    for bal, fee in _currency_run([True] * episodes, xi):
        assert bal < fee


@given(st.lists(st.booleans(), min_size=1, max_size=60), st.floats(1e-4, 0.1))
def test_currency_invariant_with_reissue_every_episode(pattern, xi):
    for bal, fee in _currency_run(pattern, xi, interval=1):
        assert bal < fee


@given(st.floats(1e-4, 0.05))
def test_two_concurrent_accesses_need_halved_fee(xi):
    # with the issued cash an agent can pay two fees at once only after the fee halved
    n = episodes_to_halve_fee(xi)
    fee = lambda e: (1 - xi) ** e
    assert 1.0 < 2 * fee(n - 1) and 1.0 >= 2 * fee(n) * (1 - 1e-12)


def test_quota_audit_over_full_traces():
    for alg in ("canony", "exp3", "cexp3", "exp4", "exp4p"):
        ledgers = []
        cfg = GameConfig.default(9, 3, seed=11, horizon=900)
        rep = simulate_reference(cfg, alg, runs=2, ledgers=ledgers)
        assert rep.max_successes_per_episode <= 1
        for led in ledgers:
            assert len(led.history) == 900 // 3
            assert max(h["max_successes"] for h in led.history) <= 1


def test_modes_agree_for_convention_agents():
    cfg = GameConfig.default(16, 4, seed=5)
    a = Simulation(cfg, ledger_mode=QUOTA_LOG)
    b = Simulation(cfg, ledger_mode=CURRENCY, commission=1e-3)
    for _ in range(1000):
        x, y = a.step(), b.step()
        assert np.array_equal(x.admitted, y.admitted)
        assert np.array_equal(x.actions, y.actions)
        assert np.array_equal(x.payoffs, y.payoffs)
