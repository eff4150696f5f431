"""Exact chain solves against Monte Carlo, and the optimal back-off.

    python3 demos/theory_checks.py
"""
import math

from anticoord import theory as th

for p in (0.25, 2 - math.sqrt(2), 0.9):
    spec = th.DTMCSpec(th.X_CHAIN, 32, p)
    exact = th.hitting_time(spec)[32]
    mc = th.simulate_chain(spec, 32, n_paths=20_000, rng=1)
    print(f"p={p:.3f}: solve {exact:7.3f}  monte carlo {mc.mean_steps:7.3f} +- {mc.steps_stderr:.3f}")

print("grid argmin of the back-off factor:", th.grid_argmin_backoff(1e-4))
print("2 - sqrt(2)                       :", 2 - math.sqrt(2))

b = th.BoundParams(N=16, R=4, K=4, delta=1 - 1e-6, E_X=50)  # episodes
print("payoff ratio at delta = 1 - 1e-6, E(X)=50:", round(th.spe_payoff_ratio(b).ratio, 6))
