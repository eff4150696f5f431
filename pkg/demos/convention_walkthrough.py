"""Watch sixteen courteous agents settle onto four channels.

Each agent follows a per-context table. On a collision it backs off with
probability p; while yielding it listens to a random channel and claims it
if the channel was idle. Within a few dozen steps every context has exactly
one owner per channel, and each agent gets exactly one slot per episode.

    python3 demos/convention_walkthrough.py
"""
import numpy as np

from anticoord import GameConfig, Simulation, utilization

cfg = GameConfig(n_agents=16, n_resources=4, context_size=4, seed=3)
sim = Simulation(cfg, "canony")

for t in range(120):
    out = sim.step()
    if t % 8 == 0 or t < 8:
        bad = int((out.payoffs < 0).sum())
        print(f"t={t:3d} context={out.context} utilization={utilization(out):.2f} "
              f"collided agents={bad}")

# one more episode: who holds which channel in each context
print("\nlast episode, channel owners per context:")
for _ in range(cfg.context_size):
    out = sim.step()
    owners = {int(out.actions[i]): i for i in np.flatnonzero(out.payoffs == 1.0)}
    print(f"  context {out.context}: " + ", ".join(
        f"ch{r}->agent{owners[r]}" for r in sorted(owners)))
