"""
Stubborn opinions, updated one agent at a time
==============================================

Ten agents hold opinions on three topics and are partly anchored to their
initial views (Friedkin-Johnsen). We first find the equilibrium with the
synchronous iteration, then compare asynchronous runs in which a single
random agent updates at each tick:

* A1: uniform activation, fresh information;
* A2: skewed activation (the rarest agent wakes up with probability 0.0191);
* A3: uniform activation, neighbor information up to the admissible delay;
* A4: delays of up to 50 ticks, beyond any guarantee.

One synchronous round is compared with ten asynchronous ticks.
"""

# %%
import numpy as np

from netgame import AsyncConfig, build_friedkin_johnsen, delay_bound, run_async, run_sync, skewed_probabilities
from netgame.async_sim import max_admissible_delay
from netgame.models import random_fj_instance

N, n = 10, 3
profile, matrix = random_fj_instance(N, n, rng=0, mu_values=(0.5, 0.1), min_self_loop=0.6, max_self_loop=0.8)
game = build_friedkin_johnsen(profile, matrix)

# %% [markdown]
# The delay guarantee depends on the smallest self-loop. With self-loops of
# at least 0.6 it admits delays of a couple of ticks.

# %%
a_floor = matrix.min_self_loop
print(f"smallest self-loop {a_floor:.3f}; delay bound {delay_bound(N, 1 / N, a_floor):.3f}")
phi = max_admissible_delay(N, 1 / N, a_floor)
print("largest admissible integer delay:", phi)

# %%
sync = run_sync(game, profile.x0, tol=1e-10)
print(f"synchronous: {sync.iterations} rounds, residual {sync.final_residual:.2e}")
print("equilibrium opinions (agent x topic):")
print(np.round(sync.final.reshape(N, n), 4))

# %%
scenarios = {
    "A1": AsyncConfig.uniform(N),
    "A2": AsyncConfig(skewed_probabilities(N, 0.0191, rng=1)),
    "A3": AsyncConfig.uniform(N, max_delay=phi),
    "A4": AsyncConfig.uniform(N, max_delay=50),
}
curves = {"sync": np.asarray(sync.residuals)}
for name, cfg in scenarios.items():
    for seed in range(5):
        run = AsyncConfig(cfg.activation_probs, cfg.max_delay, rng_seed=seed)
        rec = run_async(game, profile.x0, run, tol=1e-10, max_iter=500_000, store_every=10**7)
        gap = np.max(np.abs(rec.final - sync.final))
        print(f"{name} seed {seed}: {rec.iterations:6d} ticks, converged {rec.converged}, distance to sync {gap:.1e}")
        if seed == 0:
            curves[name] = np.asarray(rec.residuals)

# %% [markdown]
# Residual after every round (N ticks). Skewed activation and long delays
# slow convergence down.

# %%
print("round " + " ".join(f"{k:>9s}" for k in curves))
for r in (1, 5, 10, 20, 40, 80, 160):
    row = [f"{c[r - 1]:9.2e}" if r - 1 < len(c) else f"{'-':>9s}" for c in curves.values()]
    print(f"{r:5d} " + " ".join(row))
