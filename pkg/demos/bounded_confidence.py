"""
Extremists, neutrals and a switching network
============================================

Eight agents hold a scalar opinion. Two negative extremists never go
above 0.25, two positive extremists never go below 0.75, and four
neutrals may take any value in [0, 1]. At every step one of three
communication matrices is active, chosen at random.

The matrices are built so that they share an equilibrium. The modified
dynamics, which scale every agent's move by its PF weight under the
active matrix, converge to it for any switching signal.
"""

# %%
import numpy as np

from netgame import run_tv, verify_pnwe
from netgame.models import bounded_confidence_instance

maps, matrices, target = bounded_confidence_instance(rng=6)
for k, m in enumerate(matrices):
    print(f"matrix {k}: PF weights {np.round(m.pf_vector, 3)}")
print("shared equilibrium", np.round(target, 4))

# %%
x0 = np.random.default_rng(60).random(8)
for seed in range(5):
    rec = run_tv(maps, matrices, x0, rng=seed, tol=1e-12, store_every=10**7)
    print(
        f"signal {seed}: {rec.iterations:4d} steps, certificate {verify_pnwe(maps, matrices, rec.final, 1e-8)},",
        np.round(rec.final, 4),
    )

# %% [markdown]
# Extremists stop at the edge of their interval nearest the neutral zone.
# A periodic signal gives the same limit.

# %%
rec = run_tv(maps, matrices, x0, signal=[0, 1, 2], tol=1e-12)
traj = np.asarray(rec.iterates)
for k in (0, 1, 2, 5, 10, 20, 50, rec.iterations):
    print(f"step {k:4d}:", np.round(traj[min(k, len(traj) - 1)], 4))
