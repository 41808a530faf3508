"""
When best responses cycle
=========================

Two agents who simply copy each other never settle: the synchronous
iteration swaps their states forever. Averaging each new state with the
old one (a Krasnoselskii step) removes the cycle. The same thing happens
with a shared constraint: plain constrained best responses oscillate, while
the preconditioned Prox-GNWE iteration converges.
"""

# %%
import numpy as np

from netgame import CouplingConstraints, GameSpec, BoxIndicator, run_prox_gnwe, run_sync
from netgame.gnwe import myopic_step
from netgame.models import example_oscillator

# %% [markdown]
# Copying through ``A = [[0, 1], [1, 0]]``: the states swap at every step,
# so the residual never drops below one.

# %%
game = example_oscillator()
x0 = np.array([1.0, 0.0])
plain = run_sync(game, x0, tol=1e-12, max_iter=1000)
print("plain:   converged", plain.converged, "after", plain.iterations, "steps")
print("         first iterates", [it.tolist() for it in plain.iterates[:4]])
print("         smallest residual", min(plain.residuals))

# %% [markdown]
# Half steps land on the midpoint after one update; the second step
# confirms the fixed point.

# %%
relaxed = run_sync(game, x0, tol=1e-12, relaxation=0.5)
print("relaxed: converged", relaxed.converged, "after", relaxed.iterations, "steps at", relaxed.final)

# %% [markdown]
# A shared constraint ``x1 + x2 = 0`` with averaging weights ``1/2``.
# Each agent projects its preferred value onto the constraint, taking the
# other's current value as fixed. Both move at once, so they overshoot
# together.

# %%
pair = GameSpec([BoxIndicator(1, -10, 10)] * 2, np.full((2, 2), 0.5))
cons = CouplingConstraints.equality([[1.0, 1.0]], [0.0], 2)
x = np.array([1.0, 1.0])
for k in range(5):
    print(f"myopic step {k}: {x}")
    x = myopic_step(pair, cons, x)

# %%
rec = run_prox_gnwe(pair, cons, x0=np.array([1.0, 1.0]), tol=1e-10)
print("Prox-GNWE: converged", rec.converged, "in", rec.iterations, "steps")
print("           limit", rec.final, "multiplier", rec.info["final_sigma"])
print("           certificate", rec.certificate)
print("           parameters", rec.info["params"])
