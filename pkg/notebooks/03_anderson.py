# %% [markdown]
# Staggered initial state on a disordered 124-site ring.  The late-time
# imbalance grows with disorder strength and roughly as W^2 at weak disorder.

# %%
import numpy as np

from adqc_sim.fermion import (BdGSystem, disorder_ensemble, fit_quadratic_scaling,
                              imbalance, staggered_sites, tau_x_series)

L = 124
t = 0.1 * np.arange(201)
late = t >= 15
template = BdGSystem.uniform(L, 2.0, 0.2)
sites = staggered_sites(L)


def late_imbalance(W, n=40):
    vals = [np.mean(imbalance(tau_x_series(s, sites, t), t).values[late])
            for s in disorder_ensemble(template, W, n, seed=[1234, int(round(1000 * W))])]
    return np.mean(vals), np.std(vals, ddof=1) / np.sqrt(n)


# %%
results = {W: late_imbalance(W) for W in (0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 8.0)}
for W, (m, e) in results.items():
    print(f"W = {W:3.1f}  I_late = {m:.4f} +- {e:.4f}")

# %%
small = [0.5, 1.0, 1.5, 2.0]
fit = fit_quadratic_scaling(small, [results[W][0] for W in small])
print(f"I ~ {fit.coefficient:.4f} W^{fit.exponent:.2f}")
