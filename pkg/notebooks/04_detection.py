# %% [markdown]
# Readout by a detector qubit.  A target-detector pair is quenched and the
# total channel onto the detector's z axis tells which target axis is read
# out and how faithfully.  A second, coupled target blurs the local readout.

# %%
import numpy as np

from adqc_sim.detection import (QuenchSpec, pair_hamiltonian, propagator, readout_axis,
                                total_channel, two_target_fidelity)

spec = QuenchSpec()
u = propagator(pair_hamiltonian(spec), spec.t_grid())
axis = readout_axis(total_channel(u))
print(f"readout axis theta = {axis.theta:.4f}, phi = {axis.phi:.4f}, fidelity {axis.fidelity:.4f}")

# %%
for c in (0.0, 0.1, 0.2, 0.3):
    f = two_target_fidelity(c, spec)
    print(f"target-target coupling {c:.1f}: local {f.local:.4f}, nonlocal {f.nonlocal_:.4f}")
