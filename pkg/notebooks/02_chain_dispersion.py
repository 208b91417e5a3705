# %% [markdown]
# Quench spectroscopy on a 56-site ring.  One site is flipped, the local field
# is recorded, and the peak of the 2D Fourier transform along each momentum is
# compared with the quasiparticle band.

# %%
import numpy as np

from adqc_sim.fermion import BdGSystem, x_basis_field
from adqc_sim.magnon import MagnonModel, field_z, omega_peak_z
from adqc_sim.model import dispersion_exact
from adqc_sim.spectral import SpaceTimeField, compare_dispersion, fft2, ridge

L, delta, J = 56, 2.0, -0.6
t = 0.1 * np.arange(200)

# %%
values = x_basis_field(BdGSystem.uniform(L, delta, J), 0, t)
spec = fft2(SpaceTimeField.from_samples(values, t, "x"), pad=4)
ks, peaks, contrast, good = ridge(spec)
dev, rms = compare_dispersion(peaks[good], dispersion_exact(delta, J, ks[good]), spec.bin_width)
print(f"x basis: {good.sum()}/{L} momenta resolved, max {dev:.2f} bin, rms {rms:.2f} bin")
for k, w in list(zip(ks, peaks))[::8]:
    print(f"  k = {k:+.3f}  peak {w:.3f} GHz  band {dispersion_exact(delta, J, k):.3f} GHz")

# %%
# the z basis only sees energy differences inside the one-excitation band
m = MagnonModel(delta, J, L)
spec_z = fft2(field_z(m, t), pad=4)
ks, peaks, _, good = ridge(spec_z)
target = np.abs(omega_peak_z(m, ks)[0])
print("z basis: max deviation %.2f bin" % compare_dispersion(peaks[good], target[good],
                                                             spec_z.bin_width)[0])
