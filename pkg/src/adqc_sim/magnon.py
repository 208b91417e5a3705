"""Single-excitation (magnon) predictions for a clean periodic chain.

One excitation on top of the all-ground state hops with amplitude J/2 and
so disperses as ``E(k) = delta + J cos k`` on the momenta ``k = 2 pi m / L``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RegimeWarning
from .spectral import SpaceTimeField


@dataclass(frozen=True)
class MagnonModel:
    delta: float
    coupling: float
    length: int
    periodic: bool = True

    def __post_init__(self):
        if not self.periodic:
            raise DomainError("the magnon model is defined for periodic chains only")
        if self.length < 2 or self.length % 2:
            raise DomainError("chain length must be even and >= 2")
        ratio = abs(self.coupling / self.delta)
        if ratio >= 1:
            raise DomainError(f"|J/delta| = {ratio:.3g} outside the weak-coupling model")
        if ratio > 0.3 + 1e-12:
            warnings.warn(f"|J/delta| = {ratio:.3g} > 0.3; first-order model is rough",
                          RegimeWarning)

    @property
    def k_grid(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.length) / self.length

    @property
    def light_cone_velocity(self) -> float:
        """Maximal group velocity in sites per ns."""
        return 2 * np.pi * abs(self.coupling)


def e_eff(model: MagnonModel, k):
    return model.delta + model.coupling * np.cos(np.asarray(k, dtype=float))


def _phases(model: MagnonModel, n, t):
    """``exp(i (k n - 2 pi E(k) t))`` with trailing axis over k."""
    k = model.k_grid
    n = np.asarray(n, dtype=float)[..., None]
    t = np.asarray(t, dtype=float)[..., None]
    return np.exp(1j * (k * n - 2 * np.pi * e_eff(model, k) * t))


def m_x_profile(model: MagnonModel, n, t):
    """``<sigma^x_n(t)>`` after a pi/2 rotation of site 0; broadcasts over n and t."""
    return np.real(np.mean(_phases(model, n, t), axis=-1))


def excitation_density(model: MagnonModel, n, t):
    """Probability that site ``n`` is excited at time ``t`` when site 0 started excited."""
    return np.abs(np.mean(_phases(model, n, t), axis=-1)) ** 2


def omega_peak_x(model: MagnonModel, k) -> tuple:
    e = e_eff(model, k)
    return e, -e


def omega_peak_z(model: MagnonModel, k) -> tuple:
    w = 2 * model.coupling * np.sin(np.asarray(k, dtype=float) / 2)
    return w, -w


def field_x(model: MagnonModel, t_grid, source: int = 0) -> SpaceTimeField:
    """Space-time ``m_x`` field on the uniform grid ``t_grid``."""
    n = (np.arange(model.length) - source)[:, None]
    return SpaceTimeField.from_samples(m_x_profile(model, n, np.asarray(t_grid)[None, :]),
                                       t_grid, basis="x")


def field_z(model: MagnonModel, t_grid, source: int = 0) -> SpaceTimeField:
    """Space-time excitation-density field on the uniform grid ``t_grid``."""
    n = (np.arange(model.length) - source)[:, None]
    rho = excitation_density(model, n, np.asarray(t_grid)[None, :])
    return SpaceTimeField.from_samples(rho, t_grid, basis="z")
