"""Dense state-vector oracle for short chains.

Hamiltonians are assembled directly in the computational basis of the
rotated frame.  Both the transverse-field Ising form and its rotating-wave
XY reduction are real symmetric, so they are stored as float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SizeError
from .model import EffectiveXYModel
from .ops import z_diagonal

MAX_EXACT_LENGTH = 12
MAX_RWA_LENGTH = 10


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Hermitian matrix with a lazily computed, cached eigendecomposition."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator must be a square matrix")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("operator is not Hermitian")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]


def _check_size(length: int, limit: int = MAX_EXACT_LENGTH) -> None:
    if length > limit:
        raise SizeError(f"dense construction limited to L <= {limit}, got {length}")


def _diagonal_part(model: EffectiveXYModel, include_gap: bool) -> np.ndarray:
    L = model.length
    energies = model.site_energies if include_gap else model.detunings
    diag = np.zeros(2 ** L)
    for i in range(L):
        diag -= 0.5 * energies[i] * z_diagonal(i, L)
    return diag


def build_tfim(model: EffectiveXYModel) -> DenseOperator:
    """``-(1/2) sum (delta + detuning_i) Z_i + sum (J_ij / 2) X_i X_j``."""
    L = model.length
    _check_size(L)
    H = np.diag(_diagonal_part(model, include_gap=True))
    idx = np.arange(2 ** L)
    for (i, j), J in zip(model.bonds, model.couplings):
        mask = (1 << (L - 1 - i)) | (1 << (L - 1 - j))
        H[idx ^ mask, idx] += 0.5 * J
    return DenseOperator(H)


def build_xy(model: EffectiveXYModel, include_gap: bool = False) -> DenseOperator:
    """``sum (J_ij / 4)(X_i X_j + Y_i Y_j) - sum (detuning_i / 2) Z_i``.

    With ``include_gap`` the frame term ``-(delta/2) sum Z_i`` is added back,
    giving the rotating-wave Hamiltonian in the lab frame.  It commutes with
    the rest, so ``<Z_i>`` is unaffected.
    """
    L = model.length
    _check_size(L)
    H = np.diag(_diagonal_part(model, include_gap=include_gap))
    idx = np.arange(2 ** L)
    for (i, j), J in zip(model.bonds, model.couplings):
        bi = (idx >> (L - 1 - i)) & 1
        bj = (idx >> (L - 1 - j)) & 1
        hop = idx[bi != bj]
        mask = (1 << (L - 1 - i)) | (1 << (L - 1 - j))
        # XX + YY = 2 (|01><10| + |10><01|)
        H[hop ^ mask, hop] += 0.5 * J
    return DenseOperator(H)


def evolve_state(h: DenseOperator, psi0, t) -> np.ndarray:
    """``exp(-2j pi H t) psi0`` for scalar ``t`` or an array of times.

    With an array of times the result has shape ``(len(t), dim)``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.dim,):
        raise ValueError(f"state has shape {psi0.shape}, operator dimension is {h.dim}")
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state is not normalized")
    w, V = h.eigh
    coeff = V.conj().T @ psi0
    t_arr = np.asarray(t, dtype=float)
    phases = np.exp(-2j * np.pi * np.multiply.outer(np.atleast_1d(t_arr), w))
    out = (phases * coeff) @ V.T
    return out[0] if t_arr.ndim == 0 else out


def z_expectations(states: np.ndarray, length: int) -> np.ndarray:
    """``<Z_i>`` for a trajectory of states, shape ``(T, L)``."""
    probs = np.abs(np.atleast_2d(states)) ** 2
    zd = np.stack([z_diagonal(i, length) for i in range(length)], axis=1)
    return probs @ zd


def x_expectations(states: np.ndarray, length: int) -> np.ndarray:
    """``<X_i>`` for a trajectory of states, shape ``(T, L)``."""
    states = np.atleast_2d(states)
    idx = np.arange(2 ** length)
    out = np.empty((states.shape[0], length))
    for i in range(length):
        flipped = states[:, idx ^ (1 << (length - 1 - i))]
        out[:, i] = np.real(np.sum(states.conj() * flipped, axis=1))
    return out


def rwa_error(model: EffectiveXYModel, psi0, t_grid) -> float:
    """Largest deviation of ``<Z_i(t)>`` between the Ising and XY evolutions.

    ``<Z_i>`` commutes with the frame rotation generated by the gap term, so
    it can be compared directly between the lab and rotating frames.
    """
    L = model.length
    _check_size(L, MAX_RWA_LENGTH)
    t_grid = np.asarray(t_grid, dtype=float)
    z_full = z_expectations(evolve_state(build_tfim(model), psi0, t_grid), L)
    z_rwa = z_expectations(evolve_state(build_xy(model), psi0, t_grid), L)
    return float(np.max(np.abs(z_full - z_rwa)))
