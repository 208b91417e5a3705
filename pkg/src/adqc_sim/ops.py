"""Pauli matrices and many-qubit operator embedding.

Basis convention: site 0 is the leftmost tensor factor (most significant bit),
and ``|0>`` is the +1 eigenstate of sigma^z.  Operators named ``sigma`` live in
the rotated (energy) basis in which the single-qubit gap term is diagonal;
the laboratory (flux) Paulis ``tau`` are related by

    sigma^x = -tau^z,   sigma^y = tau^y,   sigma^z = tau^x.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma^- lowers |1> to |0>, i.e. relaxes towards the +1 eigenstate of sigma^z
SM = np.array([[0, 1], [0, 0]], dtype=complex)
SP = SM.conj().T
PAULIS = {"i": I2.astype(complex), "x": SX, "y": SY, "z": SZ}

# columns are the rotated-basis states |0>, |1> written in the lab basis
ROTATED_TO_LAB = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def site_op(op: np.ndarray, site: int, length: int) -> np.ndarray:
    """Embed a single-site operator at ``site`` of an ``length``-site register."""
    mats = [I2] * length
    mats[site] = op
    return kron_all(mats)


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of Paulis, e.g. ``"zx"`` -> sigma^z (x) sigma^x."""
    return kron_all([PAULIS[c] for c in label.lower()])


def product_state(bits) -> np.ndarray:
    """Computational basis state; ``bits[i] = 1`` marks an excitation on site i."""
    bits = list(bits)
    index = 0
    for b in bits:
        index = 2 * index + int(b)
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[index] = 1.0
    return psi


def z_diagonal(site: int, length: int) -> np.ndarray:
    """Diagonal of sigma^z_site in the computational basis (real +-1 array)."""
    idx = np.arange(2 ** length)
    bit = (idx >> (length - 1 - site)) & 1
    return 1.0 - 2.0 * bit


def to_lab_basis(obj: np.ndarray, length: int) -> np.ndarray:
    """Express a rotated-basis state vector or operator in the lab (tau) basis."""
    V = kron_all([ROTATED_TO_LAB] * length)
    obj = np.asarray(obj)
    if obj.ndim == 1:
        return V @ obj
    return V @ obj @ V.conj().T


def to_rotated_basis(obj: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`to_lab_basis`."""
    V = kron_all([ROTATED_TO_LAB] * length)
    obj = np.asarray(obj)
    if obj.ndim == 1:
        return V.conj().T @ obj
    return V.conj().T @ obj @ V
