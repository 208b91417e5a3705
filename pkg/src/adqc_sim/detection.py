"""Superoperator model of detector-based readout.

Density matrices are vectorized row-major, ``vec(rho)[a * d + b] = rho[a, b]``,
so that ``vec(A rho B) = kron(A, B.T) vec(rho)`` and unitary propagation is
``kron(U, conj(U))``.  In joint registers the detector factor comes first.

The physical quench model works in the lab (flux) basis of each qubit,
where the detector's persistent-current state is the ``tau^z`` basis.  The
returned readout axis is therefore expressed in that basis; use
:meth:`ReadoutAxis.to_energy_basis` to obtain it in the rotated frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable

import numpy as np

from .errors import AccuracyError, PhysicalityError
from .model import AnnealSchedule
from .ops import I2, SX, SY, SZ

PAULI_BASIS = (I2.astype(complex), SX, SY, SZ)


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map between vectorized operators on registers ``dims_in`` -> ``dims_out``."""

    matrix: np.ndarray
    dims_in: tuple = (2,)
    dims_out: tuple = (2,)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d_in, d_out = int(np.prod(self.dims_in)), int(np.prod(self.dims_out))
        if m.shape != (d_out ** 2, d_in ** 2):
            raise ValueError(f"matrix shape {m.shape} does not fit dims "
                             f"{self.dims_in} -> {self.dims_out}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims_in", tuple(self.dims_in))
        object.__setattr__(self, "dims_out", tuple(self.dims_out))

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if self.dims_in != other.dims_out:
            raise ValueError(f"cannot compose {other.dims_out} into {self.dims_in}")
        return Superoperator(self.matrix @ other.matrix, other.dims_in, self.dims_out)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def trace_error(self) -> float:
        """Distance of ``vec(I_out)^T S`` from ``vec(I_in)^T`` (zero for trace preservation)."""
        d_in, d_out = int(np.prod(self.dims_in)), int(np.prod(self.dims_out))
        left = vec(np.eye(d_out)) @ self.matrix
        return float(np.max(np.abs(left - vec(np.eye(d_in)))))


def s_prep(n_pairs: int = 1) -> Superoperator:
    """Attach detectors in ``|+><+|`` ahead of ``n_pairs`` target qubits.

    For one pair the map is ``(1/2) sum |j i l k><i k|`` with ``(i, k)`` the
    target row/column and ``(j, l)`` the detector row/column.
    """
    plus = np.full((2, 2), 0.5)
    dt = 2 ** n_pairs
    det = reduce(np.kron, [plus] * n_pairs)
    m = np.zeros(((dt * dt) ** 2, dt ** 2))
    for col in range(dt ** 2):
        basis = np.zeros(dt ** 2)
        basis[col] = 1.0
        m[:, col] = vec(np.kron(det, unvec(basis)))
    return Superoperator(m, (2,) * n_pairs, (2,) * (2 * n_pairs))


def s_prop_from_unitary(u: np.ndarray) -> Superoperator:
    u = np.asarray(u, dtype=complex)
    n = int(round(np.log2(u.shape[0])))
    return Superoperator(np.kron(u, u.conj()), (2,) * n, (2,) * n)


def s_ptrace(n_pairs: int = 1) -> Superoperator:
    """Trace out the target half of a detector-first register."""
    dd = dt = 2 ** n_pairs
    m = np.zeros(((dd) ** 2, (dd * dt) ** 2))
    for a in range(dd):
        for b in range(dd):
            for t in range(dt):
                m[a * dd + b, (a * dt + t) * dd * dt + (b * dt + t)] = 1.0
    return Superoperator(m, (2,) * (2 * n_pairs), (2,) * n_pairs)


def s_dephasing(n_qubits: int = 1) -> Superoperator:
    """Complete dephasing into the computational basis, ``sum |ii><ii|``."""
    d = 2 ** n_qubits
    m = np.zeros((d * d, d * d))
    for i in range(d):
        m[i * d + i, i * d + i] = 1.0
    return Superoperator(m, (2,) * n_qubits, (2,) * n_qubits)


def propagator(hamiltonian_path, t_grid, check_tol: float | None = None) -> np.ndarray:
    """Time-ordered ``U = T exp(-2j pi int H dt)`` over ``t_grid``.

    ``hamiltonian_path`` is either a constant matrix (exact exponential over
    the full span) or a callable ``H(t)``, integrated with midpoint
    exponentials on the grid.  The grid step must satisfy
    ``dt <= 1 / (40 * max|E|)``.  With ``check_tol`` the product is repeated
    on a grid of half the step and the two results must agree to that
    tolerance.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing with at least two points")
    if not callable(hamiltonian_path):
        H = np.asarray(hamiltonian_path, dtype=complex)
        _check_hermitian(H)
        return _expi(H, t[-1] - t[0])
    U = _ordered_product(hamiltonian_path, t)
    if check_tol is not None:
        fine = np.sort(np.concatenate([t, 0.5 * (t[1:] + t[:-1])]))
        err = np.max(np.abs(_ordered_product(hamiltonian_path, fine) - U))
        if err > check_tol:
            raise AccuracyError(f"step halving changed the propagator by {err:.2e}")
    return U


def _expi(h: np.ndarray, dt: float) -> np.ndarray:
    w, V = np.linalg.eigh(h)
    return (V * np.exp(-2j * np.pi * w * dt)) @ V.conj().T


def _ordered_product(hamiltonian_path, t: np.ndarray) -> np.ndarray:
    mids = 0.5 * (t[1:] + t[:-1])
    steps = np.diff(t)
    hs = [np.asarray(hamiltonian_path(tm), dtype=complex) for tm in mids]
    for h in hs:
        _check_hermitian(h)
    emax = max(np.max(np.abs(np.linalg.eigvalsh(h))) for h in hs)
    if emax > 0 and np.max(steps) > 1.0 / (40 * emax) * (1 + 1e-9):
        raise AccuracyError(f"step {np.max(steps):.3g} ns exceeds 1/(40 Emax) = "
                            f"{1 / (40 * emax):.3g} ns")
    U = np.eye(hs[0].shape[0], dtype=complex)
    for h, dt in zip(hs, steps):
        U = _expi(h, dt) @ U
    return U


def _check_hermitian(h):
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise PhysicalityError("Hamiltonian is not Hermitian")


def s_prop(hamiltonian_path, t_grid) -> Superoperator:
    return s_prop_from_unitary(propagator(hamiltonian_path, t_grid))


def total_channel(u_prop: np.ndarray, n_pairs: int = 1) -> Superoperator:
    """``s_dephasing . s_ptrace . s_prop . s_prep`` for a given joint propagator."""
    return (s_dephasing(n_pairs) @ s_ptrace(n_pairs)
            @ s_prop_from_unitary(u_prop) @ s_prep(n_pairs))


def pauli_transfer(channel: Superoperator) -> np.ndarray:
    """``R_ij = Tr(P_i S(P_j)) / d_out`` over Pauli strings (first factor most significant)."""
    n_in, n_out = len(channel.dims_in), len(channel.dims_out)

    def strings(n):
        return [reduce(np.kron, [PAULI_BASIS[k] for k in idx]) for idx in np.ndindex(*(4,) * n)]

    p_in, p_out = strings(n_in), strings(n_out)
    images = np.stack([channel(p) for p in p_in])
    R = np.einsum("iab,jba->ij", np.stack(p_out), images) / 2 ** n_out
    return np.real_if_close(R, tol=1e6).real


@dataclass(frozen=True)
class ReadoutAxis:
    """Bloch direction of the measured target observable and its fidelity ``F``."""

    theta: float
    phi: float
    fidelity: float
    vector: np.ndarray = field(repr=False, default=None)

    def to_energy_basis(self) -> "ReadoutAxis":
        """Re-express a lab-basis axis in the rotated frame, ``(X, Y, Z) -> (-Z, Y, X)``."""
        x, y, z = self.vector
        return _axis_from_vector(np.array([-z, y, x]))


def _axis_from_vector(n: np.ndarray) -> ReadoutAxis:
    F = float(np.linalg.norm(n))
    if F > 1 + 1e-6:
        raise PhysicalityError(f"readout fidelity {F:.6f} exceeds 1")
    if F == 0:
        return ReadoutAxis(0.0, 0.0, 0.0, n)
    theta = float(np.arccos(np.clip(n[2] / F, -1, 1)))
    phi = float(np.mod(np.arctan2(n[1], n[0]), 2 * np.pi))
    return ReadoutAxis(theta, phi, F, n)


def readout_axis(s_tot: Superoperator) -> ReadoutAxis:
    """Axis from the detector-Z row ``(ZX, ZY, ZZ)`` of the single-pair channel."""
    if s_tot.dims_in != (2,) or s_tot.dims_out != (2,):
        raise ValueError("expected a single-qubit to single-qubit channel")
    R = pauli_transfer(s_tot)
    return _axis_from_vector(R[3, 1:].copy())


# -- physical quench model ------------------------------------------------------

@dataclass(frozen=True)
class QuenchSpec:
    """Detector quench: linear ramp of the detector's anneal parameter.

    The target idles at ``s_target``; the detector ramps from ``s_start`` to
    ``s_end`` over ``ramp`` ns and then holds for ``hold`` ns.  ``coupling``
    is the programmed (dimensionless) target-detector coupler, ``tilt`` a
    constant longitudinal field on the detector in GHz.
    """

    schedule: AnnealSchedule = field(default_factory=AnnealSchedule.default)
    s_target: float = 0.5
    s_start: float = 0.5
    s_end: float = 1.0
    ramp: float = 2.0
    hold: float = 1.0
    coupling: float = -0.3
    tilt: float = 0.0
    steps_per_ns: int = 1000

    @property
    def duration(self) -> float:
        return self.ramp + self.hold

    def s_detector(self, t: float) -> float:
        frac = min(max(t / self.ramp, 0.0), 1.0) if self.ramp > 0 else 1.0
        return self.s_start + (self.s_end - self.s_start) * frac

    def t_grid(self) -> np.ndarray:
        n = max(2, int(np.ceil(self.duration * self.steps_per_ns)))
        return np.linspace(0.0, self.duration, n + 1)


def _two_site(a, b):
    return np.kron(a, b)


def pair_hamiltonian(spec: QuenchSpec) -> Callable[[float], np.ndarray]:
    """``H(t)`` of one detector (first factor) coupled to one target, lab basis."""
    sch = spec.schedule
    a_t = float(sch.A(spec.s_target))
    b_t = float(sch.B(spec.s_target))

    def H(t):
        s_d = spec.s_detector(t)
        a_d, b_d = float(sch.A(s_d)), float(sch.B(s_d))
        j = 0.5 * spec.coupling * np.sqrt(b_t * b_d)
        return (-0.5 * a_d * _two_site(SX, I2) - 0.5 * a_t * _two_site(I2, SX)
                + j * _two_site(SZ, SZ) + 0.5 * spec.tilt * _two_site(SZ, I2))
    return H


def pair_channel(spec: QuenchSpec) -> Superoperator:
    return total_channel(propagator(pair_hamiltonian(spec), spec.t_grid()))


def brute_force_axis(u_prop: np.ndarray) -> ReadoutAxis:
    """Process tomography of the readout by explicit density-matrix simulation."""
    plus = np.full((2, 2), 0.5)
    u = np.asarray(u_prop, dtype=complex)
    zd = np.diag([1.0, -1.0])
    n = np.zeros(3)
    for k, P in enumerate((SX, SY, SZ)):
        vals = []
        for sign in (1, -1):
            rho_t = 0.5 * (I2 + sign * P)
            rho = u @ np.kron(plus, rho_t) @ u.conj().T
            rho_d = np.einsum("atbt->ab", rho.reshape(2, 2, 2, 2))
            vals.append(np.real(np.sum(np.diag(rho_d) * np.diag(zd))))
        n[k] = 0.5 * (vals[0] - vals[1])
    return _axis_from_vector(n)


def _embed(op, site, n):
    mats = [I2.astype(complex)] * n
    mats[site] = op
    return reduce(np.kron, mats)


def two_pair_hamiltonian(spec: QuenchSpec, target_coupling: float) -> Callable:
    """Register ``(D1, D2, T1, T2)`` with a ``tau^z tau^z`` coupling between targets."""
    single = pair_hamiltonian(spec)
    zz = 0.5 * target_coupling * _embed(SZ, 2, 4) @ _embed(SZ, 3, 4)

    def H(t):
        h = single(t).reshape(2, 2, 2, 2)
        out = np.zeros((16, 16), dtype=complex)
        # lift the (D, T) pair operator onto (D1, T1) and (D2, T2)
        for d, tq in ((0, 2), (1, 3)):
            out += _lift_pair(h, d, tq)
        return out + zz
    return H


def _lift_pair(h4: np.ndarray, d: int, tq: int) -> np.ndarray:
    """Embed a two-site operator on sites ``(d, tq)`` of a four-qubit register."""
    others = [s for s in range(4) if s not in (d, tq)]
    full = np.einsum("abcd,ef,gh->abegcdfh", h4, np.eye(2), np.eye(2))
    # current order of axes: (d, tq, o1, o2) rows then columns
    order = [d, tq] + others
    perm = np.argsort(order)
    full = full.reshape((2,) * 8)
    full = full.transpose(list(perm) + [4 + p for p in perm])
    return full.reshape(16, 16)


@dataclass(frozen=True)
class TwoTargetFidelity:
    local: float
    nonlocal_: float
    per_detector: tuple


def two_target_fidelity(coupling_between_targets: float,
                        quench_spec: QuenchSpec | None = None) -> TwoTargetFidelity:
    """Local and non-local readout fidelity for two coupled targets.

    For detector 1 the Z row of the channel's Pauli transfer matrix is split
    into the components on its own target (``XI, YI, ZI``) and on all 15
    non-identity two-target strings; likewise for detector 2.  The two
    detectors' fidelities are averaged.
    """
    spec = quench_spec or QuenchSpec()
    u = propagator(two_pair_hamiltonian(spec, coupling_between_targets), spec.t_grid())
    R = pauli_transfer(total_channel(u, n_pairs=2))
    # Pauli string index = 4 * first + second
    rows = {0: 4 * 3 + 0, 1: 4 * 0 + 3}
    local_cols = {0: [4 * k for k in (1, 2, 3)], 1: [k for k in (1, 2, 3)]}
    per = []
    for det in (0, 1):
        row = R[rows[det]]
        per.append((float(np.linalg.norm(row[local_cols[det]])),
                    float(np.linalg.norm(row[1:]))))
    f_loc = float(np.mean([p[0] for p in per]))
    f_non = float(np.mean([p[1] for p in per]))
    return TwoTargetFidelity(f_loc, f_non, tuple(per))
