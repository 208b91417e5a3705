"""Open-system dynamics of one and two qubits with relaxation and pure dephasing.

The master equation used everywhere is

    d rho / dt = -2j*pi [H, rho] + sum_k rate_k (L rho L^+ - {L^+ L, rho} / 2)

with H in GHz, rates in 1/ns and t in ns.  Relaxation uses sigma^- at rate
1/T1 and pure dephasing uses sigma^z at rate 1/(2 T_phi).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, PhysicalityError, RegimeWarning
from .ops import SM, SX, SY, SZ, I2

_SUPEROP_MAX_DIM = 16


@dataclass(frozen=True)
class NoiseParams:
    """Relaxation time ``t1`` and pure dephasing time ``t_phi`` in ns (``inf`` = none)."""

    t1: float = np.inf
    t_phi: float = np.inf

    def __post_init__(self):
        if not (self.t1 > 0 and self.t_phi > 0):
            raise DomainError("T1 and T_phi must be positive")

    @property
    def gamma1(self) -> float:
        return 1.0 / self.t1

    @property
    def gamma_phi(self) -> float:
        return 1.0 / self.t_phi

    @property
    def t2(self) -> float:
        rate = 1.0 / self.t_phi + 0.5 / self.t1
        return np.inf if rate == 0 else 1.0 / rate

    def jump_ops(self, site: int = 0, length: int = 1) -> list[tuple[np.ndarray, float]]:
        """Relaxation and dephasing jump operators for one qubit of a register."""
        from .ops import site_op

        ops = []
        if np.isfinite(self.t1):
            ops.append((site_op(SM, site, length), self.gamma1))
        if np.isfinite(self.t_phi):
            ops.append((site_op(SZ, site, length), 0.5 * self.gamma_phi))
        return ops


@dataclass(frozen=True)
class BlochAxis:
    """Direction on the Bloch sphere given by polar ``theta`` and azimuth ``phi``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi + 1e-12):
            raise DomainError("polar angle must lie in [0, pi]")
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    @property
    def vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @classmethod
    def from_vector(cls, n) -> "BlochAxis":
        n = np.asarray(n, dtype=float)
        r = np.linalg.norm(n)
        if r == 0:
            raise DomainError("zero vector has no direction")
        return cls(float(np.arccos(np.clip(n[2] / r, -1, 1))), float(np.arctan2(n[1], n[0])))


@dataclass(frozen=True)
class BlochState:
    """Bloch vector of a qubit density matrix, ``rho = (1 + n.sigma) / 2``."""

    n: np.ndarray

    def __post_init__(self):
        n = np.array(self.n, dtype=float)
        if n.shape != (3,):
            raise ValueError("Bloch vector must have three components")
        if np.linalg.norm(n) > 1 + 1e-9:
            raise PhysicalityError(f"|n| = {np.linalg.norm(n)} exceeds 1")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @property
    def rho(self) -> np.ndarray:
        x, y, z = self.n
        return 0.5 * (I2 + x * SX + y * SY + z * SZ)

    @classmethod
    def from_rho(cls, rho) -> "BlochState":
        rho = np.asarray(rho)
        return cls(np.real([np.trace(rho @ P) for P in (SX, SY, SZ)]))


def bloch_evolve(n0, delta: float, noise: NoiseParams, t: float) -> BlochState:
    """Closed-form evolution under ``H = -(delta/2) sigma^z`` with T1/T_phi decay."""
    if t < 0:
        raise DomainError("evolution time must be non-negative")
    n = n0.n if isinstance(n0, BlochState) else np.asarray(n0, dtype=float)
    wt = 2 * np.pi * delta * t
    c, s = np.cos(wt), np.sin(wt)
    decay2 = np.exp(-t / noise.t2)
    decay1 = np.exp(-t / noise.t1)
    return BlochState([
        (n[0] * c + n[1] * s) * decay2,
        (-n[0] * s + n[1] * c) * decay2,
        1.0 - (1.0 - n[2]) * decay1,
    ])


def larmor_magnetization(source: BlochAxis, detector: BlochAxis, delta: float,
                         noise: NoiseParams, t, t0: float = 0.0):
    """Expected magnetization along the detector axis after Larmor precession.

    The precession phase enters as ``+2 pi delta (t - t0) + phi_s - phi_d``, so
    azimuths here are counted in the sense of precession.  In terms of
    :func:`bloch_evolve` this equals ``bloch_evolve(n(theta_s, -phi_s)) .
    n(theta_d, -phi_d)``.
    """
    t = np.asarray(t, dtype=float)
    tau = t - t0
    if np.any(tau < 0):
        raise DomainError("t must not precede the initialization time t0")
    ts, td = source.theta, detector.theta
    long = np.cos(td) * (1.0 - np.exp(-tau / noise.t1) * (1.0 - np.cos(ts)))
    trans = (np.sin(td) * np.sin(ts)
             * np.cos(2 * np.pi * delta * tau + source.phi - detector.phi)
             * np.exp(-tau / noise.t2))
    return long + trans


@dataclass(frozen=True)
class ExchangeSeries:
    """Two-qubit observables after a pi pulse on qubit 1 (initial state |10>)."""

    sz1: np.ndarray
    sz2: np.ndarray
    szsz: np.ndarray
    in_regime: bool


def two_qubit_exchange(coupling: float, noise: NoiseParams, t) -> ExchangeSeries:
    """Approximate closed forms for spin exchange from ``|10>`` (valid for 2 pi J T_phi >> 1)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("evolution time must be non-negative")
    J = 2 * np.pi * coupling
    in_regime = bool(abs(J) * noise.t_phi >= 10)
    if not in_regime:
        warnings.warn(f"2*pi*J*T_phi = {abs(J) * noise.t_phi:.3g} < 10; "
                      "closed forms are outside their validity regime", RegimeWarning)
    relax = np.exp(-t / noise.t1)
    osc = np.exp(-t / noise.t_phi) * np.cos(J * t)
    return ExchangeSeries(
        sz1=1.0 - relax * (1.0 + osc),
        sz2=1.0 - relax * (1.0 - osc),
        szsz=1.0 - 2.0 * relax,
        in_regime=in_regime,
    )


def single_qubit_hamiltonian(delta: float) -> np.ndarray:
    return -0.5 * delta * SZ


def two_qubit_hamiltonian(coupling: float, delta: float = 0.0) -> np.ndarray:
    """``-(delta/2)(Z1 + Z2) + (J/4)(X1 X2 + Y1 Y2)``; qubit 1 is the left factor."""
    return (-0.5 * delta * (np.kron(SZ, I2) + np.kron(I2, SZ))
            + 0.25 * coupling * (np.kron(SX, SX) + np.kron(SY, SY)))


def _check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise PhysicalityError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise PhysicalityError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise PhysicalityError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -tol:
        raise PhysicalityError("density matrix is not positive semidefinite")


def _liouvillian(H: np.ndarray, jumps) -> np.ndarray:
    """Row-major superoperator: vec(A rho B) = kron(A, B.T) vec(rho)."""
    d = H.shape[0]
    eye = np.eye(d)
    Lv = -2j * np.pi * (np.kron(H, eye) - np.kron(eye, H.T))
    for op, rate in jumps:
        ldl = op.conj().T @ op
        Lv += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return Lv


def _rhs(H, jumps):
    def f(rho):
        out = -2j * np.pi * (H @ rho - rho @ H)
        for op, rate in jumps:
            ldl = op.conj().T @ op
            out += rate * (op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return out
    return f


def _hermitize(rho):
    return 0.5 * (rho + rho.conj().T)


def default_step(hamiltonian, jump_ops) -> float:
    """Largest admissible fixed step: min(1/rate, 1/(20 * energy spread))."""
    H = np.asarray(hamiltonian)
    evals = np.linalg.eigvalsh(H)
    spread = evals[-1] - evals[0]
    bounds = [np.inf]
    if spread > 0:
        bounds.append(1.0 / (20 * spread))
    for _, rate in jump_ops:
        if rate > 0:
            bounds.append(1.0 / rate)
    return float(min(bounds))


def lindblad_integrate(hamiltonian, jump_ops: Sequence[tuple[np.ndarray, float]], rho0,
                       t_grid, max_step: float | None = None) -> np.ndarray:
    """Integrate the master equation with classical fixed-step RK4.

    Returns the density matrices at every point of ``t_grid`` (the first
    point is the initial time).  For dimension <= 16 the RK4 step is applied
    as its exact one-step propagator matrix ``sum_k (h L)^k / k!`` (k <= 4),
    which permits very fine steps at negligible cost; larger systems use
    explicit stepping.  The default step for the small-system path is chosen
    so that the global error stays near 1e-10 over O(100) periods.
    """
    H = np.asarray(hamiltonian, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    d = H.shape[0]
    if d > 2 ** 12:
        raise ValueError("dimension exceeds 2^12")
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise PhysicalityError("Hamiltonian is not Hermitian")
    if rho0.shape != (d, d):
        raise ValueError("rho0 dimension does not match the Hamiltonian")
    _check_density_matrix(rho0)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be non-decreasing")
    jumps = [(np.asarray(op, dtype=complex), float(rate)) for op, rate in jump_ops]
    h_max = default_step(H, jumps) if max_step is None else float(max_step)

    out = np.empty((t_grid.size, d, d), dtype=complex)
    rho = _hermitize(rho0)
    out[0] = rho
    if d <= _SUPEROP_MAX_DIM:
        Lv = _liouvillian(H, jumps)
        lam = np.max(np.abs(np.linalg.eigvals(Lv))) if Lv.any() else 0.0
        if max_step is None and lam > 0:
            h_max = min(h_max, 2e-3 / lam)
        cache: dict[tuple[int, float], np.ndarray] = {}
        vec = rho.reshape(-1)
        for i in range(1, t_grid.size):
            span = t_grid[i] - t_grid[i - 1]
            if span > 0:
                n = max(1, int(np.ceil(span / h_max - 1e-12)))
                key = (n, round(span, 12))
                if key not in cache:
                    hL = (span / n) * Lv
                    step = np.eye(d * d, dtype=complex)
                    term = np.eye(d * d, dtype=complex)
                    for k in range(1, 5):
                        term = term @ hL / k
                        step = step + term
                    cache[key] = np.linalg.matrix_power(step, n)
                vec = cache[key] @ vec
                vec = _hermitize(vec.reshape(d, d)).reshape(-1)
            out[i] = vec.reshape(d, d)
    else:
        f = _rhs(H, jumps)
        for i in range(1, t_grid.size):
            span = t_grid[i] - t_grid[i - 1]
            if span > 0:
                n = max(1, int(np.ceil(span / h_max - 1e-12)))
                h = span / n
                for _ in range(n):
                    k1 = f(rho)
                    k2 = f(rho + 0.5 * h * k1)
                    k3 = f(rho + 0.5 * h * k2)
                    k4 = f(rho + h * k3)
                    rho = _hermitize(rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
            out[i] = rho
    drift = np.max(np.abs(np.trace(out, axis1=1, axis2=2) - 1))
    if drift > 1e-9 * max(1, t_grid.size):
        raise PhysicalityError(f"trace drift {drift:.2e} exceeds tolerance")
    return out


def expectation(traj: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Real expectation values ``Tr(rho O)`` along a trajectory."""
    return np.real(np.einsum("tij,ji->t", traj, op))


def spam_partner(source: BlochAxis, detector: BlochAxis, flip: str = "source"):
    """Configuration paired with ``(source, detector)`` for SPAM symmetrization.

    ``flip="source"`` reverses the polarizing bias on the source
    (theta_s -> pi - theta_s, phi_s -> phi_s + pi), which negates the whole
    initial Bloch vector.  ``flip="detector"`` measures at pi - theta_d with
    phi_d fixed, which negates only the longitudinal part of the readout axis.
    """
    if flip == "source":
        return BlochAxis(np.pi - source.theta, source.phi + np.pi), detector
    if flip == "detector":
        return source, BlochAxis(np.pi - detector.theta, detector.phi)
    raise ValueError("flip must be 'source' or 'detector'")


def spam_symmetrize(run_a, run_b, parity: str = "odd") -> np.ndarray:
    """Combine a series with its SPAM-paired partner.

    ``parity="odd"`` returns ``(a - b) / 2``: the component that changes sign
    under the pairing, aligned with ``run_a``.  Offsets common to both runs
    cancel.  ``parity="even"`` returns ``(a + b) / 2``, the invariant part.
    """
    a = np.asarray(run_a, dtype=float)
    b = np.asarray(run_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired series must have equal length")
    if parity == "odd":
        return 0.5 * (a - b)
    if parity == "even":
        return 0.5 * (a + b)
    raise ValueError("parity must be 'odd' or 'even'")
