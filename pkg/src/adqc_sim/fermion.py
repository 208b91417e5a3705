"""Free-fermion dynamics of the transverse-field Ising chain.

After a Jordan-Wigner transformation with ``c_i`` annihilating an excitation
(``sigma^z_i = 1 - 2 c_i^+ c_i``) the chain Hamiltonian is quadratic,

    H = (1/2) Psi^+ Hb Psi,    Psi = (c_0 ... c_{L-1}, c_0^+ ... c_{L-1}^+),

with ``Hb = [[M, K], [-K, -M]]``.  ``M`` holds the site energies and hopping,
``K`` the antisymmetric pairing.  On a ring the wrap-around bond depends on
the fermion parity ``P = prod_i sigma^z_i`` and enters with a factor ``-P``.

A Gaussian state is stored through the Bogoliubov coefficients ``(u, v)`` of
its quasiparticles, ``c_i = sum_mu (u_imu g_mu + conj(v_imu) g_mu^+)``, with
the state being the vacuum of every ``g_mu``.  Under ``H`` the stacked
coefficients evolve as ``(u; v)(t) = exp(-2j pi Hb t) (u; v)(0)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError, ParityError
from .model import EffectiveXYModel, chain_bonds


@dataclass(frozen=True)
class BdGSystem:
    """Site energies ``A_i`` (GHz), bond couplings (GHz) and parity sector."""

    site_energies: np.ndarray
    couplings: np.ndarray
    periodic: bool = True
    parity: int = 1

    def __post_init__(self):
        A = np.array(self.site_energies, dtype=float)
        J = np.array(self.couplings, dtype=float)
        if A.ndim != 1 or A.size < 2:
            raise ValueError("need at least two sites")
        n_bonds = len(chain_bonds(A.size, self.periodic))
        if J.shape != (n_bonds,):
            raise ValueError(f"expected {n_bonds} couplings, got {J.shape}")
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        A.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "site_energies", A)
        object.__setattr__(self, "couplings", J)

    @property
    def length(self) -> int:
        return self.site_energies.size

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return chain_bonds(self.length, self.periodic)

    @classmethod
    def from_model(cls, model: EffectiveXYModel, parity: int = 1) -> "BdGSystem":
        return cls(model.site_energies, model.couplings, model.periodic, parity)

    @classmethod
    def uniform(cls, length: int, delta: float, coupling: float,
                periodic: bool = True, parity: int = 1) -> "BdGSystem":
        n_bonds = len(chain_bonds(length, periodic))
        return cls(np.full(length, float(delta)), np.full(n_bonds, float(coupling)),
                   periodic, parity)

    def with_parity(self, parity: int) -> "BdGSystem":
        return replace(self, parity=parity)


def build_bdg(system: BdGSystem) -> np.ndarray:
    """Real symmetric ``2L x 2L`` single-particle matrix of the chain."""
    L = system.length
    M = np.diag(system.site_energies.astype(float))
    K = np.zeros((L, L))
    for (i, j), J in zip(system.bonds, system.couplings):
        g = 0.5 * J
        if system.periodic and L > 2 and (i, j) == (L - 1, 0):
            g *= -system.parity
        M[i, j] += g
        M[j, i] += g
        K[i, j] += g
        K[j, i] -= g
    return np.block([[M, K], [-K, -M]])


def clean_momenta(length: int, parity: int = 1) -> np.ndarray:
    """Allowed ring momenta in ``[0, 2 pi)``: half-integer for ``P = +1``."""
    shift = 0.5 if parity == 1 else 0.0
    return 2 * np.pi * (np.arange(length) + shift) / length


class BdGPropagator:
    """``exp(-2j pi Hb t)`` through a cached eigendecomposition of ``Hb``."""

    def __init__(self, h_bdg):
        h = np.asarray(h_bdg)
        if not np.allclose(h, h.conj().T, atol=1e-12):
            raise ValueError("BdG matrix is not Hermitian")
        self.matrix = h

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    def apply(self, x0: np.ndarray, t) -> np.ndarray:
        """Evolve columns of ``x0``; a time array adds a leading axis."""
        w, V = self.eigh
        c = V.conj().T @ x0
        t_arr = np.asarray(t, dtype=float)
        ph = np.exp(-2j * np.pi * np.multiply.outer(np.atleast_1d(t_arr), w))
        out = V @ (ph[..., None] * c)
        return out[0] if t_arr.ndim == 0 else out

    def __call__(self, t) -> np.ndarray:
        return self.apply(np.eye(self.matrix.shape[0]), t)


@dataclass(frozen=True)
class BdGState:
    """Bogoliubov coefficients; arrays may carry a leading time axis."""

    u: np.ndarray
    v: np.ndarray

    @property
    def length(self) -> int:
        return self.u.shape[-1]

    def unitarity_error(self) -> float:
        """Deviation of ``[[u, conj(v)], [v, conj(u)]]`` from a unitary matrix."""
        u, v = np.atleast_3d(self.u.T).T, np.atleast_3d(self.v.T).T
        W = np.concatenate([np.concatenate([u, v.conj()], axis=-1),
                            np.concatenate([v, u.conj()], axis=-1)], axis=-2)
        eye = np.eye(W.shape[-1])
        return float(np.max(np.abs(W @ np.swapaxes(W.conj(), -1, -2) - eye)))


def init_pi_pulses(system: BdGSystem, excited_sites: Sequence[int]) -> BdGState:
    """Product state with the listed (0-based) sites excited.

    On a ring the excitation count must match the parity sector of
    ``system``: even for ``P = +1``, odd for ``P = -1``.
    """
    L = system.length
    sites = sorted(set(int(s) for s in excited_sites))
    if sites and (sites[0] < 0 or sites[-1] >= L):
        raise DomainError("excited site outside the chain")
    if system.periodic and L > 2 and (-1) ** len(sites) != system.parity:
        raise ParityError(f"{len(sites)} excitations do not belong to parity "
                          f"sector {system.parity:+d}")
    e = np.zeros(L)
    e[sites] = 1.0
    return BdGState(u=np.diag(1.0 - e).astype(complex), v=np.diag(e).astype(complex))


def evolve_bdg(state: BdGState, h_bdg, t) -> BdGState:
    """Evolve ``state`` for time(s) ``t`` (ns) under the BdG matrix ``h_bdg``.

    ``h_bdg`` may be a matrix or a :class:`BdGPropagator`; reuse the latter
    to avoid repeating the eigendecomposition.
    """
    if np.any(np.asarray(t) < 0):
        raise DomainError("evolution time must be non-negative")
    prop = h_bdg if isinstance(h_bdg, BdGPropagator) else BdGPropagator(h_bdg)
    L = state.length
    x = prop.apply(np.concatenate([state.u, state.v], axis=-2), t)
    return BdGState(u=x[..., :L, :], v=x[..., L:, :])


def measure_tau_x(state: BdGState) -> np.ndarray:
    """``1 - 2 <c_i^+ c_i>`` with ``<c_i^+ c_i> = sum_mu |v_imu|^2``."""
    return 1.0 - 2.0 * np.sum(np.abs(state.v) ** 2, axis=-1)


def tau_x_series(system: BdGSystem, excited_sites: Sequence[int], t_grid,
                 propagator: BdGPropagator | None = None) -> np.ndarray:
    """``<tau^x_i(t)>`` of a pi-pulse product state, shape ``(T, L)``.

    Only the lower (``v``) block is formed, which halves the work of a full
    :func:`evolve_bdg` call.
    """
    prop = propagator or BdGPropagator(build_bdg(system))
    state = init_pi_pulses(system, excited_sites)
    L = system.length
    w, V = prop.eigh
    c = V.T @ np.concatenate([state.u, state.v]).real
    Vb = V[L:]
    t = np.asarray(t_grid, dtype=float)
    occ = np.empty((t.size, L))
    # exp(-i w t) = cos - i sin; V and c are real
    for i, ti in enumerate(t):
        arg = 2 * np.pi * w * ti
        re = Vb @ (np.cos(arg)[:, None] * c)
        im = Vb @ (np.sin(arg)[:, None] * c)
        occ[i] = np.sum(re * re + im * im, axis=1)
    return 1.0 - 2.0 * occ


@dataclass(frozen=True)
class ImbalanceSeries:
    t_grid: np.ndarray
    values: np.ndarray
    W: float | None = None
    seed: int | None = None

    def late_average(self, window: tuple[float, float] = (15.0, 20.0)) -> float:
        """Mean imbalance over samples inside ``window`` (ns)."""
        t = np.asarray(self.t_grid)
        sel = (t >= window[0] - 1e-9) & (t <= window[1] + 1e-9)
        if not np.any(sel):
            raise ValueError("no samples inside the averaging window")
        return float(np.mean(self.values[sel]))


def imbalance(tau_x, t_grid=None, W: float | None = None,
              seed: int | None = None) -> ImbalanceSeries:
    """Odd/even excitation imbalance of a ``(T, L)`` series of ``<tau^x>``.

    Sites are counted from one, so the odd sites are 0-based indices
    0, 2, 4, ...; the staggered state exciting those sites has ``I = 1``.
    """
    tx = np.atleast_2d(np.asarray(tau_x, dtype=float))
    L = tx.shape[-1]
    if L % 2:
        raise DomainError("imbalance needs an even number of sites")
    p_odd = np.sum(1.0 - tx[:, 0::2], axis=1) / L
    p_even = np.sum(1.0 - tx[:, 1::2], axis=1) / L
    denom = p_odd + p_even
    if np.any(denom < 1e-12):
        raise DomainError("imbalance undefined without excitations")
    t = np.arange(tx.shape[0], dtype=float) if t_grid is None else np.asarray(t_grid, float)
    return ImbalanceSeries(t, (p_odd - p_even) / denom, W, seed)


def disorder_ensemble(template: BdGSystem, W: float, n_realizations: int,
                      seed: int | None = None, scale: float | None = None) -> list[BdGSystem]:
    """Copies of ``template`` with i.i.d. detunings uniform in ``[-J W / 2, J W / 2]``.

    ``J`` defaults to the largest coupling magnitude of the template.  Each
    realization draws from its own child of ``SeedSequence(seed)``, so a
    realization does not depend on how many others are requested.
    """
    if W < 0:
        raise DomainError("disorder strength must be non-negative")
    J = float(np.max(np.abs(template.couplings))) if scale is None else abs(scale)
    half = 0.5 * J * W
    out = []
    for child in np.random.SeedSequence(seed).spawn(n_realizations):
        rng = np.random.default_rng(child)
        dd = rng.uniform(-half, half, template.length) if W > 0 else np.zeros(template.length)
        out.append(replace(template, site_energies=template.site_energies + dd))
    return out


def staggered_sites(length: int) -> list[int]:
    return list(range(0, length, 2))


@dataclass(frozen=True)
class ScalingFit:
    coefficient: float
    exponent: float
    coefficient_err: float
    exponent_err: float


def fit_quadratic_scaling(W_values, late_imbalances, w_max: float = 2.0) -> ScalingFit:
    """Power-law fit ``I = c W^p`` by least squares in log-log space.

    Points with ``W > w_max``, ``W <= 0`` or non-positive imbalance are
    dropped (the latter with a warning); at least four must remain.
    """
    W = np.asarray(W_values, dtype=float)
    y = np.asarray(late_imbalances, dtype=float)
    keep = (W > 0) & (W <= w_max)
    bad = keep & (y <= 0)
    if np.any(bad):
        warnings.warn(f"dropping {bad.sum()} non-positive imbalance values", UserWarning)
    keep &= y > 0
    if keep.sum() < 4:
        raise ValueError("need at least four positive small-W points")
    res = stats.linregress(np.log(W[keep]), np.log(y[keep]))
    c = float(np.exp(res.intercept))
    return ScalingFit(c, float(res.slope), c * float(res.intercept_stderr),
                      float(res.stderr))


# -- x-basis field: superposition across parity sectors -------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def pfaffian(A: np.ndarray) -> np.ndarray:
    """Pfaffian of (a stack of) antisymmetric matrices.

    Parlett-Reid tridiagonalization with partial pivoting, vectorized over
    the leading axes.
    """
    A = np.array(A, dtype=complex)
    batch = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n))
    nb = A.shape[0]
    if n % 2:
        return np.zeros(batch, dtype=complex)
    rows = np.arange(nb)
    pf = np.ones(nb, dtype=complex)
    for k in range(0, n - 1, 2):
        kp = k + 1 + np.argmax(np.abs(A[:, k + 1:, k]), axis=1)
        swap = kp != k + 1
        if np.any(swap):
            r, p = rows[swap], kp[swap]
            tmp = A[r, k + 1, :].copy()
            A[r, k + 1, :] = A[r, p, :]
            A[r, p, :] = tmp
            tmp = A[r, :, k + 1].copy()
            A[r, :, k + 1] = A[r, :, p]
            A[r, :, p] = tmp
            pf[swap] *= -1
        piv = A[:, k, k + 1]
        pf *= piv
        if k + 2 < n:
            safe = np.where(piv == 0, 1.0, piv)
            tau = A[:, k, k + 2:] / safe[:, None]
            col = A[:, k + 2:, k + 1]
            A[:, k + 2:, k + 2:] += (tau[:, :, None] * col[:, None, :]
                                     - col[:, :, None] * tau[:, None, :])
    return pf.reshape(batch)


class _TransitionContractions:
    """Two-point functions ``<phi_+| O_a O_b |phi_->`` / overlap between sectors.

    ``phi_s = exp(-2j pi H_s t) |vac>`` for the two parity-sector Hamiltonians.
    Operators are linear forms ``a . Psi``; the contraction is ``a^T T b``.
    """

    def __init__(self, system: BdGSystem):
        self.L = system.length
        self.h_plus = build_bdg(system.with_parity(1))
        self.h_minus = build_bdg(system.with_parity(-1))
        self.prop_plus = BdGPropagator(self.h_plus)
        self.prop_minus = BdGPropagator(self.h_minus)
        L = self.L
        self.swap = np.block([[np.zeros((L, L)), np.eye(L)], [np.eye(L), np.zeros((L, L))]])
        self.diff_sw = self.swap @ (self.h_plus - self.h_minus)

    def contractions(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``T(t)`` and the ket propagator ``exp(+2j pi H_- t)``."""
        L = self.L
        back_minus = self.prop_minus(-t)
        back_plus = self.prop_plus(-t)
        ket = back_minus[:, :L, :]
        bra = back_plus[:, :L, :].conj() @ self.swap
        M = np.concatenate([ket, bra], axis=1)
        K = ket @ self.swap @ np.swapaxes(bra, 1, 2)
        G = np.zeros_like(M)
        G[:, :L, L:] = K
        Minv = np.linalg.inv(M)
        return Minv @ G @ np.swapaxes(Minv, 1, 2), back_minus

    def log_overlap_rate(self, t: np.ndarray) -> np.ndarray:
        T, _ = self.contractions(t)
        return 1j * np.pi * np.einsum("ab,tab->t", self.diff_sw, T)

    def log_overlap(self, t_grid: np.ndarray) -> np.ndarray:
        """``log <phi_+|phi_->`` on a non-decreasing grid starting at 0."""
        t = np.asarray(t_grid, dtype=float)
        edges = np.concatenate([[0.0], t])
        a, b = edges[:-1], edges[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        rate = self.log_overlap_rate(nodes).reshape(t.size, -1)
        return np.cumsum(half * (rate @ _GL_WEIGHTS))


def x_basis_field(system: BdGSystem, source: int, t_grid) -> np.ndarray:
    """``<sigma^x_n(t)>`` after a pi/2 pulse on ``source``; shape ``(L, T)``.

    The initial state ``(|vac> + c_s^+ |vac>) / sqrt(2)`` spans both parity
    sectors, so the signal is the transition element

        Re <phi_+| S_n c_s^+(-t) |phi_->,   S_n = prod_{j<n} sigma^z_j (c_n + c_n^+),

    evaluated by Wick's theorem as a Pfaffian of transition contractions.
    The parity of ``system`` is ignored.
    """
    L = system.length
    if not 0 <= source < L:
        raise DomainError("source site outside the chain")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or np.any(np.diff(t) < 0) or np.any(t < 0):
        raise ValueError("t_grid must be a non-decreasing grid of non-negative times")
    ctx = _TransitionContractions(system)
    log_f = ctx.log_overlap(t)
    T, back_minus = ctx.contractions(t)
    # linear forms: rows of (c_j - c_j^+), (c_j + c_j^+) and the evolved c_s^+
    eye = np.eye(L)
    minus = np.concatenate([eye, -eye], axis=1)
    plus = np.concatenate([eye, eye], axis=1)
    creator = back_minus[:, L + source, :]
    out = np.empty((L, t.size))
    for n in range(L):
        ops = [np.stack([minus[j], plus[j]]) for j in range(n)] + [plus[n:n + 1]]
        fixed = np.concatenate(ops, axis=0)
        vecs = np.concatenate([np.broadcast_to(fixed, (t.size,) + fixed.shape),
                               creator[:, None, :]], axis=1)
        G = vecs @ T @ np.swapaxes(vecs, 1, 2)
        upper = np.triu(G, 1)
        A = upper - np.swapaxes(upper, 1, 2)
        out[n] = np.real(np.exp(log_f) * pfaffian(A))
    return out
