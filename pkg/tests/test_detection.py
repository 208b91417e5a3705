import itertools

import numpy as np
import pytest

from adqc_sim.detection import (QuenchSpec, ReadoutAxis, Superoperator, brute_force_axis,
                                pair_channel, pair_hamiltonian, pauli_transfer, propagator,
                                readout_axis, s_dephasing, s_prep, s_prop, s_prop_from_unitary,
                                s_ptrace, total_channel, two_target_fidelity, unvec, vec)
from adqc_sim.errors import AccuracyError, PhysicalityError
from adqc_sim.ops import I2, SX, SY, SZ

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
PLUS = np.full((2, 2), 0.5)


def rz(alpha):
    return np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])


@pytest.fixture(scope="module")
def quench_u():
    spec = QuenchSpec()
    return propagator(pair_hamiltonian(spec), spec.t_grid())


def test_vectorization_round_trip():
    rng = np.random.default_rng(0)
    A, B, rho = rng.normal(size=(3, 4, 4))
    assert np.allclose(unvec(vec(rho)), rho)
    assert np.allclose(vec(A @ rho @ B), np.kron(A, B.T) @ vec(rho))


def test_superoperator_composition_checks():
    with pytest.raises(ValueError):
        Superoperator(np.eye(3))
    with pytest.raises(ValueError):
        s_prep() @ s_prep()
    tot = s_dephasing() @ s_ptrace() @ s_prep()
    assert tot.dims_in == (2,) and tot.dims_out == (2,)


def test_s_prep_definition():
    sp = s_prep()
    assert sp.matrix.shape == (16, 4)
    out = sp(np.diag([1.0, 0.0]))
    r = out.reshape(2, 2, 2, 2)
    assert np.allclose(np.einsum("atbt->ab", r), PLUS)
    assert np.allclose(np.einsum("ajak->jk", r), np.diag([1, 0]))
    assert sp.trace_error() < 1e-12
    # (1/2) sum |j i l k><i k| over every index tuple
    ref = np.zeros((16, 4))
    for i, j, k, l in itertools.product(range(2), repeat=4):
        ref[((j * 2 + i) * 4) + (l * 2 + k), i * 2 + k] = 0.5
    assert np.array_equal(sp.matrix.real, ref)


def test_ptrace_and_dephasing():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho_d = a @ a.conj().T
    rho_d /= np.trace(rho_d)
    rho_t = np.diag([0.3, 0.7])
    assert np.allclose(s_ptrace()(np.kron(rho_d, rho_t)), rho_d)
    deph = s_dephasing()
    assert np.allclose((deph @ deph).matrix, deph.matrix)
    for rho in (np.diag([1.0, 0.0]), PLUS, 0.5 * (I2 + SY)):
        assert np.allclose((s_ptrace() @ s_prep())(rho), PLUS)


def test_propagator_constant_and_zero():
    assert np.allclose(s_prop(np.zeros((4, 4)), [0, 1]).matrix, np.eye(16))
    rng = np.random.default_rng(2)
    h = rng.normal(size=(4, 4))
    h = 0.2 * (h + h.T)
    t = np.linspace(0, 2, 1001)
    one = propagator(h, t)
    many = propagator(lambda _: h, t)
    assert np.max(np.abs(one - many)) < 1e-8
    assert np.allclose(one @ one.conj().T, np.eye(4), atol=1e-12)


def test_propagator_errors():
    h = np.diag([0.0, 10.0])
    with pytest.raises(AccuracyError):
        propagator(lambda _: h, np.linspace(0, 1, 11))
    with pytest.raises(PhysicalityError):
        propagator(np.array([[0, 1], [0, 0]]), [0, 1])
    with pytest.raises(ValueError):
        propagator(h, [0.0])
    drive = lambda t: 0.5 * np.cos(2 * np.pi * t) * SX + 0.3 * SZ
    with pytest.raises(AccuracyError):
        propagator(drive, np.linspace(0, 2, 41), check_tol=1e-12)
    propagator(drive, np.linspace(0, 2, 4001), check_tol=1e-6)


def test_prop_preserves_purity(quench_u):
    S = s_prop_from_unitary(quench_u)
    psi = np.array([0.6, 0.8j, 0, 0])
    out = S(np.outer(psi, psi.conj()))
    assert np.trace(out @ out).real == pytest.approx(1.0, abs=1e-8)


def test_identity_and_swap_axes():
    zero = readout_axis(total_channel(np.eye(4)))
    assert zero.fidelity == pytest.approx(0.0, abs=1e-12)
    ax = readout_axis(total_channel(SWAP))
    assert ax.fidelity == pytest.approx(1.0, abs=1e-12)
    assert ax.theta == pytest.approx(0.0, abs=1e-9)


def test_swap_pulse_from_exchange():
    # a resonant exchange pulse of area pi realizes a swap up to phases
    h = 0.25 * 0.5 * (np.kron(SX, SX) + np.kron(SY, SY))
    u = propagator(h, [0.0, 1.0 / 0.5 / 2])
    ax = readout_axis(total_channel(u))
    assert ax.fidelity >= 0.99 and ax.theta == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(ax.vector, brute_force_axis(u).vector, atol=1e-12)


def test_total_channel_trace_preserving(quench_u):
    assert total_channel(quench_u).trace_error() < 1e-10
    assert total_channel(quench_u, 1) is not None


def test_quench_axis_matches_tomography(quench_u):
    ax = readout_axis(total_channel(quench_u))
    bf = brute_force_axis(quench_u)
    assert abs(ax.theta - bf.theta) < 1e-6
    assert abs(ax.phi - bf.phi) < 1e-6
    assert abs(ax.fidelity - bf.fidelity) < 1e-6
    # frozen regression values for the default quench
    assert ax.fidelity == pytest.approx(0.8027, abs=1e-3)
    assert ax.theta == pytest.approx(1.626, abs=1e-3)
    assert ax.phi == pytest.approx(1.5 * np.pi, abs=1e-3)


def test_pair_channel_equals_explicit_composition(quench_u):
    assert np.allclose(pair_channel(QuenchSpec()).matrix, total_channel(quench_u).matrix)


@pytest.mark.parametrize("alpha", [np.pi / 4, np.pi / 2])
def test_axis_equivariance(quench_u, alpha):
    base = readout_axis(total_channel(quench_u))
    turned = readout_axis(total_channel(quench_u @ np.kron(I2, rz(alpha))))
    assert turned.fidelity == pytest.approx(base.fidelity, abs=1e-10)
    assert turned.theta == pytest.approx(base.theta, abs=1e-10)
    assert np.mod(turned.phi - base.phi + alpha + np.pi, 2 * np.pi) - np.pi == pytest.approx(0, abs=1e-9)


def test_dephasing_last_invariance(quench_u):
    tot = total_channel(quench_u)
    assert np.allclose((s_dephasing() @ tot).matrix, tot.matrix)


def test_pauli_transfer_identity():
    R = pauli_transfer(s_prop_from_unitary(np.eye(2)))
    assert np.allclose(R, np.eye(4))


def test_readout_axis_physicality():
    bad = Superoperator(2 * total_channel(SWAP).matrix)
    with pytest.raises(PhysicalityError):
        readout_axis(bad)
    with pytest.raises(ValueError):
        readout_axis(s_prep())


def test_energy_basis_conversion():
    ax = ReadoutAxis(0.0, 0.0, 1.0, np.array([0.0, 0.0, 1.0]))
    e = ax.to_energy_basis()
    # tau^z = -sigma^x
    assert e.theta == pytest.approx(np.pi / 2) and e.phi == pytest.approx(np.pi)


def test_quench_spec():
    spec = QuenchSpec(ramp=2.0, hold=1.0, steps_per_ns=10)
    assert spec.duration == 3.0
    assert spec.s_detector(1.0) == pytest.approx(0.75)
    assert spec.s_detector(5.0) == pytest.approx(1.0)
    assert spec.t_grid().size == 31


def test_two_target_sweep():
    spec = QuenchSpec()
    single = readout_axis(pair_channel(spec)).fidelity
    zero = two_target_fidelity(0.0, spec)
    assert zero.local == pytest.approx(single, abs=1e-8)
    assert zero.nonlocal_ == pytest.approx(zero.local, abs=1e-8)
    sweep = [two_target_fidelity(c, spec) for c in (0.1, 0.2, 0.3)]
    loc = [zero.local] + [s.local for s in sweep]
    gap = [0.0] + [s.nonlocal_ - s.local for s in sweep]
    assert all(b <= a + 1e-9 for a, b in zip(loc, loc[1:]))
    assert all(s.nonlocal_ >= s.local - 1e-9 for s in sweep)
    assert all(b > a for a, b in zip(gap, gap[1:]))
