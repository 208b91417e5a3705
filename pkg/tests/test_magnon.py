import numpy as np
import pytest

from adqc_sim.errors import DomainError, RegimeWarning
from adqc_sim.exact import build_tfim, build_xy, evolve_state, x_expectations, z_expectations
from adqc_sim.magnon import (MagnonModel, e_eff, excitation_density, field_x, field_z,
                             m_x_profile, omega_peak_x, omega_peak_z)
from adqc_sim.model import EffectiveXYModel, dispersion_exact
from adqc_sim.ops import product_state


def fig_model(L=8):
    return MagnonModel(2.0, -0.6, L)


def x_source_state(L):
    psi = np.zeros(2 ** L, complex)
    psi[0] = psi[1 << (L - 1)] = 1 / np.sqrt(2)
    return psi


def test_validation():
    with pytest.raises(DomainError):
        MagnonModel(2.0, -0.6, 7)
    with pytest.raises(DomainError):
        MagnonModel(2.0, -0.6, 8, periodic=False)
    with pytest.raises(DomainError):
        MagnonModel(1.0, 1.0, 8)
    with pytest.warns(RegimeWarning):
        MagnonModel(1.0, 0.5, 8)


def test_e_eff_values():
    m = fig_model()
    assert e_eff(m, np.pi / 2) == pytest.approx(2.0)
    assert e_eff(m, 0.0) == pytest.approx(1.4)
    k = np.linspace(0, 2 * np.pi, 200)
    bound = m.delta * (m.coupling / m.delta) ** 2 * 1.1
    assert np.max(np.abs(dispersion_exact(m.delta, m.coupling, k) - e_eff(m, k))) <= bound


def test_peak_loci():
    m = fig_model()
    assert np.allclose(omega_peak_x(m, np.pi / 2), (2.0, -2.0))
    assert np.allclose(omega_peak_x(m, m.k_grid)[0], e_eff(m, m.k_grid))
    assert np.allclose(omega_peak_z(m, 0.0), (0.0, 0.0))
    assert np.allclose(np.abs(omega_peak_z(m, np.pi)), 1.2)


def test_m_x_initial_and_symmetry():
    m = fig_model(10)
    n = np.arange(10)
    assert np.allclose(m_x_profile(m, n, 0.0), n == 0, atol=1e-14)
    t = np.linspace(0, 5, 23)[:, None]
    assert np.allclose(m_x_profile(m, n, t), m_x_profile(m, (10 - n) % 10, t), atol=1e-13)


def test_excitation_density_properties():
    m = fig_model(12)
    n = np.arange(12)
    t = np.linspace(0, 8, 31)[:, None]
    rho = excitation_density(m, n, t)
    assert np.allclose(rho.sum(axis=1), 1, atol=1e-12)
    assert np.allclose(rho[0], n == 0, atol=1e-14)
    assert np.allclose(rho, excitation_density(m, (12 - n) % 12, t), atol=1e-13)


def test_density_matches_exact_xy():
    L = 10
    m = fig_model(L)
    model = EffectiveXYModel(m.delta, np.zeros(L), np.full(L, m.coupling))
    t = np.linspace(0, 4 / abs(m.coupling), 120)
    z = z_expectations(evolve_state(build_xy(model), product_state([1] + [0] * (L - 1)), t), L)
    rho = excitation_density(m, np.arange(L)[None, :], t[:, None])
    assert np.max(np.abs((1 - z) / 2 - rho)) <= 1e-3


def test_m_x_matches_xy_with_gap():
    L = 8
    m = fig_model(L)
    model = EffectiveXYModel(m.delta, np.zeros(L), np.full(L, m.coupling))
    t = np.linspace(0, 3 / abs(m.coupling), 300)
    ex = x_expectations(evolve_state(build_xy(model, include_gap=True), x_source_state(L), t), L)
    assert np.max(np.abs(ex - m_x_profile(m, np.arange(L)[None, :], t[:, None]))) < 1e-10


def test_m_x_against_full_ising():
    # counter-rotating terms add an O(J/delta) error that grows with J t
    L = 8
    m = fig_model(L)
    model = EffectiveXYModel(m.delta, np.zeros(L), np.full(L, m.coupling))
    t = np.linspace(0, 0.1 / abs(m.coupling), 60)
    ex = x_expectations(evolve_state(build_tfim(model), x_source_state(L), t), L)
    assert np.max(np.abs(ex - m_x_profile(m, np.arange(L)[None, :], t[:, None]))) <= 0.05

    def deviation(J):
        mm = MagnonModel(2.0, J, L)
        mod = EffectiveXYModel(2.0, np.zeros(L), np.full(L, J))
        tt = np.linspace(0, 3 / abs(J), 600)
        e = x_expectations(evolve_state(build_tfim(mod), x_source_state(L), tt), L)
        return np.max(np.abs(e - m_x_profile(mm, np.arange(L)[None, :], tt[:, None])))

    assert deviation(-0.1) < 0.6 * deviation(-0.2)


def test_light_cone():
    m = MagnonModel(2.0, -0.6, 60)
    t = np.linspace(0, 10, 20001)
    ns = np.arange(4, 25)
    first = [t[np.argmax(excitation_density(m, n, t) > 0.01)] for n in ns]
    v = 1 / np.polyfit(ns, first, 1)[0]
    assert v == pytest.approx(m.light_cone_velocity, rel=0.15)


@pytest.mark.parametrize("L", [8, 10, 12])
def test_finite_size_revival(L):
    m = MagnonModel(2.0, -0.6, L)
    t = np.linspace(3, 200, 200001)
    assert np.max(np.abs(m_x_profile(m, 0, t))) > 0.5


def test_fields():
    m = fig_model(8)
    t = np.arange(50) * 0.1
    fx = field_x(m, t, source=2)
    assert fx.values.shape == (8, 50) and fx.basis == "x"
    assert fx.values[2, 0] == pytest.approx(1.0)
    fz = field_z(m, t)
    assert fz.basis == "z"
    assert np.allclose(fz.values.sum(axis=0), 1)
