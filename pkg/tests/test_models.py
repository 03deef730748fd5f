import numpy as np
import pytest

from adiabatic_thermo.dynamics import propagate_adiabatic
from adiabatic_thermo.models import (PRESETS, closed_unitary, energy_eigenbasis_dephasing, pauli_hamiltonian, preset,
                                     rabi_population, verify_preset)
from adiabatic_thermo.spectral import decompose
from adiabatic_thermo.superop import SIGMA_X, SIGMA_Z, assemble_liouvillian
from adiabatic_thermo.thermo import exact_ledger, trajectory_ledger
from adiabatic_thermo.units import BETA_REF, HBAR, HBAR_OMEGA_REF


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_pass_their_closed_forms(name):
    model, rho0 = preset(name)
    assert model.name == name
    assert verify_preset(name) <= PRESETS[name].tolerance
    assert abs(rho0.comps[0] - 1) < 1e-14  # trace one


def test_unknown_preset():
    with pytest.raises(KeyError, match="unknown preset"):
        preset("no_such_model")
    with pytest.raises(KeyError):
        verify_preset("no_such_model")


def test_preset_parameters_pass_through():
    model, _ = preset("linear_gamma", gamma0=1257.0, tau_dec=2e-3)
    assert model.t_span == (0.0, 2e-3)
    assert model.dissipators[0].rate_at(2e-3) == pytest.approx(2 * 1257.0)


def test_closed_unitary_has_no_heat():
    m, r0 = closed_unitary()
    grid = np.linspace(0, 1e-3, 41)
    led, _ = exact_ledger(m, r0, grid)
    assert np.all(np.abs(led.heat) < 1e-12 * HBAR_OMEGA_REF)
    ad = trajectory_ledger(m, propagate_adiabatic(m, r0, grid))
    assert np.all(np.abs(ad.heat) < 1e-12 * HBAR_OMEGA_REF)


@pytest.mark.parametrize("t", [0.0, 3e-4, 1e-3])
def test_energy_basis_spectrum(t):
    # lambda_nm = (E_n - E_m)/(i hbar) - 2 (1 - delta_nm) gamma; the rate is constant here
    g = 1000.0
    m, _ = energy_eigenbasis_dephasing(gamma0=g)
    E = np.linalg.eigvalsh(m.hamiltonian_at(t))
    dE = (E[1] - E[0]) / HBAR
    expect = sorted([0, 0, -2 * g + 1j * dE, -2 * g - 1j * dE], key=lambda z: (-z.real, -z.imag))
    got = decompose(assemble_liouvillian(m, t)).eigenvalues
    assert np.allclose(got, expect, atol=1e-9 * abs(dE))


def test_energy_basis_thermal_adiabaticity():
    m, r0 = energy_eigenbasis_dephasing()
    led, _ = exact_ledger(m, r0, np.linspace(0, 1e-3, 41))
    assert np.abs(led.heat).max() < 1e-9 * HBAR_OMEGA_REF
    assert np.abs(led.delta_U - led.work).max() < 1e-9 * HBAR_OMEGA_REF


def test_rabi_population_closed_form():
    w, g = 2 * np.pi * 1e3, 1426.0
    t = np.linspace(0, 2e-3, 9)
    p = rabi_population(t, w, g)
    assert p[0] == 0.0
    assert rabi_population(1e3, w, g) == pytest.approx(0.5)
    # gamma = 0: plain Rabi flopping sin^2(omega t)
    assert np.allclose(rabi_population(t, w, 0.0), np.sin(w * t) ** 2, atol=1e-14)


def test_pauli_hamiltonian():
    H = pauli_hamiltonian({"x": HBAR_OMEGA_REF})
    assert np.allclose(H, HBAR_OMEGA_REF * SIGMA_X)
    assert np.allclose(pauli_hamiltonian({"x": 1.0, "z": 2.0}), SIGMA_X + 2 * SIGMA_Z)
    with pytest.raises(ValueError):
        pauli_hamiltonian({})
    with pytest.raises(ValueError):
        pauli_hamiltonian({"x": 1.0, "zz": 1.0})


def test_thermal_initial_state():
    m, r0 = preset("dephasing_qubit", verify=False)
    assert r0.comps[1].real == pytest.approx(-np.tanh(BETA_REF * HBAR_OMEGA_REF), rel=1e-14)
