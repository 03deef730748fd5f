"""Named physical presets.

Every preset returns ``(model, rho0)`` and carries a closed-form check that
``verify_preset`` runs against both propagators.  Energies in peV, rates
in Hz, times in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import propagate_adiabatic, propagate_exact
from .superop import (KET0, SIGMA_X, SIGMA_Z, CoherenceVector, Dissipator, LindbladModel, pauli_string,
                      vectorize)
from .thermo import (bitflip_unitary, conjugate_model, conjugate_state, exact_ledger, gamma_integral,
                     thermal_state, trajectory_ledger)
from .units import BETA_REF, HBAR, HBAR_OMEGA_REF


def linear_ramp(gamma0: float, tau_dec: float) -> Callable[[float], float]:
    """gamma(t) = gamma0 (1 + t / tau_dec)."""
    if tau_dec <= 0:
        raise ValueError("tau_dec must be positive")
    return lambda t: gamma0 * (1.0 + t / tau_dec)


def integrated_linear_ramp(gamma0: float, tau_dec: float, t):
    t = np.asarray(t, dtype=float)
    return gamma0 * (t + t ** 2 / (2 * tau_dec))


def dephasing_qubit(hbar_omega: float = HBAR_OMEGA_REF, beta: float = BETA_REF, gamma0: float = 314.0,
                    tau_dec: float = 1e-3, gamma: Callable[[float], float] | float | None = None):
    """H_x = hbar omega sigma_x with sigma_z dephasing, started in its thermal state.

    ``gamma`` defaults to the constant ``gamma0``.
    """
    H = hbar_omega * SIGMA_X
    rate = gamma0 if gamma is None else gamma
    model = LindbladModel(2, H, (Dissipator(SIGMA_Z, rate),), (0.0, tau_dec), name="dephasing_qubit")
    return model, vectorize(thermal_state(H, beta))


def linear_gamma(hbar_omega: float = HBAR_OMEGA_REF, beta: float = BETA_REF, gamma0: float = 314.0,
                 tau_dec: float = 1e-3):
    """Dephasing qubit with the ramped rate gamma0 (1 + t / tau_dec)."""
    model, rho0 = dephasing_qubit(hbar_omega, beta, gamma0, tau_dec, gamma=linear_ramp(gamma0, tau_dec))
    model = replace(model, name="linear_gamma")
    return model, rho0


def rotating_hamiltonian(hbar_omega: float, tau_dec: float):
    """H(t) = hbar omega [cos(pi t / 2 tau) sigma_z + sin(pi t / 2 tau) sigma_x]."""
    def H(t):
        a = np.pi * t / (2 * tau_dec)
        return hbar_omega * (np.cos(a) * SIGMA_Z + np.sin(a) * SIGMA_X)
    return H


def energy_dephasing_operator(H: Callable[[float], np.ndarray]) -> Callable[[float], np.ndarray]:
    """Gamma(t) = |E0(t)><E0(t)| - |E1(t)><E1(t)| from the instantaneous eigenbasis of H(t)."""
    def G(t):
        _, V = np.linalg.eigh(H(t))
        return np.outer(V[:, 0], V[:, 0].conj()) - np.outer(V[:, 1], V[:, 1].conj())
    return G


def energy_eigenbasis_dephasing(hbar_omega: float = HBAR_OMEGA_REF, beta: float = BETA_REF,
                                gamma0: float = 1000.0, tau_dec: float = 1e-3):
    """sigma_z -> sigma_x quarter-turn ramp dephased in its own energy eigenbasis.

    The populations in |E_n(t)> are constants of the adiabatic motion and the
    spectrum is lambda_nm = -i(E_n - E_m)/hbar - 2(1 - delta_nm) gamma.
    """
    H = rotating_hamiltonian(hbar_omega, tau_dec)
    model = LindbladModel(2, H, (Dissipator(energy_dephasing_operator(H), gamma0),), (0.0, tau_dec),
                          name="energy_eigenbasis_dephasing")
    return model, vectorize(thermal_state(H(0.0), beta))


def bitflip_conjugate(hbar_omega: float = HBAR_OMEGA_REF, beta: float = BETA_REF, gamma0: float = 314.0,
                      tau_dec: float = 1e-3):
    """The linear-ramp dephasing qubit conjugated into a bit-flip channel."""
    base, rho0 = linear_gamma(hbar_omega, beta, gamma0, tau_dec)
    U = bitflip_unitary()
    model = conjugate_model(base, U)
    model = replace(model, name="bitflip_conjugate")
    return model, conjugate_state(rho0, U)


def closed_unitary(hbar_omega: float = HBAR_OMEGA_REF, beta: float = BETA_REF, tau_dec: float = 1e-3):
    """Same quarter-turn ramp with no environment: all energy change is work."""
    H = rotating_hamiltonian(hbar_omega, tau_dec)
    model = LindbladModel(2, H, (), (0.0, tau_dec), name="closed_unitary")
    return model, vectorize(thermal_state(H(0.0), beta))


def rabi_decay(omega: float = 2 * np.pi * 1e3, gamma0: float = 1426.0, t_max: float = 2e-3):
    """Driven qubit H = hbar omega sigma_x (omega in rad/s), sigma_z dephasing, rho0 = |0><0|."""
    model = LindbladModel(2, HBAR * omega * SIGMA_X, (Dissipator(SIGMA_Z, gamma0),), (0.0, t_max),
                          name="rabi_decay")
    return model, vectorize(np.outer(KET0, KET0.conj()))


def qpt_channel(omega: float = 2 * np.pi * 5e3, gamma0: float = 2500.0, t_max: float = 0.4e-3):
    """Process-tomography target: H = hbar omega sigma_x, sigma_z dephasing at gamma0."""
    model, rho0 = rabi_decay(omega, gamma0, t_max)
    model = replace(model, name="qpt_channel")
    return model, rho0


def rabi_population(t, omega: float, gamma: float):
    """Closed form P_1(t) for rabi_decay: 1/2 [1 - e^{-gamma t}(cos W t + gamma/W sin W t)].

    W = sqrt(4 omega^2 - gamma^2); the overdamped branch continues analytically.
    """
    t = np.asarray(t, dtype=float)
    W = np.sqrt(complex(4 * omega ** 2 - gamma ** 2))
    if abs(W) == 0:
        env = 1 + gamma * t
    else:
        env = (np.cos(W * t) + gamma / W * np.sin(W * t)).real
    return 0.5 * (1 - np.exp(-gamma * t) * env)


def random_constant_model(rng: np.random.Generator, dim: int = 2, n_jumps: int = 2,
                          energy_scale: float = HBAR_OMEGA_REF, rate_scale: float = 1e3,
                          tau_dec: float = 1e-3) -> LindbladModel:
    """Random Hermitian H and random (non-Hermitian) jump operators with constant rates."""
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = energy_scale * (A + A.conj().T) / 2
    dis = []
    for _ in range(n_jumps):
        G = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
        dis.append(Dissipator(G, float(rate_scale * rng.uniform(0.1, 1.0))))
    return LindbladModel(dim, H, tuple(dis), (0.0, tau_dec), name="random")


def random_state(rng: np.random.Generator, dim: int = 2, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    from scipy.stats import unitary_group
    return unitary_group.rvs(dim, random_state=rng)


# -- catalog ---------------------------------------------------------------

def _both(model, rho0, grid):
    # every closed form must hold under either propagator
    return propagate_exact(model, rho0, grid), propagate_adiabatic(model, rho0, grid)


def _check_dephasing(model, rho0, params):
    beta = params.get("beta", BETA_REF)
    hw = params.get("hbar_omega", HBAR_OMEGA_REF)
    grid = np.linspace(*model.t_span, 21)
    g = model.dissipators[0].rate
    expect = -np.tanh(beta * hw) * np.exp(-2 * np.array([gamma_integral(g, t) for t in grid]))
    return max(float(np.abs(tr.states[:, 1].real - expect).max()) for tr in _both(model, rho0, grid))


def _check_energy_basis(model, rho0, params):
    # the state follows the instantaneous thermal state up to non-adiabatic corrections
    beta = params.get("beta", BETA_REF)
    grid = np.linspace(*model.t_span, 21)
    thermal = [thermal_state(model.hamiltonian_at(t), beta) for t in grid]
    return max(float(np.abs(tr.rho(i) - thermal[i]).max())
               for tr in _both(model, rho0, grid) for i in range(len(grid)))


def _check_closed(model, rho0, params):
    grid = np.linspace(*model.t_span, 21)
    led, _ = exact_ledger(model, rho0, grid)
    ad = trajectory_ledger(model, propagate_adiabatic(model, rho0, grid))
    return float(max(np.abs(led.heat).max(), np.abs(ad.heat).max()))


def _check_rabi(model, rho0, params):
    grid = np.linspace(*model.t_span, 41)
    omega = np.real(model.hamiltonian_at(0.0)[0, 1]) / model.hbar
    gamma = model.dissipators[0].rate_at(0.0)
    expect = rabi_population(grid, omega, gamma)
    return max(float(np.abs((1 + tr.states[:, 3].real) / 2 - expect).max()) for tr in _both(model, rho0, grid))


def _check_bitflip(model, rho0, params):
    # sigma_z -> sigma_x, sigma_x -> sigma_y: coherence now decays along y
    beta = params.get("beta", BETA_REF)
    hw = params.get("hbar_omega", HBAR_OMEGA_REF)
    grid = np.linspace(*model.t_span, 21)
    g = model.dissipators[0].rate
    expect = -np.tanh(beta * hw) * np.exp(-2 * np.array([gamma_integral(g, t) for t in grid]))
    return max(float(np.abs(tr.states[:, 2].real - expect).max()) for tr in _both(model, rho0, grid))


@dataclass(frozen=True)
class Preset:
    name: str
    build: Callable
    closed_form: str
    check: Callable
    tolerance: float


PRESETS: dict[str, Preset] = {p.name: p for p in (
    Preset("dephasing_qubit", dephasing_qubit,
           "rho_x(t) = -tanh(beta hbar omega) exp(-2 int gamma)", _check_dephasing, 1e-8),
    Preset("linear_gamma", linear_gamma,
           "rho_x(t) = -tanh(beta hbar omega) exp(-2 gamma0 (t + t^2 / 2 tau))", _check_dephasing, 1e-8),
    Preset("energy_eigenbasis_dephasing", energy_eigenbasis_dephasing,
           "rho(t) ~ thermal state of H(t) at fixed beta", _check_energy_basis, 1e-2),
    Preset("bitflip_conjugate", bitflip_conjugate,
           "rho_y(t) = -tanh(beta hbar omega) exp(-2 int gamma)", _check_bitflip, 1e-8),
    Preset("closed_unitary", closed_unitary, "Q(t) = 0", _check_closed, 1e-9),
    Preset("rabi_decay", rabi_decay,
           "P_1(t) = [1 - e^{-gamma t}(cos W t + gamma/W sin W t)] / 2", _check_rabi, 1e-8),
    Preset("qpt_channel", qpt_channel,
           "P_1(t) = [1 - e^{-gamma t}(cos W t + gamma/W sin W t)] / 2", _check_rabi, 1e-8),
)}


def preset(name: str, verify: bool = True, **params) -> tuple[LindbladModel, CoherenceVector]:
    """Build a named preset; by default its closed-form check runs first."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    if verify:
        verify_preset(name, **params)
    return PRESETS[name].build(**params)


def verify_preset(name: str, **params) -> float:
    """Run the preset's closed-form check; returns the deviation, raises above tolerance."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    entry = PRESETS[name]
    model, rho0 = entry.build(**params)
    dev = entry.check(model, rho0, params)
    if not dev <= entry.tolerance:
        raise AssertionError(f"preset {name} deviates from its closed form by {dev:.3e}")
    return dev


def pauli_hamiltonian(coeffs: dict[str, float]) -> np.ndarray:
    """sum_label c * pauli_string(label), e.g. {"x": 82.662}."""
    if not coeffs:
        raise ValueError("empty Hamiltonian")
    mats = [c * pauli_string(lbl) for lbl, c in coeffs.items()]
    dims = {m.shape for m in mats}
    if len(dims) != 1:
        raise ValueError("Pauli labels of different lengths")
    return sum(mats)
