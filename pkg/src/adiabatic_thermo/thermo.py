"""Heat, work, entropy and effective temperature along open-system dynamics.

Sign convention: dQ > 0 and dW > 0 mean energy flowing into the system.
Energies are in peV, rates in peV/s, entropies in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.linalg import expm
from scipy.special import xlogy

from .dynamics import Trajectory, _as_grid, _real_dynamics, check_physical, fidelity, integrate
from .spectral import AdiabaticPhaseTrack
from .superop import (SIGMA_X, SIGMA_Z, CoherenceVector, Dissipator, HamiltonianVector, LindbladModel,
                      Superoperator, _check_basis, devectorize, hamiltonian_vector)

GammaFn = Union[float, Callable[[float], float]]

PURE_STATE_TOL = 1e-12


# -- raw operator forms ----------------------------------------------------

def work_rate_raw(H_dot: np.ndarray, rho: np.ndarray) -> float:
    """Tr(rho dH/dt)."""
    return float(np.real(np.trace(rho @ H_dot)))


def heat_rate_raw(rho_dot: np.ndarray, H: np.ndarray) -> float:
    """Tr(d rho/dt H)."""
    return float(np.real(np.trace(rho_dot @ H)))


# -- superoperator forms ---------------------------------------------------

def _real_of(z, scale, what):
    if abs(z.imag) > 1e-10 * max(1.0, abs(scale)):
        raise ValueError(f"{what} has imaginary part {z.imag:.3e}")
    return float(z.real)


def internal_energy(h: HamiltonianVector, rho: CoherenceVector) -> float:
    _check_basis(h, rho)
    z = np.dot(h.comps, rho.comps) / rho.basis.dim
    return _real_of(z, np.abs(h.comps).max(), "internal energy")


def heat_rate(h: HamiltonianVector, L: Superoperator, rho: CoherenceVector) -> float:
    """(1/D) <<h| L |rho>>."""
    _check_basis(h, rho)
    _check_basis(L, rho)
    z = h.comps @ (L.mat @ rho.comps) / rho.basis.dim
    return _real_of(z, np.abs(h.comps).max() * np.abs(L.mat).max(), "heat rate")


def work_rate(hdot: HamiltonianVector, rho: CoherenceVector) -> float:
    """(1/D) <<dh/dt|rho>>."""
    _check_basis(hdot, rho)
    z = np.dot(hdot.comps, rho.comps) / rho.basis.dim
    return _real_of(z, np.abs(hdot.comps).max(), "work rate")


def hamiltonian_derivative(model: LindbladModel, t: float, step: float | None = None) -> HamiltonianVector:
    """Central finite difference of h(t); second-order one-sided at the span edges."""
    basis = model.basis
    if model.constant_hamiltonian:
        return HamiltonianVector(basis, np.zeros(basis.size))
    t0, t1 = model.t_span
    if step is None:
        step = 1e-6 * (t1 - t0) if t1 > t0 else 1e-9
    f = lambda s: hamiltonian_vector(model.hamiltonian_at(s), basis).comps
    if t - step < t0:
        d = (-3 * f(t) + 4 * f(t + step) - f(t + 2 * step)) / (2 * step)
    elif t + step > t1:
        d = (3 * f(t) - 4 * f(t - step) + f(t - 2 * step)) / (2 * step)
    else:
        d = (f(t + step) - f(t - step)) / (2 * step)
    return HamiltonianVector(basis, d)


# -- adiabatic forms -------------------------------------------------------

def _grid_index(track_: AdiabaticPhaseTrack, t) -> int:
    if isinstance(t, (int, np.integer)):
        return int(t)
    i = int(np.argmin(np.abs(track_.times - t)))
    if not np.isclose(track_.times[i], t, rtol=0, atol=1e-12 * max(1.0, abs(t))):
        raise ValueError(f"t = {t} is not a sample of the adiabatic track")
    return i


def adiabatic_heat_rate(model: LindbladModel, c, track_: AdiabaticPhaseTrack, t) -> float:
    """(1/D) sum_a c_a exp(int lambda_tilde_a) <<h| L |D_a>> at a track sample ``t`` (index or time)."""
    i = _grid_index(track_, t)
    ti = track_.times[i]
    h = hamiltonian_vector(model.hamiltonian_at(ti), model.basis).comps
    L = model.liouvillian_matrix(ti)
    amps = np.asarray(c) * np.exp(track_.cumulative[i])
    terms = (h @ L @ track_.right[i]) * amps
    return _real_of(terms.sum() / model.dim, np.abs(h).max() * np.abs(L).max(), "adiabatic heat rate")


def adiabatic_work_rate(model: LindbladModel, c, track_: AdiabaticPhaseTrack, t) -> float:
    """(1/D) sum_a c_a exp(int lambda_tilde_a) <<dh/dt|D_a>>."""
    i = _grid_index(track_, t)
    hdot = hamiltonian_derivative(model, track_.times[i]).comps
    amps = np.asarray(c) * np.exp(track_.cumulative[i])
    terms = (hdot @ track_.right[i]) * amps
    return _real_of(terms.sum() / model.dim, np.abs(hdot).max(), "adiabatic work rate")


def adiabatic_entropy_rate(c, track_: AdiabaticPhaseTrack, t, rho_log: CoherenceVector) -> float:
    """-(1/D) sum_a c_a exp(int lambda_tilde_a) lambda_a <<rho_log|D_a>> (trivial Jordan chains)."""
    i = _grid_index(track_, t)
    amps = np.asarray(c) * np.exp(track_.cumulative[i])
    proj = rho_log.comps @ track_.right[i]
    terms = amps * track_.eigenvalues[i] * proj
    scale = np.abs(amps).max() * np.abs(track_.eigenvalues[i]).max() * np.abs(proj).max()
    return _real_of(-terms.sum() / rho_log.basis.dim, scale, "adiabatic entropy rate")


# -- entropy ---------------------------------------------------------------

def _qubit_radius(rho: CoherenceVector):
    r = rho.comps[1:].real
    return r, float(np.sqrt(r @ r))


def _spectrum(rho: CoherenceVector) -> np.ndarray:
    if rho.dim == 2 and rho.basis.is_hermitian:
        _, rad = _qubit_radius(rho)
        return np.array([(1 - rad) / 2, (1 + rad) / 2])
    m = devectorize(rho)
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


def entropy(rho: CoherenceVector) -> float:
    """von Neumann entropy in nats, with 0 log 0 = 0."""
    p = np.clip(_spectrum(rho), 0.0, None)
    return float(-xlogy(p, p).sum())


def log_vector(rho: CoherenceVector) -> CoherenceVector:
    """Components Tr(sigma_n log rho) (stored in a CoherenceVector for convenience).

    Qubits use the closed form log rho = a 1 + arctanh(r) r_hat.sigma, which
    keeps full relative accuracy as |r| -> 1.
    """
    basis = rho.basis
    if rho.dim == 2 and basis.is_hermitian:
        r, rad = _qubit_radius(rho)
        if rad >= 1 - PURE_STATE_TOL:
            raise ValueError("log of a (nearly) pure state diverges")
        a = 0.5 * (np.log1p(rad) + np.log1p(-rad)) - np.log(2.0)
        b = np.arctanh(rad)
        comps = np.zeros(4, dtype=complex)
        comps[0] = 2 * a
        if rad > 0:
            comps[1:] = 2 * b * r / rad
        return CoherenceVector(basis, comps)
    m = devectorize(rho)
    w, V = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < PURE_STATE_TOL:
        raise ValueError("log of a rank-deficient state diverges")
    logm = (V * np.log(w)) @ V.conj().T
    return CoherenceVector(basis, np.einsum("kij,ji->k", basis.elements, logm))


def entropy_rate(rho_log: CoherenceVector, L: Superoperator, rho: CoherenceVector) -> float:
    """dS/dt = -(1/D) <<rho_log| L |rho>>, components rho_log_n = Tr(sigma_n log rho)."""
    if _spectrum(rho).min() < PURE_STATE_TOL:
        raise ValueError("entropy rate diverges at a pure state")
    z = -(rho_log.comps @ (L.mat @ rho.comps)) / rho.basis.dim
    return _real_of(z, np.abs(rho_log.comps).max() * np.abs(L.mat).max(), "entropy rate")


# -- closed forms for the dephasing qubit -----------------------------------

def gamma_integral(gamma_fn: GammaFn, t: float, t0: float = 0.0) -> float:
    if not callable(gamma_fn):
        return float(gamma_fn) * (t - t0)
    val, _ = quad(gamma_fn, t0, t, epsabs=0.0, epsrel=1e-13, limit=200)
    return float(val)


def max_heat(hbar_omega: float, beta: float) -> float:
    """Ceiling hbar*omega*tanh(beta*hbar*omega) on the exchanged heat."""
    return hbar_omega * np.tanh(beta * hbar_omega)


def total_heat_closed_form(hbar_omega: float, beta: float, gamma_fn: GammaFn, tau_dec: float) -> float:
    """hbar*omega*tanh(beta*hbar*omega) * (1 - exp(-2 gamma_bar tau))."""
    if tau_dec == 0:
        return 0.0
    return float(max_heat(hbar_omega, beta) * -np.expm1(-2 * gamma_integral(gamma_fn, tau_dec)))


def effective_inverse_temperature(hbar_omega: float, beta: float, gamma_fn: GammaFn, t: float) -> float:
    """(1/hbar omega) arctanh(exp(-2 int_0^t gamma) tanh(beta hbar omega)), in peV^-1."""
    g = np.exp(-2 * gamma_integral(gamma_fn, t)) * np.tanh(beta * hbar_omega)
    return float(np.arctanh(g) / hbar_omega)


def average_power(hbar_omega: float, beta: float, gamma_bar: float, tau_dec: float) -> float:
    """|dQ_max| (1 - exp(-2 gamma_bar tau)) / tau, in peV/s."""
    if tau_dec <= 0:
        raise ValueError("average power needs tau_dec > 0")
    return float(abs(max_heat(hbar_omega, beta)) * -np.expm1(-2 * gamma_bar * tau_dec) / tau_dec)


def state_inverse_temperature(rho: CoherenceVector, H: np.ndarray) -> float:
    """Inverse temperature of the Gibbs state of H closest along its axis to a qubit state.

    For rho = (1 + r.sigma)/2 and traceless part H0 = E n.sigma, returns
    arctanh(-r.n)/E.  NaN outside the qubit case or for E = 0.
    """
    if rho.dim != 2 or not rho.basis.is_hermitian:
        return float("nan")
    hv = hamiltonian_vector(H, rho.basis).comps[1:].real
    hn = float(np.sqrt(hv @ hv))
    if hn == 0:
        return float("nan")
    E = hn / 2
    r = rho.comps[1:].real
    # aligned states: arctanh(|r|) exactly, matching the entropy-rate log
    proj = -(r @ hv) / hn
    rad = float(np.sqrt(r @ r))
    if np.isclose(abs(proj), rad, rtol=1e-14, atol=0):
        proj = np.copysign(rad, proj)
    return float(np.arctanh(proj) / E)


def thermal_state(H: np.ndarray, beta: float) -> np.ndarray:
    w, V = np.linalg.eigh(np.asarray(H, dtype=complex))
    p = np.exp(-beta * (w - w.min()))
    p /= p.sum()
    return (V * p) @ V.conj().T


# -- ledgers ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ThermoLedger:
    """Time series of U, Q, W, S and beta_deph on a grid (peV, nats, peV^-1)."""

    times: np.ndarray
    internal_energy: np.ndarray
    heat: np.ndarray
    work: np.ndarray
    entropy: np.ndarray
    beta_deph: np.ndarray
    heat_rate: np.ndarray
    work_rate: np.ndarray
    entropy_rate: np.ndarray
    fidelity: np.ndarray | None = None
    method: str = "exact"

    @property
    def delta_U(self) -> np.ndarray:
        return self.internal_energy - self.internal_energy[0]

    @property
    def total_heat(self) -> float:
        return float(self.heat[-1])

    @property
    def power(self) -> float:
        """Average power |Q(tau)| / tau."""
        tau = self.times[-1] - self.times[0]
        if tau <= 0:
            raise ValueError("average power needs a positive duration")
        return abs(self.total_heat) / tau

    def first_law_residual(self) -> np.ndarray:
        return self.delta_U - (self.heat + self.work)

    def check_first_law(self, rtol: float = 1e-8, floor: float = 1.0) -> float:
        """Max residual; raises if |dU - (Q + W)| > rtol * max(|dU|, floor) anywhere."""
        res = np.abs(self.first_law_residual())
        bound = rtol * np.maximum(np.abs(self.delta_U), floor)
        if np.any(res > bound):
            i = int(np.argmax(res - bound))
            raise AssertionError(f"first law violated at t={self.times[i]:.6g}: residual {res[i]:.3e}")
        return float(res.max())


def _sample_quantities(model, states, times, basis):
    n = len(times)
    U = np.empty(n)
    S = np.empty(n)
    beta = np.empty(n)
    qdot = np.empty(n)
    wdot = np.empty(n)
    sdot = np.full(n, np.nan)
    for i, t in enumerate(times):
        v = CoherenceVector(basis, states[i])
        H = model.hamiltonian_at(t)
        h = hamiltonian_vector(H, basis)
        L = Superoperator(basis, model.liouvillian_matrix(t))
        U[i] = internal_energy(h, v)
        qdot[i] = heat_rate(h, L, v)
        wdot[i] = work_rate(hamiltonian_derivative(model, t), v)
        S[i] = entropy(v)
        beta[i] = state_inverse_temperature(v, H)
        if _spectrum(v).min() >= PURE_STATE_TOL:
            sdot[i] = entropy_rate(log_vector(v), L, v)
    return U, S, beta, qdot, wdot, sdot


def _ledger_rhs(model, basis, const_h, real):
    n, D = basis.size, model.dim

    def rhs(t, y):
        L = model.liouvillian_matrix(t, check=False)
        if real:
            L = L.real
        rho = y[:n]
        drho = L @ rho
        h = const_h if const_h is not None else hamiltonian_vector(model.hamiltonian_at(t), basis).comps
        hdot = hamiltonian_derivative(model, t).comps
        if real:
            h, hdot = h.real, hdot.real
        out = np.empty_like(y)
        out[:n] = drho
        out[n] = h @ drho / D
        out[n + 1] = hdot @ rho / D
        return out

    return rhs


def exact_ledger(model: LindbladModel, rho0: CoherenceVector, grid, rtol: float = 1e-10,
                 atol: float = 1e-12, method: str = "RK45") -> tuple[ThermoLedger, Trajectory]:
    """Propagate exactly with Q and W integrated alongside the state.

    The heat and work rates ride on the adaptive integrator as two extra
    components, so Q(t) and W(t) carry the integrator's accuracy rather than
    the sampling grid's. A time-independent generator is propagated with the
    matrix exponential of the augmented system instead.
    """
    grid = _as_grid(grid)
    basis = model.basis
    n = basis.size
    D = model.dim
    y0c = np.asarray(rho0.comps, dtype=complex)
    check_physical(devectorize(rho0), what="initial state")
    const_h = hamiltonian_vector(model.hamiltonian_at(grid[0]), basis).comps if model.constant_hamiltonian else None
    real = _real_dynamics(model, y0c)

    if model.time_independent:
        # constant generator: Q' = h.L rho / D, W' = 0
        L = model.liouvillian_matrix(grid[0], check=False)
        h = const_h
        if real:
            L, h = L.real, h.real
        A = np.zeros((n + 2, n + 2), dtype=L.dtype)
        A[:n, :n] = L
        A[n, :n] = h @ L / D
        y0 = np.concatenate([y0c.real if real else y0c, [0.0, 0.0]])
        ys = np.array([expm(A * (t - grid[0])) @ y0 for t in grid])
    else:
        rhs = _ledger_rhs(model, basis, const_h, real)
        y0 = np.concatenate([y0c.real if real else y0c, [0.0, 0.0]])
        ys = integrate(rhs, y0, grid, rtol, atol, method)
    states = ys[:, :n].astype(complex)
    traj = Trajectory(grid, states, "exact", basis)
    U, S, beta, qdot, wdot, sdot = _sample_quantities(model, states, grid, basis)
    led = ThermoLedger(grid, U, ys[:, n].real, ys[:, n + 1].real, S, beta, qdot, wdot, sdot, method="exact")
    return led, traj


def exact_heat(model: LindbladModel, rho0: CoherenceVector, tau: float | None = None,
               rtol: float = 1e-10, atol: float = 1e-12) -> float:
    """Total heat over [t0, tau] from heat_rate integrated along the exact dynamics."""
    t0, t1 = model.t_span
    tau = t1 if tau is None else tau
    if tau == t0:
        return 0.0
    led, _ = exact_ledger(model, rho0, [t0, tau], rtol, atol)
    return led.total_heat


def trajectory_ledger(model: LindbladModel, traj: Trajectory, reference: Trajectory | None = None) -> ThermoLedger:
    """Ledger from sampled states with trapezoid-integrated rates.

    Adiabatic trajectories use the decoupled-eigenspace expressions for heat,
    work and entropy rates.
    """
    times = traj.times
    U, S, beta, qdot, wdot, sdot = _sample_quantities(model, traj.states, times, traj.basis)
    if traj.method == "adiabatic" and traj.phases is not None:
        tr, c = traj.phases, traj.coefficients
        qdot = np.array([adiabatic_heat_rate(model, c, tr, i) for i in range(len(times))])
        wdot = np.array([adiabatic_work_rate(model, c, tr, i) for i in range(len(times))])
        for i in range(len(times)):
            v = traj.state(i)
            if _spectrum(v).min() >= PURE_STATE_TOL:
                sdot[i] = adiabatic_entropy_rate(c, tr, i, log_vector(v))
    Q = cumulative_trapezoid(qdot, times, initial=0.0)
    W = cumulative_trapezoid(wdot, times, initial=0.0)
    fid = None
    if reference is not None:
        fid = np.array([fidelity(reference.state(i), traj.state(i)) for i in range(len(times))])
    return ThermoLedger(times, U, Q, W, S, beta, qdot, wdot, sdot, fid, method=traj.method)


def entropy_heat_relation_check(ledger: ThermoLedger) -> float:
    """max_t |dS/dt - beta_deph(t) dQ/dt| in nats/s (NaN samples skipped)."""
    res = np.abs(ledger.entropy_rate - ledger.beta_deph * ledger.heat_rate)
    res = res[np.isfinite(res)]
    if res.size == 0:
        raise ValueError("ledger holds no finite entropy-rate samples")
    return float(res.max())


def converged_heat(model: LindbladModel, traj_fn: Callable[[np.ndarray], Trajectory], samples: int = 257,
                   rtol: float = 1e-8, max_samples: int = 2 ** 20) -> tuple[float, int]:
    """Trapezoid heat on a grid doubled until successive totals agree to ``rtol``."""
    t0, t1 = model.t_span
    prev = None
    while samples <= max_samples:
        grid = np.linspace(t0, t1, samples)
        q = trajectory_ledger(model, traj_fn(grid)).total_heat
        if prev is not None and abs(q - prev) <= rtol * max(abs(q), 1e-300):
            return q, samples
        prev = q
        samples = 2 * samples - 1
    raise RuntimeError(f"heat did not converge to {rtol} below {max_samples} samples")


# -- unitary conjugation -----------------------------------------------------

def rotation(axis: str, theta: float) -> np.ndarray:
    """R_a(theta) = exp(-i theta sigma_a / 2)."""
    from .superop import PAULI
    return expm(-0.5j * theta * PAULI[axis])


def bitflip_unitary() -> np.ndarray:
    """The pi/2 z-then-x rotation sequence (R_x applied first).

    Conjugation by it maps sigma_z -> sigma_x and sigma_x -> sigma_y, turning
    the computational-basis dephasing of H_x into a bit-flip channel with a
    sigma_y Hamiltonian.
    """
    return rotation("z", np.pi / 2) @ rotation("x", np.pi / 2)


def _check_unitary(U, tol=1e-12):
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("unitary must be square")
    if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() > tol:
        raise ValueError("matrix is not unitary")
    return U


def conjugate_model(model: LindbladModel, U) -> LindbladModel:
    """H' = U H U^dag, Gamma_n' = U Gamma_n U^dag, same rates."""
    U = _check_unitary(U)
    if U.shape[0] != model.dim:
        raise ValueError("unitary dimension does not match the model")
    Ud = U.conj().T

    def conj(op):
        if callable(op):
            return lambda t, op=op: U @ np.asarray(op(t), dtype=complex) @ Ud
        return U @ np.asarray(op, dtype=complex) @ Ud

    dis = tuple(Dissipator(conj(d.jump), d.rate) for d in model.dissipators)
    return LindbladModel(model.dim, conj(model.hamiltonian), dis, model.t_span, model.hbar,
                         model.strict, f"{model.name}^U" if model.name else "")


def conjugate_state(rho: CoherenceVector, U) -> CoherenceVector:
    from .superop import vectorize
    U = _check_unitary(U)
    return vectorize(U @ devectorize(rho) @ U.conj().T, rho.basis)


@dataclass(frozen=True, eq=False)
class ConjugationWitness:
    unitary: np.ndarray
    original: LindbladModel
    conjugated: LindbladModel
    delta_q: float
    delta_q_conj: float

    @property
    def difference(self) -> float:
        return abs(self.delta_q - self.delta_q_conj)


def conjugation_witness(model: LindbladModel, rho0: CoherenceVector, U, tau: float | None = None,
                        rtol: float = 1e-10, atol: float = 1e-12) -> ConjugationWitness:
    """Total heat of a constant-H model and of its unitary conjugate."""
    if not model.constant_hamiltonian:
        raise ValueError("heat equivalence under conjugation requires a constant Hamiltonian")
    U = _check_unitary(U)
    mc = conjugate_model(model, U)
    q = exact_heat(model, rho0, tau, rtol, atol)
    qc = exact_heat(mc, conjugate_state(rho0, U), tau, rtol, atol)
    return ConjugationWitness(U, model, mc, q, qc)


__all__ = [name for name in dir() if not name.startswith("_")] + ["SIGMA_X", "SIGMA_Z"]
