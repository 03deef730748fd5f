"""Exact and adiabatic propagation of coherence vectors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .spectral import AdiabaticPhaseTrack, adiabatic_phases
from .superop import CoherenceVector, LindbladModel, devectorize

POSITIVITY_WARN = 1e-8
POSITIVITY_ABORT = 1e-6


class IntegrationError(RuntimeError):
    pass


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (N, D^2) coherence components
    method: str
    basis: object
    phases: AdiabaticPhaseTrack | None = None
    coefficients: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> CoherenceVector:
        return CoherenceVector(self.basis, self.states[i])

    def rho(self, i: int) -> np.ndarray:
        return devectorize(self.state(i))

    @property
    def final(self) -> CoherenceVector:
        return self.state(-1)


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size < 2 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must hold at least two strictly increasing times")
    return g


def check_physical(rho: np.ndarray, tol: float = POSITIVITY_ABORT, what: str = "state"):
    """Hermitian, unit trace, PSD within ``tol``; returns the minimum eigenvalue."""
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise ValueError(f"{what} is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-9:
        raise ValueError(f"{what} does not have unit trace")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -tol:
        raise PositivityError(f"{what} has eigenvalue {lo:.3e} below -{tol:.0e}")
    return lo


def integrate(fun: Callable, y0: np.ndarray, grid: np.ndarray, rtol: float = 1e-10,
              atol: float = 1e-12, method: str = "RK45") -> np.ndarray:
    """Adaptive embedded Runge-Kutta, sampled on ``grid``; returns (N, len(y0))."""
    grid = _as_grid(grid)
    sol = solve_ivp(fun, (grid[0], grid[-1]), y0, method=method, t_eval=grid,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    return sol.y.T


def _real_dynamics(model: LindbladModel, y0: np.ndarray) -> bool:
    # Hermiticity-preserving generators are real in a Hermitian basis
    return model.strict and model.basis.is_hermitian and np.abs(y0.imag).max() < 1e-14


def propagate_exact(model: LindbladModel, rho0: CoherenceVector, grid, rtol: float = 1e-10,
                    atol: float = 1e-12, method: str = "RK45") -> Trajectory:
    """Integrate |rho'> = L(t)|rho> and sample on ``grid``."""
    grid = _as_grid(grid)
    y0 = np.asarray(rho0.comps, dtype=complex)
    check_physical(devectorize(rho0), what="initial state")
    if _real_dynamics(model, y0):
        def rhs(t, y):
            return model.liouvillian_matrix(t, check=False).real @ y
        ys = integrate(rhs, y0.real.copy(), grid, rtol, atol, method).astype(complex)
    else:
        def rhs(t, y):
            return model.liouvillian_matrix(t, check=False) @ y
        ys = integrate(rhs, y0, grid, rtol, atol, method)
    traj = Trajectory(grid, ys, "exact", model.basis)
    _check_trajectory(traj)
    return traj


def _check_trajectory(traj: Trajectory):
    drift = np.abs(traj.states[:, 0] - 1).max()
    if drift > 1e-9:
        warnings.warn(f"trace drift {drift:.2e} along {traj.method} trajectory", RuntimeWarning)
    lo = min(float(np.linalg.eigvalsh(traj.rho(i)).min()) for i in range(len(traj)))
    if lo < -POSITIVITY_ABORT:
        raise PositivityError(f"{traj.method} trajectory left the state space (eigenvalue {lo:.3e})")
    if lo < -POSITIVITY_WARN:
        warnings.warn(f"small negative eigenvalue {lo:.2e} along {traj.method} trajectory", RuntimeWarning)


def propagate_adiabatic(model: LindbladModel, rho0: CoherenceVector, grid, max_condition: float = 1e8,
                        initial_gauge=None) -> Trajectory:
    """Decoupled-eigenspace evolution sum_a c_a exp(int lambda_tilde_a) |D_a(t)>>."""
    grid = _as_grid(grid)
    track_ = adiabatic_phases(model, grid, max_condition, initial_gauge)
    c = track_.left[0] @ np.asarray(rho0.comps, dtype=complex)
    amps = track_.amplitudes(c)
    states = np.einsum("tia,ta->ti", track_.right, amps)
    return Trajectory(grid, states, "adiabatic", model.basis, track_, c)


def _sqrt_psd(rho: np.ndarray, tol: float) -> np.ndarray:
    w, V = np.linalg.eigh((rho + rho.conj().T) / 2)
    if w.min() < -tol:
        raise ValueError(f"matrix not positive semidefinite (eigenvalue {w.min():.3e})")
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def fidelity(a: CoherenceVector, b: CoherenceVector, tol: float = POSITIVITY_WARN) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)), not squared."""
    ra, rb = devectorize(a), devectorize(b)
    s = _sqrt_psd(ra, tol)
    inner = s @ rb @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.clip(np.sqrt(np.clip(w, 0, None)).sum(), 0.0, 1.0))


def trajectory_fidelities(exact: Trajectory, adiabatic: Trajectory) -> np.ndarray:
    return np.array([fidelity(exact.state(i), adiabatic.state(i)) for i in range(len(exact))])


@dataclass(frozen=True)
class FidelityRow:
    gamma0: float
    f_min: float
    tau_at_min: float


def adiabaticity_report(model_factory: Callable[[float, float], LindbladModel], rho0: CoherenceVector,
                        gamma0_values: Sequence[float], tau_values: Sequence[float],
                        samples: int = 201) -> list[FidelityRow]:
    """Minimum over tau_dec and over every sample of F(exact, adiabatic).

    ``model_factory(gamma0, tau_dec)`` builds the generator for one run.
    """
    rows = []
    for g0 in gamma0_values:
        best = (np.inf, np.nan)
        for tau in tau_values:
            model = model_factory(g0, tau)
            grid = np.linspace(0.0, tau, samples)
            ex = propagate_exact(model, rho0, grid)
            ad = propagate_adiabatic(model, rho0, grid)
            f = float(trajectory_fidelities(ex, ad).min())
            if f < best[0]:
                best = (f, tau)
        rows.append(FidelityRow(float(g0), float(best[0]), float(best[1])))
    return rows
