"""State and process tomography, and dephasing-rate calibration fits (qubits)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .dynamics import _sqrt_psd, propagate_exact
from .superop import (IDENTITY2, KET0, KET1, SIGMA_X, SIGMA_Y, SIGMA_Z, CoherenceVector, LindbladModel,
                      devectorize, operator_basis, vectorize)

PAULI_BASIS = (IDENTITY2, SIGMA_X, SIGMA_Y, SIGMA_Z)
PAULI_LABELS = ("i", "x", "y", "z")

_PLUS = (KET0 + KET1) / np.sqrt(2)
_PLUS_I = (KET0 + 1j * KET1) / np.sqrt(2)
PROBE_KETS = (KET0, KET1, _PLUS, _PLUS_I)
PROBE_STATES = tuple(np.outer(k, k.conj()) for k in PROBE_KETS)


# -- state tomography ------------------------------------------------------

def sample_expectations(bloch, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Binomial estimate of <sigma_x>, <sigma_y>, <sigma_z> with ``shots`` repetitions per basis."""
    b = np.clip(np.asarray(bloch, dtype=float), -1.0, 1.0)
    p_up = (1 + b) / 2
    return 2 * rng.binomial(int(shots), p_up) / shots - 1


def reconstruct_state(pauli_expectations, shots: int | None = None,
                      rng: np.random.Generator | None = None) -> CoherenceVector:
    """Coherence vector (1, <x>, <y>, <z>).

    With ``shots`` the expectations are first resampled binomially and the
    result is pulled back onto the Bloch ball by radial truncation.
    """
    e = np.asarray(pauli_expectations, dtype=float).reshape(-1)
    if e.shape != (3,):
        raise ValueError("expected three Pauli expectations")
    if np.any(np.abs(e) > 1 + 1e-12):
        raise ValueError("Pauli expectation outside [-1, 1]")
    if shots is not None:
        if shots <= 0:
            raise ValueError("shots must be positive")
        e = sample_expectations(e, shots, np.random.default_rng() if rng is None else rng)
        r = np.linalg.norm(e)
        if r > 1:
            e = e / r
    elif np.linalg.norm(e) > 1 + 1e-6:
        raise ValueError(f"Bloch vector norm {np.linalg.norm(e):.6g} exceeds 1")
    return CoherenceVector(operator_basis(2), np.concatenate([[1.0], e]))


# -- process tomography ----------------------------------------------------

def _kraus_design() -> np.ndarray:
    # columns: row-major vec of the superoperator A_m (.) A_n^dag, index 4m + n
    cols = [np.kron(A, B.conj()).reshape(-1) for A in PAULI_BASIS for B in PAULI_BASIS]
    return np.stack(cols, axis=1)


_DESIGN = _kraus_design()


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """chi over {1, sigma_x, sigma_y, sigma_z}: eps(rho) = sum chi_mn A_m rho A_n^dag."""

    chi: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.chi, dtype=complex)
        if c.shape != (4, 4):
            raise ValueError("chi must be 4x4")
        object.__setattr__(self, "chi", c)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(self.chi[m, n] * PAULI_BASIS[m] @ rho @ PAULI_BASIS[n].conj().T
                   for m in range(4) for n in range(4))

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.chi - self.chi.conj().T).max())

    def trace_preservation_residual(self) -> float:
        s = sum(self.chi[m, n] * PAULI_BASIS[n].conj().T @ PAULI_BASIS[m] for m in range(4) for n in range(4))
        return float(np.abs(s - IDENTITY2).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.chi + self.chi.conj().T) / 2).min())

    def validate(self, herm_tol=1e-10, tp_tol=1e-8, psd_tol=1e-8):
        if self.hermiticity_residual() > herm_tol:
            raise ValueError("chi is not Hermitian")
        if self.trace_preservation_residual() > tp_tol:
            raise ValueError("chi is not trace preserving")
        if self.min_eigenvalue() < -psd_tol:
            raise ValueError(f"chi has negative eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def project_psd(self) -> "ProcessMatrix":
        """Clip negative eigenvalues and restore unit trace."""
        h = (self.chi + self.chi.conj().T) / 2
        w, V = np.linalg.eigh(h)
        w = np.clip(w, 0.0, None)
        out = (V * w) @ V.conj().T
        return ProcessMatrix(out / np.trace(out).real)

    def off_support(self, support: Sequence[int] = (0, 3)) -> float:
        """Largest |chi_mn| outside the diagonal entries listed in ``support``."""
        mask = np.ones((4, 4), dtype=bool)
        for k in support:
            mask[k, k] = False
        return float(np.abs(self.chi[mask]).max())


def chi_from_superoperator(S: np.ndarray) -> ProcessMatrix:
    """chi from the row-major vec-space matrix of a qubit channel."""
    sol, *_ = np.linalg.lstsq(_DESIGN, np.asarray(S, dtype=complex).reshape(-1), rcond=None)
    return ProcessMatrix(sol.reshape(4, 4))


def _bloch(rho: np.ndarray) -> np.ndarray:
    return np.array([np.trace(rho @ P).real for P in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def process_tomography(channel: Callable[[CoherenceVector], CoherenceVector], shots: int | None = None,
                       rng: np.random.Generator | None = None, linearity_tol: float = 1e-8) -> ProcessMatrix:
    """Linear-inversion chi from the probes |0>, |1>, |+>, |+i> measured in X, Y, Z.

    The channel is first checked for linearity on a mixture of probes.  With
    ``shots`` every output state is resampled and the final chi is projected
    onto the PSD cone.
    """
    basis = operator_basis(2)
    outs = [devectorize(channel(vectorize(p, basis))) for p in PROBE_STATES]
    mix = 0.3 * PROBE_STATES[0] + 0.7 * PROBE_STATES[2]
    lhs = devectorize(channel(vectorize(mix, basis)))
    if np.abs(lhs - (0.3 * outs[0] + 0.7 * outs[2])).max() > linearity_tol:
        raise ValueError("channel is not linear on the probe set")
    return chi_from_probe_outputs(outs, shots, rng)


def chi_from_probe_outputs(outputs: Sequence[np.ndarray], shots: int | None = None,
                           rng: np.random.Generator | None = None) -> ProcessMatrix:
    """Linear inversion from the channel images of PROBE_STATES (density matrices)."""
    outs = [np.asarray(o, dtype=complex) for o in outputs]
    if len(outs) != 4:
        raise ValueError("expected the images of the four probe states")
    if shots is not None:
        rng = np.random.default_rng() if rng is None else rng
        outs = [devectorize(reconstruct_state(_bloch(o), shots, rng)) for o in outs]
    P = np.stack([p.reshape(-1) for p in PROBE_STATES], axis=1)
    O = np.stack([o.reshape(-1) for o in outs], axis=1)
    S = O @ np.linalg.inv(P)
    chi = chi_from_superoperator(S)
    chi = ProcessMatrix((chi.chi + chi.chi.conj().T) / 2)
    return chi.project_psd() if shots is not None else chi


def process_fidelity(chi_exp: ProcessMatrix, chi_id: ProcessMatrix, tol: float = 1e-8) -> float:
    """[Tr sqrt(sqrt(chi_exp) chi_id sqrt(chi_exp))]^2."""
    for c in (chi_exp, chi_id):
        if c.min_eigenvalue() < -tol:
            raise ValueError(f"process matrix not PSD (eigenvalue {c.min_eigenvalue():.3e})")
    s = _sqrt_psd(chi_exp.chi, tol)
    inner = s @ chi_id.chi @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.clip(np.sqrt(np.clip(w, 0, None)).sum() ** 2, 0.0, 1.0))


def lindblad_channel(model: LindbladModel, t: float, rtol: float = 1e-11,
                     atol: float = 1e-13) -> Callable[[CoherenceVector], CoherenceVector]:
    """rho(0) -> rho(t) under the exact dynamics of ``model`` started at t_span[0]."""
    t0 = model.t_span[0]
    if t <= t0:
        return lambda v: v

    def channel(v):
        return propagate_exact(model, v, [t0, t], rtol, atol).final
    return channel


def dephasing_chi(p: float) -> ProcessMatrix:
    """sigma_z dephasing with coherence factor p = exp(-2 gamma t)."""
    return ProcessMatrix(np.diag([(1 + p) / 2, 0, 0, (1 - p) / 2]))


# -- Rabi calibration ------------------------------------------------------

def rabi_model(t, gamma, omega, amplitude, offset, phase):
    """P_1(t) = offset - amplitude exp(-gamma t) cos(omega t + phase)."""
    return offset - amplitude * np.exp(-gamma * t) * np.cos(omega * t + phase)


def simulate_rabi_trace(model: LindbladModel, rho0: CoherenceVector, times, shots: int | None = None,
                        rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """P_1(t) from exact propagation, optionally binomially sampled."""
    times = np.asarray(times, dtype=float)
    traj = propagate_exact(model, rho0, times)
    p1 = np.clip((1 + traj.states[:, 3].real) / 2, 0.0, 1.0)
    if shots is not None:
        rng = np.random.default_rng() if rng is None else rng
        p1 = rng.binomial(int(shots), p1) / shots
    return times, p1


@dataclass(frozen=True)
class RabiFit:
    gamma: float
    omega: float
    amplitude: float
    offset: float
    phase: float
    gamma_std: float
    rms_residual: float

    @property
    def gamma0(self) -> float:
        """Rate mapped through the constant-rate decay law (envelope rate = gamma)."""
        return self.gamma


def _dominant_frequency(t, y):
    n = len(t)
    dt = (t[-1] - t[0]) / (n - 1)
    pad = 8 * n
    spec = np.abs(np.fft.rfft(y - y.mean(), pad))
    freqs = np.fft.rfftfreq(pad, dt)
    spec[0] = 0.0
    return 2 * np.pi * freqs[int(np.argmax(spec))]


def _linear_stage(t, y, gamma, omega):
    # offset, cos and sin coefficients are linear once (gamma, omega) are fixed
    env = np.exp(-gamma * t)
    X = np.stack([np.ones_like(t), env * np.cos(omega * t), env * np.sin(omega * t)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, float(np.sum((X @ coef - y) ** 2))


def fit_rabi_decay(times, p1, maxfev: int = 20000) -> RabiFit:
    """Damped-cosine least squares with (gamma, omega, amplitude, offset, phase) free.

    Initial values come from the spectral peak and a variable-projection scan
    over gamma, so the nonlinear stage starts next to the optimum.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(p1, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and populations must be 1-d arrays of equal length")
    if t.size < 20:
        raise ValueError("Rabi fit needs at least 20 samples")
    if np.ptp(y) < 1e-9:
        raise ValueError("flat trace: nothing to fit")
    span = t[-1] - t[0]
    omega0 = _dominant_frequency(t, y)
    scan = np.concatenate([[0.0], np.geomspace(0.01 / span, 50 / span, 200)])
    sse = [_linear_stage(t, y, g, omega0)[1] for g in scan]
    g0 = scan[int(np.argmin(sse))]
    (c, a, b), _ = _linear_stage(t, y, g0, omega0)
    amp0 = np.hypot(a, b)
    phase0 = np.arctan2(b, -a)
    p0 = [g0, omega0, max(amp0, 1e-6), c, phase0]
    bounds = ([0.0, 0.0, 0.0, -np.inf, -np.inf], [np.inf, np.inf, np.inf, np.inf, np.inf])
    try:
        popt, pcov = curve_fit(rabi_model, t, y, p0=p0, bounds=bounds, maxfev=maxfev,
                               x_scale=[max(g0, 1 / span), max(omega0, 1 / span), 1, 1, 1])
    except RuntimeError as exc:
        raise RuntimeError(f"Rabi fit did not converge: {exc}") from exc
    res = rabi_model(t, *popt) - y
    std = float(np.sqrt(pcov[0, 0])) if np.all(np.isfinite(pcov)) else float("nan")
    return RabiFit(float(popt[0]), float(popt[1]), float(popt[2]), float(popt[3]), float(popt[4]),
                   std, float(np.sqrt(np.mean(res ** 2))))


@dataclass(frozen=True, eq=False)
class CalibrationFit:
    """sqrt(gamma0) = slope * A + intercept (slope in sqrt(Hz)/V)."""

    slope: float
    intercept: float
    residuals: np.ndarray
    amplitudes: np.ndarray
    rates: np.ndarray

    @property
    def gamma_nd(self) -> float:
        """Natural dephasing rate intercept^2 (Hz)."""
        return self.intercept ** 2

    def predict(self, amplitude) -> np.ndarray | float:
        return predict_gamma0(self, amplitude)

    def normal_equation_residual(self) -> float:
        X = np.stack([self.amplitudes, np.ones_like(self.amplitudes)], axis=1)
        return float(np.abs(X.T @ self.residuals).max())


def fit_calibration_line(amplitudes, rates) -> CalibrationFit:
    A = np.asarray(amplitudes, dtype=float).reshape(-1)
    g = np.asarray(rates, dtype=float).reshape(-1)
    if A.shape != g.shape:
        raise ValueError("amplitudes and rates differ in length")
    if A.size < 2:
        raise ValueError("calibration needs at least two samples")
    if np.any(g < 0):
        raise ValueError("negative dephasing rate")
    X = np.stack([A, np.ones_like(A)], axis=1)
    if np.linalg.matrix_rank(X) < 2:
        raise ValueError("rank-deficient calibration design (all amplitudes equal)")
    y = np.sqrt(g)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return CalibrationFit(float(coef[0]), float(coef[1]), y - X @ coef, A, g)


def predict_gamma0(fit: CalibrationFit, amplitude):
    """gamma0 = (slope A + intercept)^2 in Hz."""
    out = (fit.slope * np.asarray(amplitude, dtype=float) + fit.intercept) ** 2
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class QPTStudy:
    """Shot-noised process fidelity at several evolution times.

    Every repetition reuses one seed across all times (common random
    numbers), so ``mean_step`` and its standard error compare neighbouring
    times with the shot noise largely cancelled.
    """

    times: np.ndarray
    fidelities: np.ndarray  # (repetitions, len(times))
    off_support_noiseless: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.fidelities.mean(axis=0)

    @property
    def minimum(self) -> np.ndarray:
        return self.fidelities.min(axis=0)

    @property
    def mean_step(self) -> np.ndarray:
        return np.diff(self.fidelities, axis=1).mean(axis=0)

    @property
    def step_stderr(self) -> np.ndarray:
        d = np.diff(self.fidelities, axis=1)
        return d.std(axis=0, ddof=1) / np.sqrt(d.shape[0]) if d.shape[0] > 1 else np.full(d.shape[1], np.nan)

    def monotone(self, sigmas: float = 0.0) -> bool:
        """Mean fidelity nondecreasing; with ``sigmas`` > 0 each step must clear that many standard errors."""
        return bool(np.all(self.mean_step >= sigmas * np.nan_to_num(self.step_stderr)))


def qpt_study(model: LindbladModel, times: Sequence[float], shots: int = 100_000, repetitions: int = 1,
              seed: int = 0, support: Sequence[int] = (0, 3)) -> QPTStudy:
    times = np.asarray(times, dtype=float)
    data = []
    off = []
    basis = operator_basis(2)
    for t in times:
        ch = lindblad_channel(model, t)
        outs = [devectorize(ch(vectorize(p, basis))) for p in PROBE_STATES]
        ideal = chi_from_probe_outputs(outs)
        off.append(ideal.off_support(support))
        data.append((ideal, outs))
    F = np.empty((repetitions, len(times)))
    for r in range(repetitions):
        for k, (ideal, outs) in enumerate(data):
            rng = np.random.default_rng([seed, r])
            F[r, k] = process_fidelity(chi_from_probe_outputs(outs, shots, rng), ideal)
    return QPTStudy(times, F, np.array(off))
