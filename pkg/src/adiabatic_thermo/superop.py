"""Operator-basis bookkeeping and Liouvillian supermatrices.

Density operators live as coherence vectors ``rho_k = Tr(rho sigma_k^dag)`` in
a trace-orthogonal basis with ``Tr(sigma_i^dag sigma_j) = D delta_ij``, so that
``rho = (1/D) sum_k rho_k sigma_k``.  Superoperators act on these vectors with
matrix elements ``L_ki = (1/D) Tr(sigma_k^dag L[sigma_i])``.

Single-qubit conventions follow the ion-trap labelling: ``sigma_z = |1><1| -
|0><0|`` and ``sigma_x = |1><0| + |0><1|``, with ``sigma_y`` fixed by
``sigma_x sigma_y = i sigma_z``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .units import HBAR

MatrixFn = Union[np.ndarray, Callable[[float], np.ndarray]]
RateFn = Union[float, Callable[[float], float]]

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
PAULI = {"i": IDENTITY2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"xz"`` -> sigma_x (x) sigma_z."""
    out = np.ones((1, 1), dtype=complex)
    for ch in label.lower():
        out = np.kron(out, PAULI[ch])
    return out


def _gell_mann(dim: int) -> list[np.ndarray]:
    mats = []
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            mats.append(m)
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
    for l in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        mats.append(m * np.sqrt(2.0 / (l * (l + 1))))
    # Tr(lambda_i lambda_j) = 2 delta_ij -> rescale to D delta_ij
    return [m * np.sqrt(dim / 2.0) for m in mats]


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered operator basis {sigma_k}, k = 0..D^2-1, with sigma_0 = identity."""

    dim: int
    elements: np.ndarray
    labels: tuple[str, ...] = ()
    _vecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex)
        d = self.dim
        if els.shape != (d * d, d, d):
            raise ValueError(f"basis of dim {d} needs shape {(d * d, d, d)}, got {els.shape}")
        if not np.allclose(els[0], np.eye(d), atol=1e-14):
            raise ValueError("sigma_0 must be the identity")
        object.__setattr__(self, "elements", els)
        # column k = row-major vec(sigma_k)
        object.__setattr__(self, "_vecs", els.reshape(d * d, d * d).T.copy())

    @property
    def size(self) -> int:
        return self.dim * self.dim

    @property
    def vecs(self) -> np.ndarray:
        return self._vecs

    @property
    def is_hermitian(self) -> bool:
        return bool(np.allclose(self.elements, np.conj(np.transpose(self.elements, (0, 2, 1))), atol=1e-14))

    def gram(self) -> np.ndarray:
        """Matrix of Tr(sigma_i^dag sigma_j)."""
        return self._vecs.conj().T @ self._vecs


@lru_cache(maxsize=None)
def operator_basis(dim: int) -> OperatorBasis:
    """Canonical basis for a D-dimensional Hilbert space.

    Powers of two get tensor products of {1, sigma_x, sigma_y, sigma_z};
    other dimensions get generalized Gell-Mann matrices rescaled to the same
    ``Tr(sigma_i^dag sigma_j) = D delta_ij`` normalization.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    n = dim.bit_length() - 1
    if dim == 1 << n and n > 0:
        labels = [""]
        for _ in range(n):
            labels = [a + b for a in labels for b in "ixyz"]
        els = np.stack([pauli_string(lab) for lab in labels])
        return OperatorBasis(dim, els, tuple(labels))
    els = np.stack([np.eye(dim, dtype=complex)] + _gell_mann(dim))
    return OperatorBasis(dim, els, tuple(f"g{k}" for k in range(dim * dim)))


def _check_basis(a, b):
    if a.basis is not b.basis and (a.basis.dim != b.basis.dim or not np.array_equal(a.basis.elements, b.basis.elements)):
        raise ValueError("operands live in different operator bases")


@dataclass(frozen=True, eq=False)
class CoherenceVector:
    """Density operator as components rho_k = Tr(rho sigma_k^dag)."""

    basis: OperatorBasis
    comps: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=complex).reshape(-1)
        if c.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} components, got {c.shape[0]}")
        object.__setattr__(self, "comps", c)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matrix(self) -> np.ndarray:
        return devectorize(self)

    def __repr__(self):
        return f"CoherenceVector({np.array2string(self.comps, precision=6)})"


@dataclass(frozen=True, eq=False)
class HamiltonianVector:
    """Hamiltonian components h_k = Tr(H sigma_k), energy units (peV)."""

    basis: OperatorBasis
    comps: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.comps, dtype=complex).reshape(-1)
        if c.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} components, got {c.shape[0]}")
        object.__setattr__(self, "comps", c)

    def matrix(self) -> np.ndarray:
        return devectorize(self)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """D^2 x D^2 matrix on coherence vectors, entries in rad/s."""

    basis: OperatorBasis
    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        n = self.basis.size
        if m.shape != (n, n):
            raise ValueError(f"superoperator must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "mat", m)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _check_basis(self, other)
        return Superoperator(self.basis, self.mat + other.mat)

    def __call__(self, v: CoherenceVector) -> CoherenceVector:
        _check_basis(self, v)
        return CoherenceVector(self.basis, self.mat @ v.comps)


def _as_matrix(op, dim):
    m = np.asarray(op, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
    return m


def vectorize(rho, basis: OperatorBasis | None = None) -> CoherenceVector:
    rho = np.asarray(rho, dtype=complex)
    if basis is None:
        basis = operator_basis(rho.shape[0])
    rho = _as_matrix(rho, basis.dim)
    return CoherenceVector(basis, basis.vecs.conj().T @ rho.reshape(-1))


def hamiltonian_vector(H, basis: OperatorBasis | None = None) -> HamiltonianVector:
    """Components h_k = Tr(H sigma_k) (no adjoint, matching ``H = (1/D) sum h_k sigma_k^dag``)."""
    H = np.asarray(H, dtype=complex)
    if basis is None:
        basis = operator_basis(H.shape[0])
    H = _as_matrix(H, basis.dim)
    # Tr(H sigma_k) = sum_ij H_ij (sigma_k)_ji = vec(H) . vec(sigma_k^T)
    return HamiltonianVector(basis, np.einsum("kji,ij->k", basis.elements, H))


def devectorize(v) -> np.ndarray:
    d = v.basis.dim
    els = v.basis.elements
    if isinstance(v, HamiltonianVector):
        els = np.conj(np.transpose(els, (0, 2, 1)))
    return np.tensordot(v.comps, els, axes=1) / d


def hs_inner(u, v) -> complex:
    """Hilbert-Schmidt product <<u|v>> = (1/D) Tr(u^dag v) of the underlying operators."""
    _check_basis(u, v)
    a, b = devectorize(u), devectorize(v)
    return complex(np.vdot(a, b) / u.basis.dim)


def _validate_hermitian(H, strict, what="Hamiltonian"):
    scale = max(1.0, float(np.abs(H).max()))
    if np.abs(H - H.conj().T).max() > 1e-12 * scale:
        msg = f"{what} is not Hermitian"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def _to_basis(S_vec: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    # row-major vec convention: vec(A X B) = (A kron B^T) vec(X)
    T = basis.vecs
    return (T.conj().T @ S_vec @ T) / basis.dim


def _kron(a, b):
    # np.kron for square 2-d inputs without its generic-shape overhead (hot path)
    n, m = a.shape[0], b.shape[0]
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(n * m, n * m)


def _commutator_vec(H, hbar):
    d = H.shape[0]
    eye = np.eye(d)
    return (-1j / hbar) * (_kron(H, eye) - _kron(eye, H.T))


def _dissipator_vec(G):
    d = G.shape[0]
    eye = np.eye(d)
    GdG = G.conj().T @ G
    return _kron(G, G.conj()) - 0.5 * _kron(GdG, eye) - 0.5 * _kron(eye, GdG.T)


def hamiltonian_superop(H, basis: OperatorBasis | None = None, hbar: float = HBAR,
                        strict: bool = True) -> Superoperator:
    """Unitary part H_ki = (1/D) Tr(sigma_k^dag (1/i hbar)[H, sigma_i])."""
    H = np.asarray(H, dtype=complex)
    if basis is None:
        basis = operator_basis(H.shape[0])
    H = _as_matrix(H, basis.dim)
    _validate_hermitian(H, strict)
    return Superoperator(basis, _to_basis(_commutator_vec(H, hbar), basis))


def dissipator_superop(gammas: Sequence[float], jumps: Sequence[np.ndarray],
                       basis: OperatorBasis | None = None, strict: bool = True) -> Superoperator:
    """Dissipative part for sum_n gamma_n (G rho G^dag - {G^dag G, rho}/2)."""
    gammas = list(np.atleast_1d(gammas))
    jumps = [np.asarray(j, dtype=complex) for j in jumps]
    if len(gammas) != len(jumps):
        raise ValueError("need one rate per jump operator")
    if basis is None:
        if not jumps:
            raise ValueError("basis required when no jump operators are given")
        basis = operator_basis(jumps[0].shape[0])
    d = basis.dim
    S = np.zeros((d * d, d * d), dtype=complex)
    for g, G in zip(gammas, jumps):
        _check_rate(g, strict)
        S += g * _dissipator_vec(_as_matrix(G, d))
    return Superoperator(basis, _to_basis(S, basis))


def _check_rate(g, strict):
    if not np.isfinite(g):
        raise ValueError(f"rate {g} is not finite")
    if g < 0:
        msg = f"negative rate {g}"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


@dataclass(frozen=True)
class Dissipator:
    """One Lindblad channel: jump operator and rate, each constant or a function of t."""

    jump: MatrixFn
    rate: RateFn

    @property
    def constant_jump(self) -> bool:
        return not callable(self.jump)

    def jump_at(self, t: float) -> np.ndarray:
        return np.asarray(self.jump(t) if callable(self.jump) else self.jump, dtype=complex)

    def rate_at(self, t: float) -> float:
        return float(self.rate(t) if callable(self.rate) else self.rate)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Time-local generator: H(t), jump operators Gamma_n(t) and rates gamma_n(t).

    Constant pieces may be given as plain arrays/floats; their superoperators
    are cached after the first assembly.
    """

    dim: int
    hamiltonian: MatrixFn
    dissipators: tuple[Dissipator, ...] = ()
    t_span: tuple[float, float] = (0.0, 1.0)
    hbar: float = HBAR
    strict: bool = True
    name: str = ""
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        t0, t1 = self.t_span
        if not t1 >= t0:
            raise ValueError("t_span must be increasing")
        object.__setattr__(self, "t_span", (float(t0), float(t1)))

    @property
    def basis(self) -> OperatorBasis:
        return operator_basis(self.dim)

    @property
    def constant_hamiltonian(self) -> bool:
        return not callable(self.hamiltonian)

    @property
    def time_independent(self) -> bool:
        return self.constant_hamiltonian and all(d.constant_jump and not callable(d.rate) for d in self.dissipators)

    def hamiltonian_at(self, t: float) -> np.ndarray:
        H = self.hamiltonian(t) if callable(self.hamiltonian) else self.hamiltonian
        return np.asarray(H, dtype=complex)

    def rates_at(self, t: float) -> list[float]:
        return [d.rate_at(t) for d in self.dissipators]

    def with_span(self, t_span) -> "LindbladModel":
        return LindbladModel(self.dim, self.hamiltonian, self.dissipators, tuple(t_span),
                             self.hbar, self.strict, self.name)

    def check_time(self, t: float):
        t0, t1 = self.t_span
        tol = 1e-12 * max(1.0, abs(t0), abs(t1)) + 1e-9 * (t1 - t0)
        if t < t0 - tol or t > t1 + tol:
            raise ValueError(f"t = {t} outside model span [{t0}, {t1}]")

    def validate(self, samples: int = 11):
        """Sampled checks: Hermitian H(t), non-negative rates."""
        for t in np.linspace(*self.t_span, samples):
            _validate_hermitian(self.hamiltonian_at(t), self.strict)
            for g in self.rates_at(t):
                _check_rate(g, self.strict)

    def _hamiltonian_part(self, t):
        if self.constant_hamiltonian:
            if "H" not in self._cache:
                H = _as_matrix(self.hamiltonian_at(t), self.dim)
                _validate_hermitian(H, self.strict)
                self._cache["H"] = _to_basis(_commutator_vec(H, self.hbar), self.basis)
            return self._cache["H"]
        H = _as_matrix(self.hamiltonian_at(t), self.dim)
        _validate_hermitian(H, self.strict)
        return _to_basis(_commutator_vec(H, self.hbar), self.basis)

    def _unit_dissipator(self, n, t):
        d = self.dissipators[n]
        if d.constant_jump:
            key = ("R", n)
            if key not in self._cache:
                self._cache[key] = _to_basis(_dissipator_vec(_as_matrix(d.jump_at(t), self.dim)), self.basis)
            return self._cache[key]
        return _to_basis(_dissipator_vec(_as_matrix(d.jump_at(t), self.dim)), self.basis)

    def liouvillian_matrix(self, t: float, check: bool = True) -> np.ndarray:
        """Raw D^2 x D^2 array of L(t) = H(t) + R(t)."""
        if check:
            self.check_time(t)
        L = np.array(self._hamiltonian_part(t), copy=True)
        for n, d in enumerate(self.dissipators):
            g = d.rate_at(t)
            _check_rate(g, self.strict)
            if g != 0.0:
                L += g * self._unit_dissipator(n, t)
        return L


def assemble_liouvillian(model: LindbladModel, t: float) -> Superoperator:
    return Superoperator(model.basis, model.liouvillian_matrix(t))


def apply_generator(model: LindbladModel, t: float, rho: np.ndarray) -> np.ndarray:
    """Operator-side L_t[rho] = (1/i hbar)[H, rho] + sum_n gamma_n D[Gamma_n](rho)."""
    H = model.hamiltonian_at(t)
    out = (H @ rho - rho @ H) / (1j * model.hbar)
    for d in model.dissipators:
        G = d.jump_at(t)
        GdG = G.conj().T @ G
        out = out + d.rate_at(t) * (G @ rho @ G.conj().T - 0.5 * (GdG @ rho + rho @ GdG))
    return out
