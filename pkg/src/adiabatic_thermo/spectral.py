"""Instantaneous spectral analysis of L(t).

Right eigenvectors are columns of ``right``; the bi-orthonormal left vectors
are rows of ``left`` so that ``left @ right = I``.  Along a time grid the
eigenpairs are tracked by overlap and put in a discrete parallel-transport
gauge, ``<<E_a(t)|D_a(t+dt)>> = 1``, from which the generalized adiabatic
phases ``lambda_a - <<E_a|dD_a/dt>>`` follow by central differences.

Only diagonalizable generators are supported; near-defective ones are
refused through the eigenvector condition number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import linear_sum_assignment

from .superop import LindbladModel, Superoperator


class DefectiveLiouvillian(RuntimeError):
    """Eigenvector matrix too ill-conditioned: likely a nontrivial Jordan block."""


class AmbiguousTracking(RuntimeError):
    """Eigenvector continuation could not decide between two candidates."""


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    t: float | None
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float
    residual: float

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left

    def biorthogonality_residual(self) -> float:
        return float(np.abs(self.left @ self.right - np.eye(self.size)).max())

    def clusters(self, rtol: float = 1e-8) -> list[list[int]]:
        return _clusters(self.eigenvalues, rtol)

    @property
    def degenerate(self) -> bool:
        return any(len(c) > 1 for c in self.clusters())

    def regauge(self, factors) -> "SpectralDecomposition":
        """Rescale D_a -> c_a D_a and E_a -> E_a / c_a."""
        c = np.asarray(factors, dtype=complex)
        return SpectralDecomposition(self.t, self.eigenvalues, self.right * c,
                                     self.left / c[:, None], self.condition, self.residual)


def _clusters(w: np.ndarray, rtol: float) -> list[list[int]]:
    n = len(w)
    tol = rtol * max(1.0, float(np.abs(w).max()) if n else 1.0)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= tol:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _canonical_order(w: np.ndarray) -> np.ndarray:
    # sort by (Re desc, Im desc) with a relative rounding so roundoff cannot reorder
    scale = max(1.0, float(np.abs(w).max()))
    q = 1e-9 * scale
    re = np.round(w.real / q) * q
    im = np.round(w.imag / q) * q
    return np.lexsort((np.arange(len(w)), -im, -re))


def _refine(mat, w, R):
    # LAPACK balancing can leave residuals ~1e-9 ||L|| when a zero trace row
    # skews the scaling; one shifted inverse-iteration step restores them
    n = len(w)
    scale = max(float(np.abs(mat).max()), 1e-300)
    shift = 1e-9 * scale * (1 + 1j)
    out = np.empty_like(R)
    eye = np.eye(n)
    for a in range(n):
        try:
            x = np.linalg.solve(mat - (w[a] + shift) * eye, R[:, a])
        except np.linalg.LinAlgError:
            x = R[:, a]
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) == 0:
            x = R[:, a]
        out[:, a] = x / np.linalg.norm(x)
    # keep the refined vector only where it lowers the residual
    res0 = np.linalg.norm(mat @ R - R * w, axis=0)
    for a in range(n):
        x = out[:, a]
        lam = np.vdot(x, mat @ x)
        if np.linalg.norm(mat @ x - lam * x) < res0[a] / np.linalg.norm(R[:, a]):
            w[a] = lam
        else:
            out[:, a] = R[:, a] / np.linalg.norm(R[:, a])
    return w, out


def decompose(L, t: float | None = None, max_condition: float = 1e8) -> SpectralDecomposition:
    """Right/left eigenbases of L, bi-orthonormal, in canonical order.

    Raises
    ------
    DefectiveLiouvillian
        If the condition number of the (column-normalized) eigenvector
        matrix exceeds ``max_condition``.
    """
    mat = L.mat if isinstance(L, Superoperator) else np.asarray(L, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("decompose expects a square matrix")
    w, R = np.linalg.eig(mat)
    w, R = _refine(mat, w, R)
    order = _canonical_order(w)
    w, R = w[order], R[:, order]
    cond = float(np.linalg.cond(R))
    if not np.isfinite(cond) or cond > max_condition:
        raise DefectiveLiouvillian(
            f"eigenvector condition number {cond:.3e} exceeds {max_condition:.1e} at t={t}; "
            "generator is (nearly) non-diagonalizable")
    E = np.linalg.inv(R)
    resid = float(np.abs(E @ R - np.eye(len(w))).max())
    return SpectralDecomposition(t, w, R, E, cond, resid)


@dataclass(frozen=True, eq=False)
class TrackStep:
    decomposition: SpectralDecomposition
    permutation: np.ndarray  # permutation[a] = index in the raw next decomposition
    gauge: np.ndarray  # aligned right = raw right[:, permutation] @ gauge


def track(prev: SpectralDecomposition, nxt: SpectralDecomposition,
          degeneracy_rtol: float = 1e-8, ambiguity_tol: float = 1e-6) -> TrackStep:
    """Continue the eigenpairs of ``prev`` into ``nxt``.

    Each previous right vector is matched to the eigenspace of ``nxt`` carrying
    the largest share of it (assignment over eigenvalue clusters, so repeated
    eigenvalues are matched by subspace).  Inside every matched cluster the
    new right vectors are fixed by ``<<E_prev|D_new>> = 1``.
    """
    n = prev.size
    if nxt.size != n:
        raise ValueError("decompositions have different sizes")
    clusters = nxt.clusters(degeneracy_rtol)
    owner = np.empty(n, dtype=int)
    for ci, c in enumerate(clusters):
        owner[c] = ci

    Dp = prev.right
    norms = np.linalg.norm(Dp, axis=0)
    share = np.empty((n, len(clusters)))
    for ci, c in enumerate(clusters):
        P = nxt.right[:, c] @ nxt.left[c, :]
        share[:, ci] = np.linalg.norm(P @ Dp, axis=0) / norms

    rows, cols = linear_sum_assignment(-share[:, owner])
    assigned = owner[cols[np.argsort(rows)]]
    for a in range(n):
        mine = share[a, assigned[a]]
        others = np.delete(share[a], assigned[a])
        if others.size and (others.max() >= mine or mine - others.max() < ambiguity_tol):
            raise AmbiguousTracking(
                f"eigenvector {a} overlaps two eigenspaces equally ({mine:.6g} vs {others.max():.6g}) "
                f"between t={prev.t} and t={nxt.t}; refine the time grid")

    perm = np.empty(n, dtype=int)
    right = np.empty_like(nxt.right)
    left = np.empty_like(nxt.left)
    w = np.empty_like(nxt.eigenvalues)
    gauge = np.zeros((n, n), dtype=complex)
    for ci, c in enumerate(clusters):
        members = np.flatnonzero(assigned == ci)  # ascending: lowest index first
        perm[members] = c
        G = prev.left[members, :] @ nxt.right[:, c]
        try:
            Ginv = np.linalg.inv(G)
        except np.linalg.LinAlgError as exc:
            raise AmbiguousTracking(f"eigenspace overlap singular at t={nxt.t}") from exc
        right[:, members] = nxt.right[:, c] @ Ginv
        left[members, :] = G @ nxt.left[c, :]
        block = G @ np.diag(nxt.eigenvalues[c]) @ Ginv
        w[members] = np.diag(block)
        gauge[np.ix_(members, members)] = Ginv
    resid = float(np.abs(left @ right - np.eye(n)).max())
    dec = SpectralDecomposition(nxt.t, w, right, left, nxt.condition, resid)
    return TrackStep(dec, perm, gauge)


@dataclass(frozen=True, eq=False)
class AdiabaticPhaseTrack:
    """Tracked eigenpairs on a grid with generalized adiabatic phases.

    ``lambda_tilde[i, a] = lambda_a(t_i) - <<E_a(t_i)|dD_a/dt(t_i)>>`` sampled by
    central differences; ``cumulative`` is its running integral from
    ``times[0]``, with the geometric part taken from step overlaps.
    """

    times: np.ndarray
    eigenvalues: np.ndarray
    lambda_tilde: np.ndarray
    cumulative: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def geometric(self) -> np.ndarray:
        return self.eigenvalues - self.lambda_tilde

    def amplitudes(self, coefficients) -> np.ndarray:
        """c_a exp(int lambda_tilde_a) on every sample, shape (N, n)."""
        return np.asarray(coefficients)[None, :] * np.exp(self.cumulative)


def tracked_decompositions(model: LindbladModel, grid, max_condition: float = 1e8,
                           initial_gauge=None) -> list[SpectralDecomposition]:
    grid = np.asarray(grid, dtype=float)
    first = decompose(model.liouvillian_matrix(grid[0]), grid[0], max_condition)
    if initial_gauge is not None:
        first = first.regauge(initial_gauge)
    out = [first]
    for t in grid[1:]:
        raw = decompose(model.liouvillian_matrix(t), t, max_condition)
        out.append(track(out[-1], raw).decomposition)
    return out


def adiabatic_phases(model: LindbladModel, grid, max_condition: float = 1e8,
                     initial_gauge=None) -> AdiabaticPhaseTrack:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ValueError("adiabatic phases need a grid of at least 3 samples")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    decs = tracked_decompositions(model, grid, max_condition, initial_gauge)
    R = np.stack([d.right for d in decs])
    E = np.stack([d.left for d in decs])
    lam = np.stack([d.eigenvalues for d in decs])
    dR = np.gradient(R, grid, axis=0, edge_order=2)
    lt = lam - np.einsum("tai,tia->ta", E, dR)
    # integrate the geometric part through the discrete connection: the
    # symmetric log-overlap per step is exact for a transported frame and
    # avoids differentiating the eigenvectors
    fwd = np.einsum("tai,tia->ta", E[:-1], R[1:])
    bwd = np.einsum("tai,tia->ta", E[1:], R[:-1])
    geo_inc = 0.5 * (np.log(fwd) - np.log(bwd))
    lam_inc = cumulative_trapezoid(lam, grid, axis=0, initial=0.0)
    cum = lam_inc - np.vstack([np.zeros((1, lam.shape[1])), np.cumsum(geo_inc, axis=0)])
    return AdiabaticPhaseTrack(grid, lam, lt, cum, R, E)
