import numpy as np
import pytest

from adiabatic_thermo.models import dephasing_qubit, energy_eigenbasis_dephasing, linear_gamma, random_constant_model
from adiabatic_thermo.spectral import (AmbiguousTracking, DefectiveLiouvillian, adiabatic_phases, decompose, track)
from adiabatic_thermo.superop import SIGMA_X, SIGMA_Z, Dissipator, LindbladModel
from adiabatic_thermo.units import HBAR, HBAR_OMEGA_REF

W = HBAR_OMEGA_REF / HBAR


def test_dephasing_qubit_spectrum():
    g = 500.0
    m, _ = dephasing_qubit(gamma0=g)
    d = decompose(m.liouvillian_matrix(0.0))
    wd = np.sqrt(4 * W ** 2 - g ** 2)
    expect = np.array([0, -g + 1j * wd, -g - 1j * wd, -2 * g])
    assert np.abs(d.eigenvalues - expect).max() < 1e-9 * W
    assert d.biorthogonality_residual() < 1e-10
    L = m.liouvillian_matrix(0.0)
    # |1>> and |x>> are eigenvectors with 0 and -2 gamma
    assert np.abs(L @ np.array([1, 0, 0, 0])).max() == 0
    assert np.allclose(L @ np.array([0, 1, 0, 0]), [0, -2 * g, 0, 0])


def test_canonical_order_is_re_then_im_descending():
    d = decompose(np.diag([-1.0, 2j, -2j, 0.0, 3.0]))
    assert np.allclose(d.eigenvalues, [3, 2j, 0, -2j, -1])


def test_zero_generator_is_degenerate_not_defective():
    d = decompose(np.zeros((4, 4)))
    assert np.all(d.eigenvalues == 0)
    assert np.allclose(d.right @ d.left, np.eye(4))
    assert d.degenerate


def test_defective_refused():
    with pytest.raises(DefectiveLiouvillian):
        decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
    # a near-Jordan block trips the condition threshold too
    with pytest.raises(DefectiveLiouvillian):
        decompose(np.array([[0.0, 1.0], [1e-20, 0.0]]))


def test_reconstruction_and_null_left_vector(rng):
    for _ in range(20):
        m = random_constant_model(rng, 2)
        L = m.liouvillian_matrix(0.0)
        d = decompose(L)
        assert np.linalg.norm(d.reconstruct() - L) < 1e-9 * np.linalg.norm(L)
        assert np.abs(L @ d.right - d.right * d.eigenvalues).max() < 1e-10 * np.linalg.norm(L)
        k = int(np.argmin(np.abs(d.eigenvalues)))
        assert abs(d.eigenvalues[k]) < 1e-9 * np.linalg.norm(L)
        row = d.left[k] / d.left[k, 0]
        assert np.abs(row - [1, 0, 0, 0]).max() < 1e-8


def test_static_track_is_identity():
    m, _ = dephasing_qubit(gamma0=300.0)
    d = decompose(m.liouvillian_matrix(0.0))
    step = track(d, decompose(m.liouvillian_matrix(0.0)))
    assert np.array_equal(step.permutation, np.arange(4))
    assert np.allclose(step.gauge, np.eye(4))


def test_linear_ramp_tracks_minus_two_gamma():
    m, _ = linear_gamma(gamma0=314.0, tau_dec=1e-3)
    grid = np.linspace(0, 1e-3, 21)
    tr = adiabatic_phases(m, grid)
    gam = 314.0 * (1 + grid / 1e-3)
    col = int(np.argmin(np.abs(tr.eigenvalues[0] + 2 * 314.0)))
    assert np.allclose(tr.eigenvalues[:, col], -2 * gam, rtol=1e-12)
    # time-independent eigenvectors: no geometric term
    assert np.abs(tr.lambda_tilde[:, col] + 2 * gam).max() < 1e-6
    # eigenvalue 0 never mixes with the decaying branch
    assert np.abs(tr.eigenvalues[:, 0]).max() < 1e-9 * W


def test_constant_generator_phase_is_linear():
    m, _ = dephasing_qubit(gamma0=1000.0)
    grid = np.linspace(0, 1e-3, 11)
    tr = adiabatic_phases(m, grid)
    assert np.abs(tr.cumulative - np.outer(grid, tr.eigenvalues[0])).max() < 1e-9 * np.abs(tr.eigenvalues).max() * 1e-3


def test_crossing_tracked_by_overlap():
    # two real eigenvalues exchange order at t = 0.5 while keeping their eigenvectors
    V = np.array([[1.0, 0.3], [0.2, 1.0]])
    Vi = np.linalg.inv(V)

    def L(t):
        return V @ np.diag([-1.0 - t, -2.0 + t]) @ Vi

    a = decompose(L(0.4), 0.4)
    b = decompose(L(0.6), 0.6)
    assert np.allclose(a.eigenvalues, [-1.4, -1.6])
    assert np.allclose(b.eigenvalues, [-1.4, -1.6])  # value order unchanged...
    step = track(a, b)
    assert list(step.permutation) == [1, 0]  # ...but the branches swapped
    assert np.allclose(step.decomposition.eigenvalues, [-1.6, -1.4])


def test_ambiguous_tracking_raises():
    # a rotation by 45 degrees between samples gives two equal overlaps
    a = decompose(np.diag([-1.0, -2.0]))
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    R = np.array([[c, -s], [s, c]])
    b = decompose(R @ np.diag([-1.0, -2.0]) @ R.T)
    with pytest.raises(AmbiguousTracking):
        track(a, b)


def test_geometric_term_converges_under_refinement():
    # rotated dephasing basis: nonzero geometric term; the transported gauge
    # converges at first order, so first-order Richardson on a coarse pair
    # must land on the dense-grid value
    m, _ = energy_eigenbasis_dephasing(gamma0=1000.0, tau_dec=1e-3)

    def final(n):
        tr = adiabatic_phases(m, np.linspace(0, 1e-3, n))
        prop = (tr.right[-1] * np.exp(tr.cumulative[-1])) @ tr.left[0]
        return tr.cumulative[-1], prop

    (c1, _), (c2, p2), (c3, p3), (c4, _) = final(101), final(201), final(801), final(1601)
    rich, rich_dense = 2 * c2 - c1, 2 * c4 - c3
    assert np.abs(rich - rich_dense).max() < 0.01 * np.abs(c2 - c4).max()
    # the gauge-invariant propagator converges much faster than the phases
    assert np.abs(p2 - p3).max() < 1e-6
    tr = adiabatic_phases(m, np.linspace(0, 1e-3, 101))
    assert np.abs(tr.geometric[:, 2:]).max() > 1.0


def test_degenerate_kernel_is_tracked():
    m, _ = energy_eigenbasis_dephasing()
    tr = adiabatic_phases(m, np.linspace(0, 1e-3, 41))
    assert np.abs(tr.eigenvalues[:, :2]).max() < 1e-6
    lt = np.einsum("tai,tib->tab", tr.left, tr.right)
    assert np.abs(lt - np.eye(4)).max() < 1e-10


def test_grid_validation():
    m, _ = dephasing_qubit()
    with pytest.raises(ValueError):
        adiabatic_phases(m, [0.0, 1e-4])
    with pytest.raises(ValueError):
        adiabatic_phases(m, [0.0, 2e-4, 1e-4])


def test_decompose_accepts_superoperator():
    from adiabatic_thermo.superop import assemble_liouvillian
    m = LindbladModel(2, HBAR_OMEGA_REF * SIGMA_X, (Dissipator(SIGMA_Z, 10.0),))
    d = decompose(assemble_liouvillian(m, 0.0), t=0.0)
    assert d.t == 0.0 and d.size == 4
