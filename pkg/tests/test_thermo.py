import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import logm

from adiabatic_thermo.dynamics import propagate_adiabatic, propagate_exact
from adiabatic_thermo.models import (closed_unitary, dephasing_qubit, energy_eigenbasis_dephasing,
                                     integrated_linear_ramp, linear_gamma, random_constant_model, random_state,
                                     random_unitary)
from adiabatic_thermo.superop import (SIGMA_X, SIGMA_Y, SIGMA_Z, CoherenceVector, HamiltonianVector, LindbladModel,
                                      Superoperator, apply_generator, assemble_liouvillian, hamiltonian_vector,
                                      operator_basis, vectorize)
from adiabatic_thermo.thermo import (adiabatic_entropy_rate, adiabatic_heat_rate, adiabatic_work_rate,
                                     average_power, bitflip_unitary, conjugate_model, conjugate_state,
                                     conjugation_witness, converged_heat, effective_inverse_temperature, entropy,
                                     entropy_heat_relation_check, entropy_rate, exact_heat, exact_ledger,
                                     hamiltonian_derivative, heat_rate, heat_rate_raw, log_vector,
                                     rotation, state_inverse_temperature, total_heat_closed_form, trajectory_ledger,
                                     work_rate, work_rate_raw)
from adiabatic_thermo.units import BETA_REF, HBAR_OMEGA_REF

HW, BETA = HBAR_OMEGA_REF, BETA_REF
G0 = np.tanh(BETA * HW)
QMAX = HW * G0


def _rates_along(model, traj):
    out = []
    for i, t in enumerate(traj.times):
        h = hamiltonian_vector(model.hamiltonian_at(t))
        out.append(heat_rate(h, assemble_liouvillian(model, t), traj.state(i)))
    return np.array(out)


def test_heat_rate_dephasing_closed_form():
    g0, tau = 1257.0, 1e-3
    m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
    grid = np.linspace(0, tau, 21)
    tr = propagate_exact(m, r0, grid)
    gam = g0 * (1 + grid / tau)
    expect = 2 * HW * G0 * gam * np.exp(-2 * integrated_linear_ramp(g0, tau, grid))
    assert np.allclose(_rates_along(m, tr), expect, rtol=1e-8)
    assert np.all(_rates_along(m, tr) > 0)  # heat flows in throughout


def test_heat_rate_zero_without_dissipation():
    m, r0 = dephasing_qubit(gamma0=0.0)
    h = hamiltonian_vector(m.hamiltonian_at(0.0))
    assert heat_rate(h, assemble_liouvillian(m, 0.0), r0) == 0.0


def test_heat_rate_matches_raw_form(rng):
    for dim in (2, 3):
        for _ in range(10):
            m = random_constant_model(rng, dim)
            rho = random_state(rng, dim)
            H = m.hamiltonian_at(0.0)
            raw = heat_rate_raw(apply_generator(m, 0.0, rho), H)
            sup = heat_rate(hamiltonian_vector(H, m.basis), assemble_liouvillian(m, 0.0), vectorize(rho, m.basis))
            assert sup == pytest.approx(raw, rel=1e-9, abs=1e-9 * abs(raw) + 1e-6)


def test_rate_errors():
    b2, b3 = operator_basis(2), operator_basis(3)
    r = vectorize(np.eye(2) / 2)
    L = Superoperator(b2, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        heat_rate(HamiltonianVector(b3, np.zeros(9)), L, r)
    L_bad = Superoperator(b2, np.diag([0, 1j, 0, 0]))
    with pytest.raises(ValueError, match="imaginary"):
        heat_rate(HamiltonianVector(b2, [0, 1, 0, 0]), L_bad, CoherenceVector(b2, [1, 1, 0, 0]))


def test_work_rate_examples():
    m, r0 = dephasing_qubit()
    assert np.all(hamiltonian_derivative(m, 3e-4).comps == 0)
    tau = 1e-3
    ramp = LindbladModel(2, lambda t: HW * (t / tau) * SIGMA_Z, (), (0, tau))
    hdot = hamiltonian_derivative(ramp, 5e-4)
    assert np.allclose(hdot.comps, [0, 0, 0, 2 * HW / tau], rtol=1e-8)
    assert work_rate(hdot, vectorize(np.eye(2) / 2)) == 0.0
    rho = random_state(np.random.default_rng(3))
    assert work_rate(hdot, vectorize(rho)) == pytest.approx(work_rate_raw(HW / tau * SIGMA_Z, rho), rel=1e-8)


def test_derivative_one_sided_at_edges():
    tau = 1e-3
    m = LindbladModel(2, lambda t: HW * np.sin(2e3 * t) * SIGMA_X, (), (0, tau))
    for t in (0.0, tau):
        d = hamiltonian_derivative(m, t).comps[1].real
        assert d == pytest.approx(2 * HW * 2e3 * np.cos(2e3 * t), rel=1e-6)


def test_closed_system_first_law():
    m, r0 = closed_unitary()
    led, _ = exact_ledger(m, r0, np.linspace(0, 1e-3, 51))
    assert np.abs(led.heat).max() < 1e-9 * HW
    led.check_first_law()
    assert np.abs(led.delta_U - led.work).max() < 1e-8


def test_constant_hamiltonian_has_no_work():
    m, r0 = linear_gamma(gamma0=3142.0)
    led, _ = exact_ledger(m, r0, np.linspace(0, 1e-3, 21))
    assert np.all(led.work == 0)
    led.check_first_law()


def test_adiabatic_heat_rate_two_routes():
    m, r0 = linear_gamma(gamma0=628.0)
    grid = np.linspace(0, 1e-3, 41)
    ad = propagate_adiabatic(m, r0, grid)
    direct = _rates_along(m, ad)
    via = np.array([adiabatic_heat_rate(m, ad.coefficients, ad.phases, i) for i in range(len(grid))])
    assert np.allclose(via, direct, rtol=1e-10)
    assert adiabatic_heat_rate(m, ad.coefficients, ad.phases, grid[7]) == via[7]
    with pytest.raises(ValueError):
        adiabatic_heat_rate(m, ad.coefficients, ad.phases, 1.234e-5)


def test_adiabatic_heat_vanishes_in_kernel():
    m, r0 = energy_eigenbasis_dephasing()
    ad = propagate_adiabatic(m, r0, np.linspace(0, 1e-3, 41))
    rates = [adiabatic_heat_rate(m, ad.coefficients, ad.phases, i) for i in range(41)]
    assert np.abs(rates).max() < 1e-9 * HW * 1e3
    led = trajectory_ledger(m, ad)
    assert np.abs(led.heat).max() < 1e-9 * HW
    assert np.abs(led.delta_U - led.work).max() < 1e-8


def test_adiabatic_heat_decays():
    m, r0 = dephasing_qubit(gamma0=6283.0, tau_dec=2e-3)
    ad = propagate_adiabatic(m, r0, np.linspace(0, 2e-3, 21))
    first = adiabatic_heat_rate(m, ad.coefficients, ad.phases, 0)
    last = adiabatic_heat_rate(m, ad.coefficients, ad.phases, 20)
    assert last < 1e-10 * first


def test_adiabatic_work_rate_two_routes():
    m, r0 = energy_eigenbasis_dephasing(gamma0=500.0)
    # start off the kernel so the work rate is nonzero
    r0 = vectorize(0.5 * (np.eye(2) + 0.6 * SIGMA_X - 0.3 * SIGMA_Z))
    grid = np.linspace(0, 1e-3, 41)
    ad = propagate_adiabatic(m, r0, grid)
    for i in (0, 13, 40):
        direct = work_rate(hamiltonian_derivative(m, grid[i]), ad.state(i))
        assert adiabatic_work_rate(m, ad.coefficients, ad.phases, i) == pytest.approx(direct, rel=1e-9, abs=1e-6)
    const, rc = dephasing_qubit()
    adc = propagate_adiabatic(const, rc, np.linspace(0, 1e-3, 5))
    assert adiabatic_work_rate(const, adc.coefficients, adc.phases, 2) == 0.0


def test_total_heat_examples():
    g0, tau = 314.0, 1e-3
    gam = lambda t: g0 * (1 + t / tau)
    assert BETA * HW == pytest.approx(4.7954, abs=1e-4)
    q = total_heat_closed_form(HW, BETA, gam, tau)
    assert q == pytest.approx(QMAX * (1 - np.exp(-2 * 471.0 * tau)), rel=1e-12)
    assert q == pytest.approx(50.4, abs=0.05)
    assert total_heat_closed_form(HW, BETA, gam, 1.0) == pytest.approx(QMAX, rel=1e-12)
    assert QMAX == pytest.approx(82.65, abs=0.01)
    assert total_heat_closed_form(HW, BETA, gam, 0.0) == 0.0


def test_effective_temperature_examples():
    assert effective_inverse_temperature(HW, BETA, 500.0, 0.0) == pytest.approx(BETA, rel=1e-14)
    t_half = np.log(2) / (2 * 500.0)
    assert effective_inverse_temperature(HW, BETA, 500.0, t_half) == pytest.approx(6.645e-3, abs=1e-6)
    for t in np.linspace(1e-5, 1e-2, 20):
        assert effective_inverse_temperature(HW, BETA, 500.0, t) < BETA


def test_state_temperature_matches_closed_form():
    g0, tau = 3142.0, 1e-3
    m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
    grid = np.linspace(0, tau, 11)
    tr = propagate_exact(m, r0, grid)
    for i, t in enumerate(grid):
        b = state_inverse_temperature(tr.state(i), m.hamiltonian_at(t))
        assert b == pytest.approx(effective_inverse_temperature(HW, BETA, m.dissipators[0].rate, t), rel=1e-7)
    assert np.isnan(state_inverse_temperature(vectorize(np.eye(2) / 2), np.zeros((2, 2))))


def test_entropy_basics():
    assert entropy(vectorize(np.eye(2) / 2)) == pytest.approx(np.log(2))
    assert entropy(vectorize(np.diag([1.0, 0.0]))) == 0.0
    assert entropy(vectorize(np.eye(3) / 3)) == pytest.approx(np.log(3))
    m, _ = dephasing_qubit()
    L = assemble_liouvillian(m, 0.0)
    pure = vectorize(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        entropy_rate(log_vector(vectorize(np.diag([0.7, 0.3]))), L, pure)
    with pytest.raises(ValueError):
        log_vector(pure)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
def test_log_vector_matches_logm(seed, dim):
    rho = random_state(np.random.default_rng(seed), dim)
    v = vectorize(rho)
    lv = log_vector(v).comps
    ref = logm(rho)
    b = operator_basis(dim)
    expect = np.array([np.trace(s @ ref) for s in b.elements])
    assert np.abs(lv - expect).max() < 1e-9 * max(1.0, np.abs(expect).max())


def test_entropy_rate_dephasing_factor_two():
    g0, tau = 1257.0, 1e-3
    m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
    grid = np.linspace(0, tau, 11)
    tr = propagate_exact(m, r0, grid)
    for i, t in enumerate(grid):
        g = G0 * np.exp(-2 * integrated_linear_ramp(g0, tau, t))
        gam = g0 * (1 + t / tau)
        v = tr.state(i)
        s_dot = entropy_rate(log_vector(v), assemble_liouvillian(m, t), v)
        assert s_dot == pytest.approx(2 * g * gam * np.arctanh(g), rel=1e-7)
        assert s_dot != pytest.approx(4 * g * gam * np.arctanh(g), rel=1e-3)


def test_entropy_rate_finite_difference(rng):
    # random full-rank trajectories of random models
    for _ in range(5):
        m = random_constant_model(rng, 2, rate_scale=2e3)
        r0 = vectorize(random_state(rng))
        delta = 2e-9  # fd truncation ~ (delta*omega)^2
        tc = 4e-4
        tr = propagate_exact(m, r0, [0.0, tc - delta, tc, tc + delta], rtol=1e-13, atol=1e-15)
        S = [entropy(tr.state(i)) for i in range(4)]
        fd = (S[3] - S[1]) / (2 * delta)
        v = tr.state(2)
        s_dot = entropy_rate(log_vector(v), assemble_liouvillian(m, tc), v)
        assert s_dot == pytest.approx(fd, rel=1e-6, abs=1e-6 * abs(s_dot) + 1e-9)


def test_adiabatic_entropy_rate():
    g0, tau = 628.0, 1e-3
    m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
    grid = np.linspace(0, tau, 21)
    ad = propagate_adiabatic(m, r0, grid)
    for i in (0, 10, 20):
        v = ad.state(i)
        lv = log_vector(v)
        direct = entropy_rate(lv, assemble_liouvillian(m, grid[i]), v)
        assert adiabatic_entropy_rate(ad.coefficients, ad.phases, i, lv) == pytest.approx(direct, rel=1e-8)
        g = G0 * np.exp(-2 * integrated_linear_ramp(g0, tau, grid[i]))
        assert direct == pytest.approx(2 * g * g0 * (1 + grid[i] / tau) * np.arctanh(g), rel=1e-8)
    # a full-rank fixed point produces no entropy
    mixed = vectorize(np.eye(2) / 2)
    adm = propagate_adiabatic(m, mixed, grid)
    assert adiabatic_entropy_rate(adm.coefficients, adm.phases, 5, log_vector(adm.state(5))) == 0.0


def test_entropy_heat_relation():
    m, r0 = linear_gamma(gamma0=314.0, tau_dec=1e-3)
    led, _ = exact_ledger(m, r0, np.linspace(0, 1e-3, 51))
    assert entropy_heat_relation_check(led) < 1e-9
    z, rz = dephasing_qubit(gamma0=0.0)
    led0, _ = exact_ledger(z, rz, np.linspace(0, 1e-3, 11))
    assert entropy_heat_relation_check(led0) == 0.0
    # negative control: beta_deph evaluated with a constant rate equal to gamma_bar
    wrong = np.array([effective_inverse_temperature(HW, BETA, 471.0, t) for t in led.times])
    bad = type(led)(led.times, led.internal_energy, led.heat, led.work, led.entropy, wrong,
                    led.heat_rate, led.work_rate, led.entropy_rate)
    assert entropy_heat_relation_check(bad) > 1e3 * entropy_heat_relation_check(led) + 1e-6


def test_average_power():
    gbar = 471.0
    p0 = average_power(HW, BETA, gbar, 1e-12)
    assert p0 == pytest.approx(2 * gbar * QMAX, rel=1e-8)
    assert average_power(HW, BETA, gbar, 1e3) * 1e3 == pytest.approx(QMAX, rel=1e-12)
    with pytest.raises(ValueError):
        average_power(HW, BETA, gbar, 0.0)
    # at long times P * tau -> Q_max whatever gamma_0
    tau = 0.5
    vals = [average_power(HW, BETA, 1.5 * g0, tau) * tau for g0 in (314, 628, 1257, 3142, 6283)]
    assert np.ptp(vals) < 1e-12 * QMAX


def test_conjugation_identity_and_bitflip():
    m, r0 = linear_gamma(gamma0=314.0)
    ident = conjugate_model(m, np.eye(2))
    assert np.allclose(ident.liouvillian_matrix(5e-4), m.liouvillian_matrix(5e-4))
    U = bitflip_unitary()
    assert np.allclose(U, rotation("z", np.pi / 2) @ rotation("x", np.pi / 2))
    # sigma_z -> sigma_x (bit flip channel), sigma_x -> sigma_y
    assert np.allclose(U @ SIGMA_Z @ U.conj().T, SIGMA_X)
    assert np.allclose(U @ SIGMA_X @ U.conj().T, SIGMA_Y)
    w = conjugation_witness(m, r0, U)
    assert w.difference < 1e-9 * QMAX
    assert w.delta_q == pytest.approx(total_heat_closed_form(HW, BETA, m.dissipators[0].rate, 1e-3), rel=1e-8)
    with pytest.raises(ValueError):
        conjugate_model(m, np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        conjugate_model(m, np.eye(3))


def test_conjugation_requires_constant_hamiltonian():
    m, r0 = energy_eigenbasis_dephasing()
    with pytest.raises(ValueError):
        conjugation_witness(m, r0, bitflip_unitary())


@given(st.integers(0, 2 ** 32 - 1))
def test_conjugation_invariance_random(seed):
    rng = np.random.default_rng(seed)
    m = random_constant_model(rng)
    r0 = vectorize(random_state(rng))
    w = conjugation_witness(m, r0, random_unitary(rng))
    scale = np.ptp(np.linalg.eigvalsh(m.hamiltonian_at(0.0)))
    assert w.difference < 1e-9 * scale


def test_conjugate_state_round_trip(rng):
    U = random_unitary(rng)
    r = vectorize(random_state(rng))
    back = conjugate_state(conjugate_state(r, U), U.conj().T)
    assert np.abs(back.comps - r.comps).max() < 1e-12


def test_exact_heat_matches_closed_form():
    for g0 in (314.0, 6283.0):
        m, r0 = linear_gamma(gamma0=g0, tau_dec=2e-3)
        q = exact_heat(m, r0)
        assert q == pytest.approx(total_heat_closed_form(HW, BETA, m.dissipators[0].rate, 2e-3), rel=1e-8)
    assert exact_heat(m, r0, 0.0) == 0.0


def test_converged_heat_grid_doubling():
    m, r0 = linear_gamma(gamma0=1257.0)
    q, n = converged_heat(m, lambda g: propagate_exact(m, r0, g), samples=65, rtol=1e-8)
    assert q == pytest.approx(total_heat_closed_form(HW, BETA, m.dissipators[0].rate, 1e-3), rel=1e-7)
    assert n > 65


def test_ledger_power_and_errors():
    m, r0 = linear_gamma(gamma0=628.0)
    led, _ = exact_ledger(m, r0, np.linspace(0, 1e-3, 11))
    assert led.power == pytest.approx(led.total_heat / 1e-3)
    broken = type(led)(led.times, led.internal_energy, led.heat + 1.0, led.work, led.entropy, led.beta_deph,
                       led.heat_rate, led.work_rate, led.entropy_rate)
    with pytest.raises(AssertionError, match="first law"):
        broken.check_first_law()
