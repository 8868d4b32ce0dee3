import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capa_secbeam.channel import sample_channels
from capa_secbeam.fp_bcd import (AllUsersOff, FpConfig, _total_power, _user_systems,
                                 apply_inverse_kernel, apply_kernel, build_phi, direct_power,
                                 init_mrt, kkt_residual, fractional_objective, phi_scales,
                                 power_of_lambda, run_bcd, scaled_currents, solve_lambda,
                                 surrogate_objective, update_b, update_beta, update_currents,
                                 update_epsilon, update_eta, w_vector)
from capa_secbeam.gram import (BeamCoefficients, assemble_gram, evaluate_metrics, g_gamma_bound,
                               reconstruct_currents, scenario_gram, signal_matrix)
from capa_secbeam.numerics import HermitianEigen, hermitian_eig

from .conftest import random_coeffs


@pytest.fixture(scope="module")
def converged(default_gram):
    return run_bcd(default_gram)


def test_config_validation():
    with pytest.raises(ValueError):
        FpConfig(max_iters=0)
    with pytest.raises(ValueError):
        FpConfig(wssr_tol=-1.0)
    assert FpConfig.from_dict({"max_iters": 7}).max_iters == 7


# --- initialization ---

def test_init_single_user_full_power(single_user_scenario):
    g = scenario_gram(single_user_scenario)
    m = evaluate_metrics(g, init_mrt(g))
    assert m.total_power == pytest.approx(10.0, rel=1e-12)


def test_init_equal_split(default_gram):
    m = evaluate_metrics(default_gram, init_mrt(default_gram, 10.0))
    np.testing.assert_allclose(m.per_user_power, 1.25, rtol=1e-12)
    assert m.total_power == pytest.approx(10.0, rel=1e-12)


def test_init_direction_is_conjugate_channel(default_scenario, default_gram):
    hn = sample_channels(default_scenario).values / default_gram.noise_std[:, None]
    J = reconstruct_currents(hn, init_mrt(default_gram))
    for k in range(8):
        ratio = J[k] / hn[k].conj()
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


# --- auxiliary updates ---

def test_update_b_examples():
    np.testing.assert_array_equal(update_b([1.0, 0.0, 2.0], [1.0, 0.5, 1.0], [2.0, 3.0, 1.0]),
                                  [2.0, 0.0, 1.0])


def test_update_b_reproduces_clamped_wssr(default_gram, rng):
    w = rng.uniform(0.5, 2, 8)
    for _ in range(20):
        m = evaluate_metrics(default_gram, BeamCoefficients(random_coeffs(rng, 11, 8)), w)
        b = update_b(m.sinr, m.leakage, w)
        assert b @ m.raw_secrecy == pytest.approx(m.wssr, rel=1e-12, abs=1e-14)


def test_epsilon_examples(default_gram, single_user_scenario, rng):
    assert np.all(update_epsilon(default_gram.gram_norm, np.zeros((11, 8)), 8) == 0)
    g = scenario_gram(single_user_scenario)
    eps = update_epsilon(g.gram_norm, init_mrt(g).coeffs, 1)
    assert eps[0] == pytest.approx(10 * g.gram_norm[0, 0].real, rel=1e-12)
    C = random_coeffs(rng, 11, 8)
    eps = update_epsilon(default_gram.gram_norm, C, 8)
    assert np.all(eps >= 0)
    np.testing.assert_array_equal(eps, evaluate_metrics(default_gram, BeamCoefficients(C)).sinr)


def test_beta_examples():
    assert update_beta(np.array([4.0]), 4.0)[0] == 0.0
    assert update_beta(np.array([0.0]), 4.0)[0] == 4.0
    np.testing.assert_array_equal(update_beta(np.zeros(3), 0.0), 0.0)
    assert update_beta(np.array([1.0]), 3.0)[0] == pytest.approx(1.0)


def test_eta_examples(single_user_scenario, default_gram):
    assert np.all(update_eta(default_gram.gram_norm, np.zeros((11, 8)), 8) == 0)
    g = scenario_gram(single_user_scenario)
    c = np.array([[0.7 / g.gram_norm[0, 0].real]])
    S11 = signal_matrix(g.gram_norm, c)[0, 0]
    eta = update_eta(g.gram_norm, c, 1)[0]
    assert eta == pytest.approx(S11 / (1 + abs(S11) ** 2), rel=1e-13)
    assert abs(eta.imag) < 1e-14 and eta.real > 0


def test_eta_recovers_fractional_objective(default_gram, rng):
    K = 8
    G = g_gamma_bound(default_gram)
    for _ in range(10):
        C = random_coeffs(rng, 11, K, 0.3)
        b = rng.choice([0.0, 1.0], K)
        eps = rng.uniform(0, 3, K)
        beta = rng.uniform(0, G, K)
        eta = update_eta(default_gram.gram_norm, C, K)
        a = surrogate_objective(default_gram, C, b, eps, beta, eta, G)
        ref = fractional_objective(default_gram, C, b, eps, beta, G)
        assert a == pytest.approx(ref, rel=1e-10, abs=1e-12)
        # any other eta gives a smaller surrogate
        other = eta * (1 + 0.1 * rng.standard_normal(K))
        assert surrogate_objective(default_gram, C, b, eps, beta, other, G) <= a + 1e-12


def test_optimal_eps_beta_recover_rate(default_gram, rng):
    """At eps=gamma, beta=(G-Gamma)/(1+Gamma) the surrogate equals the b-weighted rate
    (natural log) up to the constant log(1+G)."""
    K = 8
    G = g_gamma_bound(default_gram)
    C = random_coeffs(rng, 11, K, 0.3)
    m = evaluate_metrics(default_gram, BeamCoefficients(C))
    b = np.ones(K)
    val = fractional_objective(default_gram, C, b, m.sinr, update_beta(m.leakage, G), G)
    rate = np.sum(np.log1p(m.sinr) - np.log1p(m.leakage) + np.log1p(G))
    assert val == pytest.approx(rate, rel=1e-10)


# --- Phi and the multiplier search ---

def test_phi_examples(default_gram, rng):
    H = default_gram.gram_norm
    np.testing.assert_array_equal(build_phi(H, np.ones(11)), H)
    s = rng.uniform(0.1, 2, 11)
    s[4] = 0
    phi = build_phi(H, s)
    assert np.all(phi[4] == 0) and np.all(phi[:, 4] == 0)
    ev = hermitian_eig(phi).eigenvalues
    assert ev.min() >= -1e-10 * ev.max()


def test_phi_scales_layout():
    b = np.array([1.0, 0.0])
    eps = np.array([3.0, 1.0])
    eta = np.array([0.5j, 2.0])
    beta = np.array([1.0, 0.5])
    s = phi_scales(b, eps, eta, beta, 3.0, 0, 2)
    np.testing.assert_allclose(s, [1.0, 0.0, np.sqrt(0.5), np.sqrt(0.5)])


def test_power_of_lambda_limits(default_gram):
    eig = hermitian_eig(default_gram.gram_norm)
    assert power_of_lambda(eig, 0, 1.0, 1e30) < 1e-20
    zero = HermitianEigen(np.zeros(3), np.eye(3))
    assert power_of_lambda(zero, 1, 2.0, 0.5) == 0.0


def test_power_formulas_agree(default_gram, rng):
    for _ in range(10):
        phi = build_phi(default_gram.gram_norm, rng.uniform(0.1, 1.5, 11))
        eig = hermitian_eig(phi)
        for lam in np.geomspace(1e-3, 1e4, 6):
            k = int(rng.integers(8))
            a = direct_power(phi, k, 1.3, lam)
            b = power_of_lambda(eig, k, 1.3, lam)
            assert b == pytest.approx(a, rel=1e-10)


def _systems_after(gram, state):
    return _user_systems(gram, state.b_used, state.eps, state.beta, state.eta,
                         state.g_gamma, FpConfig().eta_floor)


def test_total_power_decreasing_on_ladder(default_gram, converged):
    systems = _systems_after(default_gram, converged[1])
    ladder = np.geomspace(1e-4, 1e4, 10)
    for u in systems:
        f = [power_of_lambda(u.eig, u.k, abs(u.a), lam) for lam in ladder]
        assert np.all(np.diff(f) < 0)
    assert np.all(np.diff([_total_power(systems, lam) for lam in ladder]) < 0)


def test_scaled_solve_matches_eigen_route(default_gram, converged):
    """Both current formulas agree for users whose scale is not near zero."""
    systems = [u for u in _systems_after(default_gram, converged[1]) if u.scales[u.k] > 1e-3]
    assert systems
    for lam in (1e-2, 1.0):
        X = scaled_currents(systems, lam)
        for j, u in enumerate(systems):
            ref = (u.a / lam) * w_vector(u.eig, u.k, lam) * u.scales
            np.testing.assert_allclose(X[j], ref, rtol=1e-8, atol=1e-10 * np.max(np.abs(ref)))


def test_solve_lambda_self_consistent(default_gram, converged):
    cfg = FpConfig()
    systems = _systems_after(default_gram, converged[1])
    for P in (0.1, 10.0, 1e4):
        lam = solve_lambda(systems, P, cfg)
        total = _total_power(systems, lam)
        if lam > cfg.lambda_min:
            assert total == pytest.approx(P, rel=1e-9)
        else:
            assert total <= P
        C = update_currents(systems, 11, 8, lam)
        m = evaluate_metrics(default_gram, C)
        assert m.total_power == pytest.approx(total, rel=1e-9)


def test_solve_lambda_all_off():
    with pytest.raises(AllUsersOff):
        solve_lambda([], 1.0, FpConfig())


def test_single_user_current_is_mrt(single_user_scenario):
    g = scenario_gram(single_user_scenario)
    beams, state = run_bcd(g, config=FpConfig(init="mrt"))
    assert beams.coeffs.shape == (1, 1)
    assert evaluate_metrics(g, beams).total_power == pytest.approx(10.0, rel=1e-9)


def test_shut_off_user_gets_zero_column(default_gram, converged):
    st = converged[1]
    active = [u.k for u in _systems_after(default_gram, st)]
    assert len(active) >= 2
    b = st.b_used.copy()
    b[active[0]] = 0.0
    systems = _user_systems(default_gram, b, st.eps, st.beta, st.eta, st.g_gamma, 1e-15)
    C = update_currents(systems, 11, 8, 0.3).coeffs
    assert np.all(C[:, active[0]] == 0)
    assert np.any(C[:, active[1]] != 0)


# --- kernel identities on the grid ---

def _scaled_grid_channels(scenario, gram, scales):
    samples = sample_channels(scenario)
    hn = samples.values / gram.noise_std[:, None]
    return scales[:, None] * hn, samples.grid.weights


def test_kernel_inversion_identity(default_scenario, default_gram, rng):
    for _ in range(5):
        phi, w = _scaled_grid_channels(default_scenario, default_gram, rng.uniform(0.1, 2, 11))
        lam = float(10 ** rng.uniform(-3, 3))
        f = rng.standard_normal(w.size) + 1j * rng.standard_normal(w.size)
        back = apply_inverse_kernel(phi, w, lam, apply_kernel(phi, w, lam, f))
        assert np.max(np.abs(back - f)) <= 1e-9 * np.max(np.abs(f))


def test_converged_currents_are_stationary(default_scenario, default_gram, converged):
    beams, st = converged
    samples = sample_channels(default_scenario)
    hn = samples.values / default_gram.noise_std[:, None]
    J = reconstruct_currents(hn, beams)
    for u in _systems_after(default_gram, st):
        phi = u.scales[:, None] * hn
        r = kkt_residual(phi, samples.grid.weights, st.lagrange_lambda, u.a, u.k, J[u.k])
        assert r <= 1e-8


# --- full algorithm ---

def test_single_user_oracle(single_user_scenario):
    g = scenario_gram(single_user_scenario)
    beams, state = run_bcd(g)
    expect = np.log2(1 + 10 * g.gram_norm[0, 0].real)
    assert state.wssr_trace[-1] == pytest.approx(expect, rel=1e-6)


def test_diagonal_two_user_toy():
    raw = np.diag([3.0, 0.4]).astype(complex)
    g = assemble_gram(raw, [1.0, 1.0], [1.0, 1.0], 2, 2.0)
    beams, state = run_bcd(g, config=FpConfig(init="mrt", wssr_tol=1e-10, max_iters=500))
    wssr = evaluate_metrics(g, beams).wssr
    equal = evaluate_metrics(g, init_mrt(g)).wssr
    p = np.linspace(0, 2, 20001)
    brute = np.max(np.log2(1 + 3.0 * p) + np.log2(1 + 0.4 * (2 - p)))
    assert wssr >= equal
    assert wssr == pytest.approx(brute, rel=1e-4)
    # off-diagonal coefficients stay zero: per-user MRT
    assert np.all(np.abs(beams.coeffs[[0, 1], [1, 0]]) < 1e-14)


def test_default_drop_converges(converged, default_gram):
    _, st = converged
    trace = np.array(st.wssr_trace)
    assert np.all(np.diff(trace) >= -1e-8)
    assert st.converged and st.iterations <= 100
    assert np.all(np.array(st.power_trace) <= default_gram.power_budget * (1 + 1e-6))
    assert np.all(np.isin(st.b, [0.0, 1.0]))
    assert np.all(st.beta >= 0) and np.all(st.beta <= st.g_gamma)


@pytest.mark.parametrize("init", ["mrt", "zf"])
def test_each_start_is_monotone(default_gram, init):
    _, st = run_bcd(default_gram, config=FpConfig(init=init))
    assert st.start == init
    assert np.all(np.diff(st.wssr_trace) >= -1e-8)


@settings(max_examples=8, deadline=None)
@given(idx=st.integers(0, 10), theta=st.floats(0.1, 6.2))
def test_receiver_phase_invariance(default_gram, converged, idx, theta):
    d = np.ones(11, complex)
    d[idx] = np.exp(1j * theta)
    raw = d[:, None] * default_gram.gram_raw * d.conj()[None, :]
    g = assemble_gram(raw, default_gram.noise_powers, default_gram.weights, 8,
                      default_gram.power_budget)
    _, st = run_bcd(g)
    assert st.wssr_trace[-1] == pytest.approx(converged[1].wssr_trace[-1], abs=1e-8)


def test_all_off_returns_zero():
    # a single LUT whose eavesdropper sees the same channel cannot get a positive rate
    raw = np.array([[1.0, 1.0], [1.0, 1.0]], complex) + 1e-9 * np.eye(2)
    g = assemble_gram(raw, [1.0, 1e-3], [1.0], 1, 1.0)
    beams, st = run_bcd(g, config=FpConfig(init="mrt"))
    assert st.wssr_trace[-1] == 0.0
    assert np.all(beams.coeffs == 0)
