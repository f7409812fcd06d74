import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomlaser.fock import (FockSpace, build_atom_laser, build_feedback_laser,
                            build_standard_laser)
from atomlaser.liouville import (DensityOperator, LinewidthResult, coherence_time_ode,
                                 coherence_time_resolvent, coherence_time_timedomain,
                                 g1_trajectory, linewidth_numeric, rotation_frequency,
                                 steady_state, steady_state_residual)
from atomlaser.model import ConfigError, ModelParams, SolverError
from atomlaser.validation import coherent_state, poisson_tv_distance


def tv(p, q):
    n = max(p.size, q.size)
    p, q = np.pad(p, (0, n - p.size)), np.pad(q, (0, n - q.size))
    return 0.5 * np.abs(p - q).sum()


@pytest.fixture(scope="module")
def standard60():
    L = build_standard_laser(ModelParams(mu=60))
    return L, steady_state(L)


# --- density operators ---------------------------------------------------------

def test_density_operator_rejects_bad_trace():
    with pytest.raises(ValueError):
        DensityOperator(FockSpace(3), np.diag([0.5, 0.2, 0.1]))


def test_density_operator_rejects_non_hermitian():
    X = np.diag([0.5, 0.5, 0.0]).astype(complex)
    X[0, 1] = 0.1
    with pytest.raises(ValueError):
        DensityOperator(FockSpace(3), X)


def test_density_operator_moments():
    rho = DensityOperator(FockSpace(4), np.diag([0.25, 0.25, 0.25, 0.25]))
    assert rho.mean_number() == pytest.approx(1.5)
    assert rho.number_variance() == pytest.approx(1.25)
    assert rho.tail_population(1) == pytest.approx(0.25)


# --- steady state ----------------------------------------------------------------

def test_standard_steady_state_is_poissonian_mu10():
    rho = steady_state(build_standard_laser(ModelParams(mu=10)))
    assert poisson_tv_distance(rho, 10) < 1e-6


def test_standard_steady_state_mu60(standard60):
    L, rho = standard60
    assert rho.mean_number() == pytest.approx(60, rel=5e-3)
    assert rho.number_variance() == pytest.approx(60, rel=5e-3)
    assert poisson_tv_distance(rho, 60) < 1e-5
    assert np.trace(rho.matrix).real == pytest.approx(1, abs=1e-14)
    assert steady_state_residual(L, rho) < 1e-8


@pytest.mark.parametrize("chi", [1.0, 10.0, 60.0])
def test_atom_laser_keeps_number_statistics(chi, standard60):
    _, ref = standard60
    rho = steady_state(build_atom_laser(ModelParams(mu=60, chi=chi)))
    assert tv(rho.populations(), ref.populations()) < 1e-10


@pytest.mark.parametrize("nu,lam,eta", [(9.5, 9.5, 1.0), (3.0, 20.0, 0.5), (40.0, 1.0, 0.8)])
def test_feedback_keeps_number_statistics(nu, lam, eta):
    rho = steady_state(build_feedback_laser(ModelParams(mu=60, chi=10, nu=nu, lam=lam, eta=eta)))
    assert rho.mean_number() == pytest.approx(60, rel=5e-3)
    assert rho.number_variance() == pytest.approx(60, rel=5e-3)


@pytest.mark.parametrize("params", [ModelParams(mu=60), ModelParams(mu=60, chi=30),
                                    ModelParams(mu=60, chi=10, nu=9.5, lam=9.5)])
def test_steady_state_invariant_under_larger_space(params):
    d = FockSpace.for_mean(params.mu).dim
    p = steady_state(build_feedback_laser(params, FockSpace(d))).populations()
    q = steady_state(build_feedback_laser(params, FockSpace(d + 15))).populations()
    assert tv(p, q) < 1e-8


# --- rotation frequency ------------------------------------------------------------

def test_rotation_frequency_vanishes_for_standard_laser(standard60):
    assert abs(rotation_frequency(*standard60)) < 1e-10


def test_rotation_frequency_matches_phase_derivative():
    p = ModelParams(mu=60, chi=10)
    L = build_atom_laser(p)
    rho = steady_state(L)
    omega0 = rotation_frequency(L, rho)
    assert omega0 == pytest.approx(2 * p.C * p.mu, rel=0.1)
    # oracle: d/dt arg g1 at t -> 0 from propagation
    h = 1e-4
    g = g1_trajectory(L, rho, [0.0, h, 2 * h], rtol=1e-12, atol=1e-14)
    phase = np.unwrap(np.angle(g))
    slope = (-3 * phase[0] + 4 * phase[1] - phase[2]) / (2 * h)
    assert omega0 == pytest.approx(slope, rel=1e-3)


def test_rotation_frequency_vanishes_at_cancellation():
    p = ModelParams(mu=60, chi=10, nu=10, lam=10, eta=1.0)
    assert p.C - p.N * math.sqrt(p.lam / p.nu) == 0
    L = build_feedback_laser(p)
    assert abs(rotation_frequency(L, steady_state(L))) < 1e-8


def test_rotation_frequency_needs_population():
    space = FockSpace(5)
    vac = np.zeros((5, 5))
    vac[0, 0] = 1
    with pytest.raises(SolverError):
        rotation_frequency(build_standard_laser(ModelParams(mu=2), space),
                           DensityOperator(space, vac))


# --- resolvent -------------------------------------------------------------------

def test_standard_linewidth_resolvent(standard60):
    res = coherence_time_resolvent(*standard60, 0.0)
    assert res.ell == pytest.approx(1 / 120, rel=0.05)
    assert res.tau_coh * res.ell == pytest.approx(1.0)
    assert res.diagnostics["residual_norm"] < 1e-10


def test_large_chi_linewidth_resolvent():
    res = linewidth_numeric(ModelParams(mu=60, chi=30))
    assert res.ell == pytest.approx(60 / math.sqrt(120 * math.pi), rel=0.15)


def test_feedback_linewidth_resolvent():
    res = linewidth_numeric(ModelParams(mu=60, chi=10, nu=9.5, lam=9.5))
    assert res.ell == pytest.approx(0.0896, rel=0.10)


def test_omega0_robustness(standard60):
    L, rho = standard60
    dw = 0.01
    tau = coherence_time_resolvent(L, rho, 0.0).tau_coh
    tp = coherence_time_resolvent(L, rho, dw, im_tol=math.inf).tau_coh
    tm = coherence_time_resolvent(L, rho, -dw, im_tol=math.inf).tau_coh
    deriv = (tp - tm) / (2 * dw)
    assert abs(deriv) * dw / tau < 1e-2


def test_wrong_frame_is_reestimated():
    p = ModelParams(mu=60, chi=10)
    L = build_atom_laser(p)
    rho = steady_state(L)
    good = coherence_time_resolvent(L, rho, rotation_frequency(L, rho))
    shifted = coherence_time_resolvent(L, rho, rotation_frequency(L, rho) + 0.5)
    assert "omega0_reestimated" in shifted.flags
    assert shifted.tau_coh == pytest.approx(good.tau_coh, rel=0.02)


@pytest.mark.parametrize("omega", [0.5, 5.0, 50.0])
def test_far_off_frame_is_recovered(standard60, omega):
    L, rho = standard60
    res = coherence_time_resolvent(L, rho, omega, im_tol=1e-3)
    assert res.flags == ("omega0_reestimated",)
    assert abs(res.omega0) < 1e-10
    assert res.tau_coh == pytest.approx(coherence_time_resolvent(L, rho, 0.0).tau_coh)


def test_linewidth_numeric_diagnostics():
    res = linewidth_numeric(ModelParams(mu=30))
    d = res.diagnostics
    assert d["tail_population"] < 1e-8
    assert d["mean_number"] == pytest.approx(30, rel=5e-3)
    assert d["block_size"] == res.diagnostics["dim"] - 1
    assert res.method == "resolvent"
    assert set(res.to_dict()) >= {"tau_coh", "ell", "omega0", "method", "diagnostics", "flags"}


def test_linewidth_numeric_rejects_small_space():
    with pytest.raises(SolverError):
        linewidth_numeric(ModelParams(mu=60), dim=105)
    res = linewidth_numeric(ModelParams(mu=60), dim=105, strict_tail=False)
    assert "tail_population_exceeded" in res.flags


# --- time domain -----------------------------------------------------------------

def test_g1_starts_at_one(standard60):
    g = g1_trajectory(*standard60, [0.0, 1.0])
    assert g[0] == 1.0


def test_g1_rejects_bad_grid(standard60):
    with pytest.raises(ValueError):
        g1_trajectory(*standard60, [0.5, 1.0])


def test_standard_laser_timedomain(standard60):
    L, rho = standard60
    td = coherence_time_ode(L, rho)
    assert td.tau_coh == pytest.approx(120, rel=0.02)
    res = coherence_time_resolvent(L, rho, 0.0)
    assert td.tau_coh == pytest.approx(res.tau_coh, rel=0.02)


def test_standard_laser_g1_is_exponential(standard60):
    t = np.linspace(0, 200, 11)
    g = g1_trajectory(*standard60, t)
    # phase variance (kappa/2mu) t in exp(-V/2)
    np.testing.assert_allclose(np.abs(g), np.exp(-t / 240), rtol=2e-2)


@pytest.mark.parametrize("chi", [0.0, 3.0, 30.0])
def test_resolvent_and_timedomain_agree(chi):
    res = linewidth_numeric(ModelParams(mu=60, chi=chi), timedomain=True)
    assert res.diagnostics["timedomain_rel_diff"] < 0.02


def test_collapse_regime_is_gaussian():
    p = ModelParams(mu=60, chi=30)
    L = build_atom_laser(p)
    rho = steady_state(L)
    # early-time collapse: |g1| ~ exp(-(2 C t)^2 mu / 2)
    t = np.linspace(0, 0.05, 6)[1:]
    g = np.abs(g1_trajectory(L, rho, np.concatenate([[0.0], t])))[1:]
    expected = np.exp(-0.5 * p.mu * (2 * p.C * t) ** 2)
    np.testing.assert_allclose(g, expected, rtol=0.15)


@settings(deadline=None, max_examples=25)
@given(gamma=st.floats(0.05, 20))
def test_synthetic_exponential(gamma):
    t = np.linspace(0, 30 / gamma, 4001)
    res = coherence_time_timedomain(np.exp(-gamma * t), t)
    assert res.tau_coh == pytest.approx(1 / (2 * gamma), rel=1e-6)


def test_insufficient_decay_is_an_error():
    t = np.linspace(0, 1, 101)
    with pytest.raises(SolverError):
        coherence_time_timedomain(np.exp(-t), t)


def test_coherent_state_replacement():
    mu = 10
    L = build_standard_laser(ModelParams(mu=mu), FockSpace(60))
    rho = steady_state(L)
    coh = DensityOperator(L.space, coherent_state(L.space, math.sqrt(mu) * np.exp(0.7j)))
    t = np.linspace(0, 40, 9)
    g_ss = g1_trajectory(L, rho, t, rtol=1e-10)
    g_coh = g1_trajectory(L, coh, t, rtol=1e-10)
    assert np.max(np.abs(g_coh - g_ss) / np.abs(g_ss)) < 1e-3


def test_linewidth_result_from_tau():
    r = LinewidthResult.from_tau(4.0, 0.0, "resolvent")
    assert r.ell == 0.25
