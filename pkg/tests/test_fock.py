import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomlaser.fock import (FockOperator, FockSpace, Superoperator, anticommutator_superop,
                            basis_operator, build_atom_laser, build_feedback_laser,
                            build_standard_laser, collision_hamiltonian, default_dim,
                            dissipator, gain_superop, hamiltonian_superop,
                            inverse_gain_anticommutator, make_annihilation, make_identity,
                            number_operator, unvec, vec)
from atomlaser.model import ConfigError, ModelParams
from atomlaser.validation import gain_by_quadrature, trace_leak


def random_operator(rng, d, hermitian=False):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return X + X.conj().T if hermitian else X


def poisson_state(mu, d):
    n = np.arange(d)
    logp = n * math.log(mu) - mu - np.array([math.lgamma(k + 1) for k in n])
    p = np.exp(logp)
    return np.diag(p / p.sum())


# --- spaces and operators ----------------------------------------------------

def test_space_rejects_tiny_dim():
    with pytest.raises(ConfigError):
        FockSpace(1)


def test_default_dim_heuristic():
    assert default_dim(60) == math.ceil(60 + 8 * math.sqrt(60) + 10) == 132


def test_annihilation_dim2():
    a = make_annihilation(FockSpace(2)).toarray()
    np.testing.assert_array_equal(a, [[0, 1], [0, 0]])


def test_annihilation_dim3_element():
    a = make_annihilation(FockSpace(3)).toarray()
    assert a[1, 2] == pytest.approx(1.41421356, abs=1e-8)


def test_number_operator_is_exact_diagonal():
    space = FockSpace(40)
    a = make_annihilation(space).toarray()
    # direct matrix product as oracle
    assert np.linalg.norm(a.conj().T @ a - np.diag(np.arange(40))) < 1e-12
    np.testing.assert_array_equal(number_operator(space).toarray(), np.diag(np.arange(40)))


def test_collision_hamiltonian_eigenvalues():
    np.testing.assert_allclose(np.diag(collision_hamiltonian(FockSpace(3)).toarray()), [0, 0, 2])


def test_operator_space_mismatch():
    with pytest.raises(ConfigError):
        make_annihilation(FockSpace(3)) @ make_annihilation(FockSpace(4))


# --- vectorization -----------------------------------------------------------

def test_column_stacking_convention():
    space = FockSpace(4)
    X = basis_operator(space, 1, 3)
    assert np.flatnonzero(vec(X)) == [space.basis_index(1, 3)] == [3 * 4 + 1]
    rng = np.random.default_rng(0)
    Y = random_operator(rng, 4)
    np.testing.assert_array_equal(unvec(vec(Y), 4), Y)


def test_superoperator_call_matches_left_right_products():
    space = FockSpace(5)
    rng = np.random.default_rng(1)
    A = FockOperator(space, random_operator(rng, 5))
    X = random_operator(rng, 5)
    D = dissipator(A)
    M = A.toarray()
    expected = M @ X @ M.conj().T - 0.5 * (M.conj().T @ M @ X + X @ M.conj().T @ M)
    np.testing.assert_allclose(D(X), expected, atol=1e-12)


def test_superoperator_rejects_wrong_shape():
    D = dissipator(make_annihilation(FockSpace(3)))
    with pytest.raises(ConfigError):
        D(np.zeros((4, 4)))


# --- dissipator / anticommutator ---------------------------------------------

def test_dissipator_on_first_excited_state():
    space = FockSpace(2)
    out = dissipator(make_annihilation(space))(basis_operator(space, 1, 1))
    np.testing.assert_allclose(out, np.diag([1.0, -1.0]), atol=1e-15)


def test_dissipator_of_identity_vanishes():
    space = FockSpace(6)
    assert abs(dissipator(make_identity(space)).matrix).max() == 0


def test_dissipator_is_traceless():
    space = FockSpace(8)
    rng = np.random.default_rng(2)
    B = random_operator(rng, 8, hermitian=True)
    assert abs(np.trace(dissipator(make_annihilation(space))(B))) < 1e-12


def test_anticommutator_of_creation_on_basis():
    space = FockSpace(6)
    ad = make_annihilation(space).dag()
    A = anticommutator_superop(ad)
    for n in range(5):
        for m in range(5):
            out = A(basis_operator(space, n, m))
            assert out[n, m] == pytest.approx(((n + 1) + (m + 1)) / 2)


def test_anticommutator_examples():
    space3 = FockSpace(3)
    ad = make_annihilation(space3).dag()
    B = basis_operator(space3, 1, 2)
    # The truncated a^dag has no top-level element, so a a^dag vanishes on |2>.
    assert anticommutator_superop(ad)(B)[1, 2] == pytest.approx(1.0)
    # The gain inverse uses the untruncated eigenvalue (1+1 + 2+1)/2 = 5/2.
    assert inverse_gain_anticommutator(space3)(B)[1, 2] == pytest.approx(2 / 5)
    a = make_annihilation(space3)
    assert abs(anticommutator_superop(a)(basis_operator(space3, 0, 0))).max() == 0


def test_inverse_anticommutator_round_trip_inside_truncation():
    space = FockSpace(12)
    ad = make_annihilation(space).dag()
    prod = (anticommutator_superop(ad).matrix @ inverse_gain_anticommutator(space).matrix).toarray()
    d = space.dim
    interior = [space.basis_index(n, m) for m in range(d - 1) for n in range(d - 1)]
    np.testing.assert_allclose(prod[np.ix_(interior, interior)], np.eye(len(interior)),
                               atol=1e-15)


# --- gain ----------------------------------------------------------------------

def test_gain_on_vacuum():
    space = FockSpace(5)
    out = gain_superop(space)(basis_operator(space, 0, 0))
    expected = np.zeros((5, 5))
    expected[1, 1], expected[0, 0] = 1, -1
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_gain_equals_dissipator_after_inverse_anticommutator():
    space = FockSpace(10)
    ad = make_annihilation(space).dag()
    composed = (dissipator(ad).matrix @ inverse_gain_anticommutator(space).matrix).toarray()
    direct = gain_superop(space).toarray()
    d = space.dim
    # identical except on basis operators touching the top level, where the
    # truncated a a^dag differs from its untruncated eigenvalue
    interior = [space.basis_index(n, m) for m in range(d - 1) for n in range(d - 1)]
    np.testing.assert_allclose(direct[:, interior], composed[:, interior], atol=1e-14)


@pytest.mark.parametrize("dim", [5, 12, 20, 25])
def test_gain_matches_integral_identity(dim):
    err = np.linalg.norm(gain_superop(FockSpace(dim)).toarray() - gain_by_quadrature(FockSpace(dim)))
    assert err < 1e-8


def test_gain_trace_preserved_away_from_edge():
    space = FockSpace(15)
    G = gain_superop(space)
    for n in range(space.dim - 1):
        assert abs(np.trace(G(basis_operator(space, n, n)))) < 1e-14


def test_gain_reports_leak():
    G = gain_superop(FockSpace(6))
    # dropped raising terms from |n><5| and |5><m|
    n = np.arange(6)
    dropped = [2 * math.sqrt((i + 1) * 6) / (i + 7) for i in n]
    expected = math.sqrt(2 * sum(x**2 for x in dropped) - dropped[5] ** 2)
    assert G.leak == pytest.approx(expected)
    assert (3.0 * G).leak == pytest.approx(3 * expected)


# --- hamiltonian -------------------------------------------------------------

def test_hamiltonian_on_coherence():
    space = FockSpace(3)
    out = hamiltonian_superop(number_operator(space))(basis_operator(space, 0, 1))
    assert out[0, 1] == pytest.approx(1j)


def test_hamiltonian_commutes_with_identity():
    space = FockSpace(6)
    rng = np.random.default_rng(3)
    H = FockOperator(space, random_operator(rng, 6, hermitian=True))
    assert abs(hamiltonian_superop(H)(np.eye(6))).max() < 1e-12


def test_collision_commutator_weight():
    space = FockSpace(3)
    out = hamiltonian_superop(collision_hamiltonian(space))(basis_operator(space, 2, 0))
    assert out[2, 0] == pytest.approx(-2j)


def test_non_hermitian_hamiltonian_rejected():
    with pytest.raises(ConfigError):
        hamiltonian_superop(make_annihilation(FockSpace(4)))


# --- builders ----------------------------------------------------------------

BUILDERS = [build_standard_laser, build_atom_laser, build_feedback_laser]
PARAMS = ModelParams(mu=10, chi=6, nu=4, lam=3, eta=0.7)


@pytest.mark.parametrize("build", BUILDERS)
def test_builders_preserve_trace(build):
    assert trace_leak(build(PARAMS, FockSpace(30))) < 1e-12


@pytest.mark.parametrize("build", BUILDERS)
def test_builders_preserve_hermiticity(build):
    L = build(PARAMS, FockSpace(20))
    rng = np.random.default_rng(4)
    for _ in range(20):
        X = random_operator(rng, 20)
        assert np.linalg.norm(L(X).conj().T - L(X.conj().T)) < 1e-10


def test_standard_laser_annihilates_poisson_state():
    p = ModelParams(mu=10)
    L = build_standard_laser(p, FockSpace(60))
    assert np.linalg.norm(L(poisson_state(10, 60))) < 1e-8


def test_standard_laser_trace_of_random_state():
    L = build_standard_laser(ModelParams(mu=10), FockSpace(60))
    rng = np.random.default_rng(5)
    rho = random_operator(rng, 60, hermitian=True)
    rho[-1, :] = rho[:, -1] = 0  # keep the top level empty: no edge leak
    assert abs(np.trace(L(rho))) < 1e-10


def test_atom_laser_with_zero_chi_equals_standard():
    p = ModelParams(mu=10, chi=0)
    assert (build_atom_laser(p).matrix != build_standard_laser(p).matrix).nnz == 0


def test_number_sector_independent_of_chi():
    space = FockSpace(25)
    diag = [space.basis_index(n, n) for n in range(25)]
    ref = build_atom_laser(ModelParams(mu=10, chi=0), space).toarray()[np.ix_(diag, diag)]
    for chi in (1.0, 7.5, 40.0):
        L = build_atom_laser(ModelParams(mu=10, chi=chi), space).toarray()
        np.testing.assert_array_equal(L[np.ix_(diag, diag)], ref)


@pytest.mark.parametrize("eta", [0.2, 0.7, 1.0])
def test_feedback_off_equals_atom_laser(eta):
    p = ModelParams(mu=12, chi=3.3, eta=eta)
    assert (build_feedback_laser(p).matrix != build_atom_laser(p).matrix).nnz == 0


def test_feedback_requires_measurement():
    with pytest.raises(ConfigError):
        build_feedback_laser(ModelParams(mu=10, chi=2, lam=1.0, nu=0.0))


def test_feedback_cancels_self_energy():
    chi = 10.0
    p = ModelParams(mu=20, chi=chi, nu=chi, lam=chi, eta=1.0)
    space = FockSpace(40)
    L = build_feedback_laser(p, space)
    # Without the shear term only the gain, loss and measurement parts remain.
    rest = (build_standard_laser(p, space)
            + 2 * p.N * dissipator(number_operator(space)))
    assert abs(L.matrix - rest.matrix).max() == 0


@settings(deadline=None, max_examples=30)
@given(kappa=st.floats(0.1, 10), mu=st.floats(1, 1e6), chi=st.floats(0, 1e3),
       nu=st.floats(0, 1e3))
def test_rate_parameterization_round_trips(kappa, mu, chi, nu):
    p = ModelParams(kappa=kappa, mu=mu, chi=chi, nu=nu)
    q = ModelParams.from_rates(kappa, mu, C=p.C, N=p.N)
    assert q.chi == pytest.approx(chi, rel=1e-14, abs=0)
    assert q.nu == pytest.approx(nu, rel=1e-14, abs=0)


@pytest.mark.parametrize("bad", [dict(kappa=0), dict(mu=-1), dict(chi=-1), dict(eta=0),
                                 dict(eta=1.5), dict(nu=float("nan"))])
def test_model_params_validation(bad):
    with pytest.raises(ConfigError):
        ModelParams(**bad)


def test_superoperator_arithmetic_tracks_leak():
    space = FockSpace(5)
    G = gain_superop(space)
    S = G + dissipator(make_annihilation(space))
    assert isinstance(S, Superoperator)
    assert S.leak == G.leak
