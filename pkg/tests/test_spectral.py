import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspectra.errors import HypothesisError, NonConvergenceError, SimplicityError
from nlspectra.kernels import build_grid
from nlspectra.operators import assemble, symmetrize
from nlspectra.spectral import (DecayParams, compare_to_instanton_derivative, decay_params, default_eps0,
                                full_spectrum, power_iteration, principal_eigenpair, rayleigh_trial, shape_report,
                                tail_contraction, trial_deficit, verify_eigen_decay)


def inertia_count(M, sigma):
    """Number of eigenvalues below sigma: negative pivots of an LDL^T of M - sigma I (Sylvester)."""
    A = np.array(M, dtype=float) - sigma * np.eye(len(M))
    n = len(A)
    neg = 0
    for k in range(n):
        d = A[k, k]
        if d == 0.0:
            d = 1e-300
        neg += d < 0
        col = A[k + 1:, k] / d
        A[k + 1:, k + 1:] -= np.outer(col, A[k, k + 1:])
    return neg


def bisect_eigenvalue(M, j, lo, hi, tol=1e-12):
    """j-th largest eigenvalue by inertia bisection."""
    n = len(M)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if n - inertia_count(M, mid) > j:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_power_iteration_2x2():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    pr = power_iteration(M)
    assert abs(pr.nu - 3.0) < 1e-13
    np.testing.assert_allclose(np.abs(pr.vector), [2 ** -0.5] * 2, atol=1e-12)


def test_full_spectrum_diagonal():
    np.testing.assert_array_equal(full_spectrum(np.diag([3.0, 1.0, 2.0])), [3.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        full_spectrum(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        full_spectrum(np.ones((2, 3)))


def test_power_iteration_nonconvergence():
    with pytest.raises(NonConvergenceError):
        power_iteration(np.diag([1.0, 0.999999]), np.array([1.0, 1.0]), max_iter=5)


@pytest.fixture(scope="module")
def sym30(restriction, kernel):
    # T_L with L = 1 on a coarse grid: 31 nodes
    from nlspectra.instanton import restrict_to, solve_instanton, master_grid
    prof = solve_instanton(2.0, kernel, master_grid(10, 15))
    rs = restrict_to(prof, build_grid(1, 15))
    return symmetrize(assemble("A", rs, kernel, rs.grid))


def test_eigh_against_inertia_bisection(sym30):
    M = sym30.sym_entries
    assert M.shape == (31, 31)
    ev = full_spectrum(M)
    bound = np.abs(M).sum(axis=1).max()
    for j in (0, 1, 2, 10, 30):
        assert abs(bisect_eigenvalue(M, j, -bound, bound) - ev[j]) < 1e-8
    assert abs(ev.sum() - np.trace(M)) < 1e-12


def test_power_matches_eigh(sym30):
    nu, v = principal_eigenpair(sym30, eigenvalues=full_spectrum(sym30))
    assert abs(nu - full_spectrum(sym30)[0]) < 1e-13
    assert np.all(v > 0)


def test_principal_simplicity_guard(sym30):
    with pytest.raises(SimplicityError):
        principal_eigenpair(sym30, eigenvalues=np.array([1.0, 1.0 - 1e-14]))


def test_principal_on_plain_matrix():
    nu, v = principal_eigenpair(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert abs(nu - 3) < 1e-13 and v[0] > 0


def test_trace_identity(analysis):
    res = analysis(5).result
    A = analysis(5).operator
    assert abs(res.eigenvalues.sum() - np.trace(A.entries)) < 1e-10


def test_rayleigh_trial_examples(small_A):
    A = small_A
    e = np.zeros(A.n)
    e[A.grid.center] = 1.0
    assert rayleigh_trial(A, e) == pytest.approx(A.entries[A.grid.center, A.grid.center])
    with pytest.raises(ValueError):
        rayleigh_trial(A, np.zeros(A.n))


@pytest.fixture(scope="module")
def small_A(restriction, kernel):
    rs = restriction(2)
    return assemble("A", rs, kernel, rs.grid)


def test_trial_deficit_matches_rayleigh(restriction, kernel):
    from nlspectra.operators import boundary_defect
    rs = restriction(1)
    A = assemble("A", rs, kernel, rs.grid)
    R = boundary_defect(rs, kernel)
    td = trial_deficit(rs.translation_mode, R, rs.grid, rs.p)
    assert abs(td - (1 - rayleigh_trial(A, rs.translation_mode))) < 1e-14


@pytest.mark.parametrize("L", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_flux_matches_direct_where_resolvable(analysis, L, bc):
    res = analysis(L, bc).result
    assert abs(res.mu1 - res.mu1_direct) < 2e-15 + 1e-12 * abs(res.mu1)
    assert abs(res.distance - res.distance_direct) < 1e-14 + 1e-10 * res.distance
    assert abs(1 - res.trial_bound - res.trial_deficit) < 2e-15 + 1e-12 * abs(res.trial_deficit)
    if bc == "dirichlet":
        assert res.mu1 > 0
        assert res.trial_deficit >= res.mu1
    else:
        assert res.mu1 < 0


def test_flux_split_is_pythagorean(analysis):
    res = analysis(5).result
    assert abs(res.a ** 2 + res.ort_norm ** 2 - 1) < 1e-14
    assert res.pythagoras_defect < 1e-13


def test_compare_identity_and_orthogonal():
    g = build_grid(1, 4)
    p = np.ones(g.n_nodes)
    f = np.exp(-g.nodes ** 2)
    c = compare_to_instanton_derivative(f, 3 * f, g, p)
    assert c.distance == pytest.approx(0.0, abs=1e-15) and c.a == pytest.approx(1.0)
    u = np.where(g.nodes < 0, 1.0, 0.0)
    v = np.where(g.nodes > 0, 1.0, 0.0)
    c = compare_to_instanton_derivative(u, v, g, p)
    assert c.a == 0 and c.distance == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        compare_to_instanton_derivative(np.zeros(g.n_nodes), f, g, p)


def test_decay_params_reference(restriction):
    rs = restriction(10)
    dp = decay_params(rs)
    assert dp.eps0 == pytest.approx(default_eps0(rs.sigma_mbeta)) == pytest.approx(0.2084, abs=1e-4)
    assert dp.r0 == pytest.approx(0.375)
    assert dp.p_r0 < 1 - dp.eps0
    assert dp.alpha_eps0 == pytest.approx(np.log((1 - dp.eps0 / 2) / dp.p_r0))
    assert dp.applicable


def test_decay_params_bad_eps0(restriction):
    rs = restriction(5)
    with pytest.raises(HypothesisError):
        decay_params(rs, eps0=0.5 * (1 - rs.sigma_mbeta))
    with pytest.raises(HypothesisError):
        decay_params(rs, eps0=-0.1)


def test_decay_params_inapplicable_small_L():
    from types import SimpleNamespace
    g = build_grid(1, 20)
    p = np.where(np.abs(g.nodes) < 0.8, 1.5, 0.3)
    dp = decay_params(SimpleNamespace(grid=g, p=p, sigma_mbeta=0.3), eps0=0.1)
    assert dp.r0 == pytest.approx(0.8) and not dp.applicable
    with pytest.raises(HypothesisError, match="never"):
        decay_params(SimpleNamespace(grid=g, p=np.full(g.n_nodes, 1.5), sigma_mbeta=0.3), eps0=0.1)


def test_decay_verdict_cases():
    g = build_grid(3, 10)
    dp = DecayParams(eps0=0.2, r0=0.5, alpha_eps0=1.0, p_r0=0.5, applicable=True)
    psi = np.exp(-np.abs(g.nodes))
    v = verify_eigen_decay(psi, 0.95, dp, g, C=1.0)
    assert v.applicable and v.passed and v.C_min == pytest.approx(1.0)
    assert not verify_eigen_decay(2 * psi, 0.95, dp, g, C=1.0).passed
    assert not verify_eigen_decay(psi, 0.85, dp, g, C=1.0).applicable


def test_eigen_decay_on_principal(analysis):
    an = analysis(10)
    assert an.eigen_decay.applicable and an.eigen_decay.passed
    assert an.eigen_decay.C_min < an.eigen_decay.C


def test_shape_reference(analysis):
    an = analysis(10)
    s = an.shape
    assert s.even_defect < 1e-10
    assert s.min_tail_slope_ok
    assert 1 < s.harnack_gamma < 1e3
    assert s.mass_r1 >= 0.5
    assert s.zeta1 > 0
    assert abs(s.harnack_min_ratio * s.harnack_gamma - 1) < 1e-15


def test_shape_rejects_unnormalized(analysis):
    an = analysis(5)
    with pytest.raises(ValueError, match="normalized"):
        shape_report(1e-3 * an.result.v0, an.operator.grid, an.operator.p, an.decay)


def test_tail_contraction(analysis):
    an = analysis(10)
    assert an.tail.max_ratio < an.tail.d1 < 1
    assert an.tail.max_ratio_over_bound <= 1
    g = an.operator.grid
    empty = tail_contraction(an.result.v0, g, an.operator.p, an.result.nu0, g.L)
    assert empty.max_ratio == 0


def test_gap_stable_across_L(analysis):
    mu2 = [analysis(L).result.mu2 for L in (5, 7, 10)]
    assert max(mu2) - min(mu2) < 1e-6
    assert all(m > 0.5 for m in mu2)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 31 - 1))
def test_power_iteration_on_positive_matrices(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.uniform(0.1, 1.0, (n, n))
    M = B + B.T
    pr = power_iteration(M)
    assert abs(pr.nu - np.linalg.eigvalsh(M)[-1]) < 1e-10 * pr.nu
    assert np.all(pr.vector > 0)
