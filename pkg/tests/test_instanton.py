import csv
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlspectra.errors import NonConvergenceError
from nlspectra.instanton import (characteristic_rate, fit_decay_rate, fit_decay_window, fit_derivative_decay,
                                 instanton_derivative, master_grid, restrict_to, solve_instanton, solve_mbeta,
                                 write_profile_csv)
from nlspectra.kernels import build_grid


def _bisect_root(beta, iters=200):
    lo, hi = 1e-9, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid - np.tanh(beta * mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("beta", [1.05, 1.2, 1.5, 2.0, 3.0, 10.0])
def test_mbeta_against_bisection(beta):
    assert abs(solve_mbeta(beta) - _bisect_root(beta)) < 1e-12


def test_mbeta_reference_values():
    assert abs(solve_mbeta(2.0) - 0.957504) < 1e-6
    assert abs(solve_mbeta(1.5) - 0.858560) < 1e-6
    assert solve_mbeta(1.0 + 1e-6) < 0.01


@pytest.mark.parametrize("beta", [1.0, 0.5, -2.0])
def test_mbeta_rejects_subcritical(beta):
    with pytest.raises(ValueError):
        solve_mbeta(beta)


@pytest.mark.parametrize("beta", [1.2, 1.5, 2.0, 3.0])
def test_sigma_below_one(beta):
    m = solve_mbeta(beta)
    sigma = beta * (1 - m * m)
    assert sigma < 1
    assert abs(sigma - beta * (1 - np.tanh(beta * m) ** 2)) < 1e-13


def test_fixed_point(profile):
    assert profile.residual < 1e-10
    assert profile.m_bar[profile.grid.center] == 0.0
    assert abs(profile.m_bar[-1] - profile.m_beta) < 1e-6
    assert abs(profile.m_bar[0] + profile.m_beta) < 1e-6


def test_antisymmetric_and_monotone(profile):
    m = profile.m_bar
    assert np.max(np.abs(m + m[::-1])) < 1e-8
    assert np.all(np.diff(m) >= 0)
    # where the steps are above rounding, m is strictly increasing
    assert np.all(np.diff(m)[np.abs(profile.x[1:]) < 5] > 0)
    e = profile.deficit[profile.grid.center:]
    assert np.all(np.diff(e) < 0)
    # |m| < m_beta holds strictly for the deficit; m itself rounds to m_beta in the far tail
    assert np.all(profile.deficit > 0)
    assert np.all(profile.gap_to_phase() > 0)
    assert np.all(np.abs(m) <= profile.m_beta)


def test_p_bounds(profile):
    p, beta, sigma = profile.p, profile.beta, profile.sigma_mbeta
    assert np.all(p >= sigma) and np.all(p <= beta)
    assert p[profile.grid.center] == beta
    assert abs(p[-1] - sigma) < 1e-10
    assert sigma < 1


def test_derivative_positive_even(profile):
    d = profile.m_bar_prime
    assert np.all(d > 0)
    assert np.max(np.abs(d - d[::-1])) < 1e-8
    np.testing.assert_array_equal(instanton_derivative(profile), d)


def test_derivative_eigenrelation(profile, kernel):
    d = profile.m_bar_prime
    r = profile.grid.inv_h
    Bd = profile.p * np.convolve(np.r_[np.zeros(r), d, np.zeros(r)], kernel.stencil(r), "valid")
    assert np.max(np.abs(Bd - d)) / d.max() < 1e-5


def test_derivative_against_finite_difference(kernel):
    errs = []
    for inv_h in (20, 40):
        pr = solve_instanton(2.0, kernel, master_grid(10, inv_h))
        h = 1 / inv_h
        fd = (pr.m_bar[2:] - pr.m_bar[:-2]) / (2 * h)
        errs.append(np.max(np.abs(fd - pr.m_bar_prime[1:-1])) / pr.m_bar_prime.max())
    assert errs[1] < 4 * (1 / 40) ** 2
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_translation_mode(profile):
    g = profile.translation_mode
    assert abs(profile.translation_eigenvalue - 1) < 1e-14
    assert np.all(g > 0)
    np.testing.assert_array_equal(g, g[::-1])
    c = profile.grid.center
    assert g[c] == pytest.approx(profile.m_bar_prime[c], rel=1e-15)
    core = np.abs(profile.x) < 3
    assert np.max(np.abs(g[core] / profile.m_bar_prime[core] - 1)) < 1e-4


def test_decay_fit_matches_characteristic_root(profile, kernel):
    root = characteristic_rate(2.0, kernel)
    assert abs(root - 5.47185) < 1e-4
    assert profile.alpha_fit > 0
    assert abs(profile.alpha_fit / root - 1) < 0.02
    assert profile.fit_r2 > 0.99
    dfit = fit_derivative_decay(profile)
    assert abs(dfit.alpha / profile.alpha_fit - 1) < 0.05


def test_fit_synthetic_exact():
    x = np.linspace(0, 10, 201)
    fit = fit_decay_window(x, 3 * np.exp(-2 * x))
    assert abs(fit.alpha - 2) < 1e-12 and abs(fit.c - 3) < 1e-10


def test_fit_empty_window(profile):
    with pytest.raises(ValueError, match="empty"):
        fit_decay_rate(profile, lo=0.5, hi=0.6)


def test_fit_flags_unreliable():
    x = np.linspace(0, 5, 50)
    y = 1e-3 * np.exp(-x) * (1 + 0.9 * np.sin(7 * x))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fit = fit_decay_window(x, y, 1e-10, 1e-2)
    assert not fit.reliable
    assert any("unreliable" in str(m.message) for m in w)


def test_grid_independence(profile, kernel):
    fine = solve_instanton(2.0, kernel, master_grid(10, 80))
    assert abs(fine.alpha_fit / profile.alpha_fit - 1) < 0.01


def test_one_more_iteration_is_stationary(profile, kernel):
    r = profile.grid.inv_h
    m = profile.m_bar
    ext = np.r_[np.full(r, -profile.m_beta), m, np.full(r, profile.m_beta)]
    again = np.tanh(2.0 * np.convolve(ext, kernel.stencil(r), "valid"))
    assert np.max(np.abs(again - m)) < 1e-12


def test_nonconvergence_reported(kernel):
    with pytest.raises(NonConvergenceError) as ei:
        solve_instanton(2.0, kernel, master_grid(5, 20), max_iter=3)
    assert ei.value.iterations == 3 and ei.value.residual > 0


def test_master_grid_rule():
    assert master_grid(5, 40).L == 20
    assert master_grid(15, 40).L == 30


def test_restriction(profile, restriction):
    full = restrict_to(profile, profile.grid)
    np.testing.assert_array_equal(full.m_bar, profile.m_bar)
    np.testing.assert_array_equal(full.p, profile.p)
    rs = restriction(10)
    c = rs.grid.center
    assert rs.p[c] == 2.0
    assert abs(rs.p[-1] - rs.sigma_mbeta) < 1e-5
    i = profile.grid.index_of(10.0)
    assert rs.m_bar[-1] == profile.m_bar[i]
    assert rs.outer_right[0] == profile.translation_mode[i]
    np.testing.assert_array_equal(rs.outer_right, rs.outer_left)


def test_restriction_errors(profile):
    with pytest.raises(ValueError, match="spacing"):
        restrict_to(profile, build_grid(5, 20))
    with pytest.raises(ValueError, match="exceeds"):
        restrict_to(profile, build_grid(25, 40))


def test_profile_csv(profile, tmp_path):
    path = write_profile_csv(profile, tmp_path / "p.csv")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "m_bar", "m_bar_prime", "p"]
    assert len(rows) == profile.grid.n_nodes + 1
    assert float(rows[1 + profile.grid.center][1]) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(1.01, 20.0))
def test_mbeta_is_fixed_point(beta):
    m = solve_mbeta(beta)
    assert 0 < m <= 1  # 1 - m_beta ~ 2 exp(-2 beta) underflows for beta >~ 18
    assert abs(m - np.tanh(beta * m)) < 1e-14
