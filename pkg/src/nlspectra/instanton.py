"""The bulk magnetization, the instanton and its translation mode.

The instanton solves ``m = tanh(beta * (J * m))`` on the whole line with
``m -> +-m_beta`` at infinity.  It is computed on a large master grid, with
the convolution seeing ``-m_beta`` to the left of the grid and ``+m_beta``
to the right.

The iteration runs on the deficit ``e(x) = m_beta - |m(x)|`` on ``x >= 0``
instead of on ``m`` itself.  Using ``tanh(beta m_beta) = m_beta``,

    m_beta - tanh(beta (m_beta - c)) = sinh(beta c) / (cosh(beta m_beta) cosh(beta (m_beta - c)))

with ``c = J * (m_beta - m)``, which keeps full relative precision in the
tails where ``m_beta - m`` is far below machine epsilon.  The left half is
the mirror image, so the profile is antisymmetric by construction.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from .errors import NonConvergenceError
from .fitting import fit_exponential
from .kernels import Grid, KernelSpec, build_grid
from .csvio import fmt

__all__ = [
    "DecayFit",
    "InstantonProfile",
    "Restriction",
    "characteristic_rate",
    "fit_decay_rate",
    "fit_decay_window",
    "fit_derivative_decay",
    "instanton_derivative",
    "master_grid",
    "restrict_to",
    "solve_instanton",
    "solve_mbeta",
    "translation_mode",
    "write_profile_csv",
]

# deficit window used for the decay-rate fit: above the floating floor,
# below the transition layer
FIT_WINDOW = (1e-10, 1e-2)


def solve_mbeta(beta: float) -> float:
    """Positive root of ``m = tanh(beta m)``."""
    if not beta > 1:
        raise ValueError(f"beta must exceed 1 (only the root 0 exists), got {beta!r}")
    f = lambda m: m - np.tanh(beta * m)
    # f < 0 on (0, m_beta) by concavity of tanh, f(1) > 0
    lo = 1e-300
    root = optimize.brentq(f, lo, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    # Newton polish, kept only while it reduces the residual (f' -> 0 as beta -> 1)
    for _ in range(3):
        t = np.tanh(beta * root)
        cand = root - (root - t) / (1.0 - beta * (1.0 - t * t))
        if not 0 < cand < 1 or abs(f(cand)) >= abs(f(root)):
            break
        root = cand
    return float(root)


def master_grid(L_largest: float, inv_h: int) -> Grid:
    """Master domain half-length ``max(20, 2 L_largest)``."""
    return build_grid(max(20.0, 2.0 * float(L_largest)), inv_h)


@dataclass(frozen=True)
class InstantonProfile:
    beta: float
    m_beta: float
    kernel: KernelSpec = field(repr=False)
    grid: Grid = field(repr=False)
    m_bar: np.ndarray = field(repr=False)
    deficit: np.ndarray = field(repr=False)  # m_beta - |m_bar|, even
    m_bar_prime: np.ndarray = field(repr=False)
    translation_mode: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    sigma_mbeta: float
    alpha_fit: float
    c_fit: float
    fit_r2: float
    residual: float
    iterations: int
    translation_eigenvalue: float

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def gap_to_phase(self) -> np.ndarray:
        """``m_beta^2 - m_bar^2`` evaluated without cancellation."""
        e = self.deficit
        return e * (2.0 * self.m_beta - e)


def _mirror_odd_deficit(e: np.ndarray, m_beta: float) -> np.ndarray:
    """Full array of ``m_beta - m`` from the right-half deficit."""
    return np.concatenate([2.0 * m_beta - e[:0:-1], e])


def _fixed_point_residual(m: np.ndarray, m_beta: float, beta: float, stencil: np.ndarray) -> float:
    r = (stencil.size - 1) // 2
    ext = np.concatenate([np.full(r, -m_beta), m, np.full(r, m_beta)])
    return float(np.max(np.abs(m - np.tanh(beta * np.convolve(ext, stencil, mode="valid")))))


def solve_instanton(beta: float, kernel: KernelSpec, grid: Grid, *, tol: float = 1e-12,
                    rtol: float = 1e-12, max_iter: int = 20000) -> InstantonProfile:
    m_beta = solve_mbeta(beta)
    r = grid.inv_h
    c = grid.center
    st = kernel.stencil(r)
    x_right = grid.nodes[c:]
    e = 2.0 * m_beta / (np.exp(2.0 * x_right) + 1.0)  # deficit of m_beta * tanh(x)
    e[0] = m_beta
    ch = np.cosh(beta * m_beta)
    theta = 1.0
    prev = np.inf
    rising = 0
    upd = rel = np.inf
    for it in range(1, max_iter + 1):
        D = np.concatenate([np.full(r, 2.0 * m_beta), _mirror_odd_deficit(e, m_beta), np.zeros(r)])
        conv = np.convolve(D, st, mode="valid")[c:]
        new = np.sinh(beta * conv) / (ch * np.cosh(beta * (m_beta - conv)))
        new[0] = m_beta
        if theta != 1.0:
            new = e + theta * (new - e)
        diff = np.abs(new - e)
        upd = float(diff.max())
        pos = new > 0
        rel = float(np.max(diff[pos] / new[pos])) if pos.any() else 0.0
        e = new
        if upd < tol and rel < rtol:
            break
        rising = rising + 1 if upd > prev else 0
        prev = upd
        if rising >= 3 and theta == 1.0:
            theta = 0.5
            rising = 0
    else:
        raise NonConvergenceError("instanton iteration did not converge", upd, max_iter)

    m_right = m_beta - e
    m_bar = np.concatenate([-m_right[:0:-1], m_right])
    m_bar[c] = 0.0
    deficit = np.concatenate([e[:0:-1], e])
    sigma = beta * (1.0 - m_beta * m_beta)
    p = sigma + beta * deficit * (2.0 * m_beta - deficit)
    residual = _fixed_point_residual(m_bar, m_beta, beta, st)

    prime = instanton_derivative_from(deficit, p, m_beta, kernel, grid)
    mode, nu_b = translation_mode(p, prime, kernel, grid)
    prof = InstantonProfile(
        beta=float(beta), m_beta=m_beta, kernel=kernel, grid=grid, m_bar=m_bar, deficit=deficit,
        m_bar_prime=prime, translation_mode=mode, p=p, sigma_mbeta=sigma,
        alpha_fit=float("nan"), c_fit=float("nan"), fit_r2=float("nan"),
        residual=residual, iterations=it, translation_eigenvalue=nu_b,
    )
    try:
        fit = fit_decay_rate(prof)
    except ValueError:
        return prof
    return _replace(prof, alpha_fit=fit.alpha, c_fit=fit.c, fit_r2=fit.r_squared)


def _replace(prof: InstantonProfile, **kw) -> InstantonProfile:
    from dataclasses import replace
    return replace(prof, **kw)


def instanton_derivative_from(deficit: np.ndarray, p: np.ndarray, m_beta: float,
                              kernel: KernelSpec, grid: Grid) -> np.ndarray:
    """``m' = beta (1 - m^2) (J' * m)`` from the deficit representation.

    ``J' * m = -(J' * (m_beta - m))``.  ``J'`` has a kink at the support edge,
    so the trapezoid sum gets the leading Euler-Maclaurin endpoint term
    ``(h^2/12) J''(1) (m(x+1) - m(x-1))``.
    """
    r = grid.inv_h
    c = grid.center
    h = grid.h
    e = deficit[c:]
    D = np.concatenate([np.full(r, 2.0 * m_beta), _mirror_odd_deficit(e, m_beta), np.zeros(r)])
    conv = -np.convolve(D, kernel.derivative_stencil(r), mode="valid")[c:]
    curv = kernel.edge_curvature() / kernel.raw_mass(r)
    n = grid.n_nodes
    idx = np.arange(c, n)
    conv += (h * h / 12.0) * curv * (D[idx] - D[idx + 2 * r])
    right = p[c:] * conv
    return np.concatenate([right[:0:-1], right])


def instanton_derivative(profile: InstantonProfile) -> np.ndarray:
    return instanton_derivative_from(profile.deficit, profile.p, profile.m_beta, profile.kernel, profile.grid)


def translation_mode(p: np.ndarray, start: np.ndarray, kernel: KernelSpec, grid: Grid, *,
                     tol: float = 1e-13, max_iter: int = 5000) -> tuple[np.ndarray, float]:
    """Perron vector of the master-grid operator ``g -> p (J * g)``.

    This is the discrete counterpart of ``m'`` (the kernel of the
    linearization); it is returned scaled to agree with ``start`` at x = 0,
    together with its eigenvalue.  Convergence is measured entrywise in the
    Hilbert projective metric so the exponentially small tails are resolved.
    """
    r = grid.inv_h
    c = grid.center
    st = kernel.stencil(r)
    g = np.array(start, dtype=float)
    if np.any(g <= 0):
        raise ValueError("start vector must be strictly positive")
    pad = np.zeros(r)
    spread = np.inf
    for it in range(1, max_iter + 1):
        full = p * np.convolve(np.concatenate([pad, g, pad]), st, mode="valid")
        right = full[c:]
        new = np.concatenate([right[:0:-1], right])
        ratio = new / g
        spread = float(np.log(ratio.max()) - np.log(ratio.min()))
        new *= start[c] / new[c]
        g = new
        if spread < tol:
            break
    else:
        raise NonConvergenceError("translation mode power iteration stalled", spread, max_iter)
    Bg = p * np.convolve(np.concatenate([pad, g, pad]), st, mode="valid")
    nu = float(np.sum(Bg * g / p) / np.sum(g * g / p))
    return g, nu


class DecayFit(NamedTuple):
    alpha: float
    c: float
    r_squared: float
    x_lo: float
    x_hi: float
    reliable: bool


def fit_decay_window(x: np.ndarray, y: np.ndarray, lo: float = FIT_WINDOW[0],
                     hi: float = FIT_WINDOW[1]) -> DecayFit:
    """Fit ``y ~ c exp(-alpha x)`` over the points with ``lo < y < hi``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (y > lo) & (y < hi) & (x >= 0)
    if sel.sum() < 3:
        raise ValueError("decay fitting window is empty; enlarge the master domain")
    fit = fit_exponential(x[sel], y[sel])
    reliable = fit.r_squared >= 0.99
    if not reliable:
        warnings.warn(f"decay fit unreliable: R^2 = {fit.r_squared:.4f}", RuntimeWarning, stacklevel=2)
    return DecayFit(fit.rate, fit.prefactor, fit.r_squared, float(x[sel].min()), float(x[sel].max()), reliable)


def fit_decay_rate(profile: InstantonProfile, lo: float = FIT_WINDOW[0], hi: float = FIT_WINDOW[1]) -> DecayFit:
    """Rate of ``m_beta^2 - m_bar^2 <= c exp(-alpha |x|)`` on the tail window."""
    fit = fit_decay_window(profile.x, profile.gap_to_phase(), lo, hi)
    if not fit.alpha > 0:
        raise ValueError(f"fitted decay rate is not positive: {fit.alpha}")
    return fit


def fit_derivative_decay(profile: InstantonProfile) -> DecayFit:
    """Rate of ``m_bar'`` over the same x-window as :func:`fit_decay_rate`."""
    base = fit_decay_rate(profile)
    x = profile.x
    sel = (x >= base.x_lo) & (x <= base.x_hi)
    fit = fit_exponential(x[sel], profile.m_bar_prime[sel])
    return DecayFit(fit.rate, fit.prefactor, fit.r_squared, base.x_lo, base.x_hi, fit.r_squared >= 0.99)


def characteristic_rate(beta: float, kernel: KernelSpec) -> float:
    """Root alpha of ``beta (1 - m_beta^2) int J(z) exp(alpha z) dz = 1``.

    The linearization of the fixed-point equation at infinity; solved by
    bisection with adaptive quadrature, independently of any grid.
    """
    m_beta = solve_mbeta(beta)
    sigma = beta * (1.0 - m_beta * m_beta)

    def f(a: float) -> float:
        val, _ = integrate.quad(lambda z: float(kernel.profile(np.array([z]))[0]) * np.cosh(a * z),
                                -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
        return sigma * val - 1.0

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError("characteristic equation has no root")
    return float(optimize.bisect(f, 0.0, hi, xtol=1e-14, maxiter=500))


@dataclass(frozen=True)
class Restriction:
    """Master-profile samples on a sub-grid ``T_L`` (exact subsampling).

    ``outer_right[k]`` / ``outer_left[k]`` hold the translation mode at
    ``+-(L + k h)`` for ``k = 0 .. 1/h``; zero beyond the master domain.
    """

    grid: Grid
    beta: float
    m_beta: float
    m_bar: np.ndarray = field(repr=False)
    deficit: np.ndarray = field(repr=False)
    m_bar_prime: np.ndarray = field(repr=False)
    translation_mode: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    outer_right: np.ndarray = field(repr=False)
    outer_left: np.ndarray = field(repr=False)

    @property
    def sigma_mbeta(self) -> float:
        return self.beta * (1.0 - self.m_beta ** 2)


def restrict_to(profile: InstantonProfile, grid_L: Grid) -> Restriction:
    master = profile.grid
    if grid_L.inv_h != master.inv_h:
        raise ValueError(f"incompatible spacings: 1/{grid_L.inv_h} vs master 1/{master.inv_h}")
    if grid_L.L > master.L + 1e-12:
        raise ValueError(f"L = {grid_L.L} exceeds the master half-length {master.L}")
    r = master.inv_h
    c = master.center
    n = int(round(grid_L.L * r))
    sl = slice(c - n, c + n + 1)
    g = profile.translation_mode
    outer_r = np.zeros(r + 1)
    outer_l = np.zeros(r + 1)
    for k in range(r + 1):
        if c + n + k < master.n_nodes:
            outer_r[k] = g[c + n + k]
        if c - n - k >= 0:
            outer_l[k] = g[c - n - k]
    return Restriction(
        grid=grid_L, beta=profile.beta, m_beta=profile.m_beta,
        m_bar=profile.m_bar[sl].copy(), deficit=profile.deficit[sl].copy(),
        m_bar_prime=profile.m_bar_prime[sl].copy(), translation_mode=g[sl].copy(),
        p=profile.p[sl].copy(), outer_right=outer_r, outer_left=outer_l,
    )


def write_profile_csv(profile: "InstantonProfile | Restriction", path: "str | Path") -> Path:
    """CSV with columns ``x, m_bar, m_bar_prime, p``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "m_bar", "m_bar_prime", "p"])
        for row in zip(profile.grid.nodes, profile.m_bar, profile.m_bar_prime, profile.p):
            w.writerow([fmt(v) for v in row])
    return path
