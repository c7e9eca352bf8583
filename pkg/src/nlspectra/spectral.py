"""Principal eigenpair and spectrum of ``A`` and the shape of its ground state.

Two routes are used for the quantities that vanish exponentially in L.

*Direct*: ``nu0`` from power iteration and ``<Ah, h>`` from the matrix.
These are correct to rounding, but ``1 - nu0`` drops below machine
epsilon already around L = 4.

*Flux*: with ``g`` the lattice translation mode, ``B g = g`` on the master
grid, hence ``(I - A) g = R`` on T_L where ``R`` is the kernel mass lost
through the boundary (:func:`nlspectra.operators.boundary_defect`).
Projecting this identity gives

    mu1 = <v0, R> / <v0, g>,        1 - <Ag, g>/<g, g> = <g, R> / <g, g>,

and the component of ``g`` orthogonal to ``v0`` solves a well-conditioned
system, all without subtracting numbers close to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import HypothesisError, NonConvergenceError, SimplicityError
from .kernels import BoundaryKind, Grid, KernelSpec
from .operators import (OperatorMatrix, SymmetrizedOperator, assemble, boundary_defect, symmetrize,
                        weighted_inner)

__all__ = [
    "Comparison",
    "DecayParams",
    "DecayVerdict",
    "ShapeReport",
    "SpectralAnalysis",
    "SpectralResult",
    "analyze",
    "compare_to_instanton_derivative",
    "decay_params",
    "default_eps0",
    "full_spectrum",
    "orthogonal_defect",
    "power_iteration",
    "principal_eigenpair",
    "rayleigh_trial",
    "shape_report",
    "tail_contraction",
    "trial_deficit",
    "verify_eigen_decay",
]


class PowerResult(NamedTuple):
    nu: float
    vector: np.ndarray
    iterations: int
    residual: float


def _matrix(S) -> np.ndarray:
    M = S.sym_entries if isinstance(S, SymmetrizedOperator) else np.asarray(S, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    return M


def power_iteration(S, start=None, *, tol: float = 1e-13, res_tol: float = 1e-10,
                    max_iter: int = 100000) -> PowerResult:
    """Dominant eigenpair of a symmetric matrix with positive Perron vector.

    Stops when the eigenvalue update is below ``tol``, the residual below
    ``res_tol`` and, for positive iterates, the Hilbert projective distance
    of successive iterates is below ``tol``.  The last test makes the
    exponentially small entries converge in relative terms.
    """
    M = _matrix(S)
    u = np.ones(M.shape[0]) if start is None else np.array(start, dtype=float)
    u /= np.linalg.norm(u)
    nu = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        Mu = M @ u
        nu_new = float(u @ Mu)
        res = float(np.linalg.norm(Mu - nu_new * u))
        new = Mu / np.linalg.norm(Mu)
        if np.all(u > 0) and np.all(new > 0):
            ratio = new / u
            spread = float(np.log(ratio.max()) - np.log(ratio.min()))
        else:
            spread = 0.0
        done = abs(nu_new - nu) < tol and res < res_tol and spread < tol
        u, nu = new, nu_new
        if done:
            return PowerResult(nu, u, it, res)
    raise NonConvergenceError("power iteration stalled", res, max_iter)


def full_spectrum(S) -> np.ndarray:
    """All eigenvalues of the symmetric matrix, descending (LAPACK ``syevd``)."""
    M = _matrix(S)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return linalg.eigh(M, eigvals_only=True)[::-1].copy()


def principal_eigenpair(S: SymmetrizedOperator, *, eigenvalues=None, tie_tol: float = 1e-12,
                        **kw) -> tuple[float, np.ndarray]:
    """``(nu0, v0)`` with ``v0`` in the original coordinates, unit in H, ``v0(0) > 0``."""
    pr = power_iteration(S, **kw)
    if eigenvalues is not None and len(eigenvalues) > 1 and eigenvalues[0] - eigenvalues[1] < tie_tol:
        raise SimplicityError(f"principal eigenvalue is not simple: gap {eigenvalues[0] - eigenvalues[1]:.3e}")
    u = pr.vector
    if isinstance(S, SymmetrizedOperator):
        v = S.from_sym(u)
        mid = S.provenance.grid.center
    else:
        v = u
        mid = (u.size - 1) // 2
    if v[mid] < 0:
        v = -v
    return pr.nu, v


def rayleigh_trial(A: OperatorMatrix, h_trial) -> float:
    """``<A h, h>`` for ``h`` renormalized to unit H-norm."""
    h = np.asarray(h_trial, dtype=float)
    nn = weighted_inner(h, h, A.grid, A.p)
    if not nn > 0:
        raise ValueError("trial vector is zero")
    return weighted_inner(A.entries @ h, h, A.grid, A.p) / nn


def trial_deficit(h_trial, R, grid: Grid, p) -> float:
    """``1 - <Ah, h>/<h, h>`` from the boundary defect ``R = (I - A) h``."""
    return weighted_inner(h_trial, R, grid, p) / weighted_inner(h_trial, h_trial, grid, p)


@dataclass(frozen=True)
class DecayParams:
    eps0: float
    r0: float
    alpha_eps0: float
    p_r0: float
    applicable: bool  # r0 <= L/2


def default_eps0(sigma: float) -> float:
    return 0.25 * (1.0 - sigma)


def decay_params(restriction, eps0: float | None = None, sigma: float | None = None) -> DecayParams:
    grid = restriction.grid
    p = np.asarray(restriction.p, dtype=float)
    sigma = restriction.sigma_mbeta if sigma is None else sigma
    if eps0 is None:
        eps0 = default_eps0(sigma)
    if not 0 < eps0 < 0.5 * (1.0 - sigma):
        raise HypothesisError(f"eps0 = {eps0} outside (0, (1 - sigma)/2) = (0, {0.5 * (1 - sigma):.6g})")
    c = grid.center
    x = grid.nodes[c:]
    # fold both sides: r0 must work for |x| >= r0
    pr = np.maximum(p[c:], p[c::-1])
    bad = np.nonzero(pr >= 1.0 - eps0)[0]
    k = 0 if bad.size == 0 else int(bad[-1]) + 1
    if k >= x.size:
        raise HypothesisError("p never drops below 1 - eps0 on the grid")
    p_r0 = float(pr[k])
    return DecayParams(eps0=float(eps0), r0=float(x[k]), alpha_eps0=float(np.log((1.0 - 0.5 * eps0) / p_r0)),
                       p_r0=p_r0, applicable=bool(x[k] <= 0.5 * grid.L + 1e-12))


@dataclass(frozen=True)
class DecayVerdict:
    applicable: bool
    passed: bool
    C: float
    C_min: float  # smallest constant that works on the grid


def verify_eigen_decay(psi, nu: float, dp: DecayParams, grid: Grid, C: float) -> DecayVerdict:
    """Check ``|psi(x)| <= C exp(-alpha(eps0) |x|)`` for ``|x| >= r0``."""
    psi = np.asarray(psi, dtype=float)
    if not nu > 1.0 - 0.5 * dp.eps0:
        return DecayVerdict(False, False, C, float("nan"))
    x = grid.nodes
    tail = np.abs(x) >= dp.r0 - 1e-12
    c_min = float(np.max(np.abs(psi[tail]) * np.exp(dp.alpha_eps0 * np.abs(x[tail])))) if tail.any() else 0.0
    return DecayVerdict(True, bool(c_min <= C), float(C), c_min)


@dataclass(frozen=True)
class ShapeReport:
    even_defect: float
    min_tail_slope_ok: bool
    harnack_gamma: float
    harnack_min_ratio: float
    r1: float
    zeta1: float
    mass_r1: float


def shape_report(v0, grid: Grid, p, dp: DecayParams) -> ShapeReport:
    v = np.asarray(v0, dtype=float)
    p = np.asarray(p, dtype=float)
    c = grid.center
    r = grid.inv_h
    n = grid.n_nodes
    even = float(np.max(np.abs(v - v[::-1])))
    k0 = int(round(dp.r0 * r))
    right = v[c + k0:]
    left = v[: c - k0 + 1][::-1]
    mono = bool(np.all(np.diff(right) < 0) and np.all(np.diff(left) < 0))
    gamma = 1.0
    for k in range(1, min(r, n - 1) + 1):
        q = v[k:] / v[:-k]
        gamma = max(gamma, float(q.max()), float((1.0 / q).max()))
    # mass of [-x_k, x_k] by the trapezoid rule on the sub-interval
    dens = v * v / p
    h = grid.h
    half = dens[c:] + dens[c::-1]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (half[1:] + half[:-1]))])
    k1 = int(np.searchsorted(cum, 0.5))
    if k1 >= cum.size:
        raise ValueError("v0 mass below 1/2; is it normalized?")
    zeta1 = float(v[c - k1:c + k1 + 1].min())
    return ShapeReport(even_defect=even, min_tail_slope_ok=mono, harnack_gamma=gamma,
                       harnack_min_ratio=1.0 / gamma, r1=float(k1 * h), zeta1=zeta1, mass_r1=float(cum[k1]))


class TailContraction(NamedTuple):
    max_ratio: float  # max of v0(x+1)/v0(x) on the tail
    max_ratio_over_bound: float  # against p(x+1)/nu0 pointwise
    d1: float


def tail_contraction(v0, grid: Grid, p, nu0: float, r0: float) -> TailContraction:
    v = np.asarray(v0, dtype=float)
    p = np.asarray(p, dtype=float)
    r = grid.inv_h
    c = grid.center
    i = np.arange(c + int(round(r0 * r)), grid.n_nodes - r)
    if i.size == 0:
        return TailContraction(0.0, 0.0, float(p[c + int(round(r0 * r))] / nu0))
    ratio = v[i + r] / v[i]
    # mirror side: v0(-x-1)/v0(-x)
    j = grid.n_nodes - 1 - i
    ratio = np.maximum(ratio, v[j - r] / v[j])
    bound = np.maximum(p[i + r], p[j - r]) / nu0
    return TailContraction(float(ratio.max()), float(np.max(ratio / bound)), float(p[c + int(round(r0 * r))] / nu0))


@dataclass(frozen=True)
class Comparison:
    distance: float
    a: float
    ort_norm: float
    pythagoras_defect: float


def compare_to_instanton_derivative(psi1, m_bar_prime, grid: Grid, p) -> Comparison:
    """H-distance between ``psi1`` and ``m'/||m'||`` with the split ``m'/||m'|| = a psi1 + ort``."""
    psi = np.asarray(psi1, dtype=float)
    hm = np.asarray(m_bar_prime, dtype=float)
    npsi = np.sqrt(weighted_inner(psi, psi, grid, p))
    nh = np.sqrt(weighted_inner(hm, hm, grid, p))
    if npsi == 0 or nh == 0:
        raise ValueError("zero-norm input")
    psi = psi / npsi
    hm = hm / nh
    a = weighted_inner(hm, psi, grid, p)
    ort = hm - a * psi
    on = float(np.sqrt(weighted_inner(ort, ort, grid, p)))
    d = hm - psi
    dist = float(np.sqrt(weighted_inner(d, d, grid, p)))
    return Comparison(distance=dist, a=float(a), ort_norm=on, pythagoras_defect=abs(a * a + on * on - 1.0))


class FluxResult(NamedTuple):
    mu1: float
    trial_deficit: float
    ort_norm: float
    a: float
    distance: float


def orthogonal_defect(S: SymmetrizedOperator, v0, h_trial, R) -> FluxResult:
    """Cancellation-free ``mu1``, trial deficit and the split of ``h`` along ``v0``.

    In symmetric coordinates with ``q = D^{1/2} v0`` and ``y = D^{1/2} h / ||h||``,
    ``(I - S) y = rho`` with ``rho = D^{1/2} R / ||h||``.  Writing ``y = a q + z``,
    ``z`` is the unique solution orthogonal to ``q`` of
    ``(I - S + q q^T) z = rho - <rho, q> q``, a positive definite system whose
    smallest eigenvalue is ``mu2``.
    """
    q = S.to_sym(v0)
    q = q / np.linalg.norm(q)
    y = S.to_sym(h_trial)
    ny = np.linalg.norm(y)
    y = y / ny
    rho = S.to_sym(R) / ny
    td = float(y @ rho)
    rhs = rho - (rho @ q) * q
    M = np.eye(S.n) - S.sym_entries + np.outer(q, q)
    z = linalg.solve(M, rhs, assume_a="sym")
    zn = float(np.linalg.norm(z))
    a = float(np.sqrt(max(0.0, 1.0 - zn * zn)))
    sign = np.sign(q @ y) or 1.0
    mu1 = float((q @ rho) / (sign * a)) if a > 0 else float("nan")
    dist = float(np.sqrt(2.0 * zn * zn / (1.0 + a)))
    return FluxResult(mu1=mu1, trial_deficit=td, ort_norm=zn, a=a, distance=dist)


@dataclass(frozen=True)
class SpectralResult:
    L: float
    beta: float
    bc: BoundaryKind
    nu0: float
    v0: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    mu1: float  # flux route
    mu1_direct: float
    mu2: float
    trial_bound: float  # <Ah, h> by direct matrix product
    trial_deficit: float  # 1 - <Ah, h>, flux route
    distance: float  # flux route
    distance_direct: float
    a: float
    ort_norm: float
    pythagoras_defect: float
    nu_eigh: float
    residual: float
    iterations: int

    @property
    def psi1(self) -> np.ndarray:
        return self.v0

    @property
    def nu1(self) -> float:
        return float(self.eigenvalues[1])


@dataclass(frozen=True)
class SpectralAnalysis:
    result: SpectralResult
    decay: DecayParams
    shape: ShapeReport
    eigen_decay: DecayVerdict
    tail: TailContraction
    operator: OperatorMatrix = field(repr=False)
    sym: SymmetrizedOperator = field(repr=False)


def analyze(restriction, kernel: KernelSpec, bc: "BoundaryKind | str" = BoundaryKind.DIRICHLET,
            eps0: float | None = None) -> SpectralAnalysis:
    """Full spectral pipeline for one restriction of the instanton to T_L."""
    bc = BoundaryKind.parse(bc)
    grid = restriction.grid
    p = restriction.p
    A = assemble("A", restriction, kernel, grid, bc)
    S = symmetrize(A)
    eig = full_spectrum(S)
    pr = power_iteration(S)
    if eig[0] - eig[1] < 1e-12:
        raise SimplicityError(f"principal eigenvalue is not simple: gap {eig[0] - eig[1]:.3e}")
    v0 = S.from_sym(pr.vector)
    if v0[grid.center] < 0:
        v0 = -v0
    res = float(np.sqrt(weighted_inner(A.entries @ v0 - pr.nu * v0, A.entries @ v0 - pr.nu * v0, grid, p)))

    h = restriction.translation_mode
    R = boundary_defect(restriction, kernel, bc)
    flux = orthogonal_defect(S, v0, h, R)
    direct = compare_to_instanton_derivative(v0, h, grid, p)
    result = SpectralResult(
        L=grid.L, beta=restriction.beta, bc=bc, nu0=pr.nu, v0=v0, eigenvalues=eig,
        mu1=flux.mu1, mu1_direct=1.0 - pr.nu, mu2=float(1.0 - eig[1]),
        trial_bound=rayleigh_trial(A, h), trial_deficit=flux.trial_deficit,
        distance=flux.distance, distance_direct=direct.distance, a=flux.a, ort_norm=flux.ort_norm,
        pythagoras_defect=direct.pythagoras_defect, nu_eigh=float(eig[0]), residual=res, iterations=pr.iterations,
    )
    dp = decay_params(restriction, eps0)
    shape = shape_report(v0, grid, p, dp)
    C = restriction.beta * kernel.l2_norm()
    ed = verify_eigen_decay(v0, pr.nu, dp, grid, C)
    tail = tail_contraction(v0, grid, p, pr.nu, dp.r0)
    return SpectralAnalysis(result=result, decay=dp, shape=shape, eigen_decay=ed, tail=tail, operator=A, sym=S)
