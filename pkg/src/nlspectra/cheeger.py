"""Markov chain built from the ground state, Cheeger constant and the conductance sandwich.

With ``(nu0, v0)`` the principal eigenpair of ``A``,

    P_ij = p_i J(x_i - x_j) w_j v0_j / (nu0 v0_i)

is a reversible stochastic matrix with invariant masses ``pi_i w_i``,
``pi = v0^2 / p``.  Its spectrum is that of ``A`` divided by ``nu0``.
Flows are ``F_ij = pi_i w_i P_ij``; ``F`` is symmetric and banded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import HypothesisError, VerificationError
from .kernels import Grid, KernelSpec
from .operators import OperatorMatrix
from .spectral import ShapeReport

__all__ = [
    "CheegerConstants",
    "CheegerReport",
    "MarkovSystem",
    "build_markov",
    "cheeger_of_interval",
    "cheeger_scan",
    "lawler_sokal_check",
    "make_report",
    "theoretical_D",
]


@dataclass(frozen=True)
class MarkovSystem:
    P: np.ndarray = field(repr=False)  # row-stochastic, target weights included
    pi: np.ndarray = field(repr=False)  # invariant density
    masses: np.ndarray = field(repr=False)  # pi_i w_i
    nu0: float = 1.0
    v0: np.ndarray | None = field(default=None, repr=False)
    bandwidth: int | None = None  # F_ij = 0 for |i - j| >= bandwidth

    @classmethod
    def from_transition(cls, P, masses) -> "MarkovSystem":
        """Chain given directly by its transition matrix and invariant masses."""
        P = np.asarray(P, dtype=float)
        m = np.asarray(masses, dtype=float)
        return cls(P=P, pi=m.copy(), masses=m)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def flows(self) -> np.ndarray:
        return self.masses[:, None] * self.P

    def defects(self) -> dict:
        F = self.flows
        return {
            "row_sum": float(np.max(np.abs(self.P.sum(axis=1) - 1.0))),
            "stationarity": float(np.max(np.abs(F.sum(axis=0) - self.masses))),
            "reversibility": float(np.max(np.abs(F - F.T))),
            "normalization": abs(float(self.masses.sum()) - 1.0),
        }

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of P, descending, through its L^2(pi) symmetrization."""
        s = np.sqrt(self.masses)
        K = s[:, None] * self.P / s[None, :]
        return linalg.eigh(0.5 * (K + K.T), eigvals_only=True)[::-1].copy()


def build_markov(nu0: float, v0, A: OperatorMatrix, *, check: bool = True, tol: float = 1e-9,
                 rng: np.random.Generator | None = None) -> MarkovSystem:
    v0 = np.asarray(v0, dtype=float)
    if np.any(v0 <= 0):
        raise ValueError("v0 must be strictly positive to build the chain")
    grid = A.grid
    P = A.entries * v0[None, :] / (nu0 * v0[:, None])
    pi = v0 * v0 / A.p
    ms = MarkovSystem(P=P, pi=pi, masses=pi * grid.weights, nu0=float(nu0), v0=v0, bandwidth=grid.inv_h)
    if check:
        d = ms.defects()
        # similarity to A: P f = T A T^{-1} f / nu0 with T = diag(1/v0)
        rng = rng or np.random.default_rng(0)
        f = rng.standard_normal(grid.n_nodes)
        d["similarity"] = float(np.max(np.abs(P @ f - (A.entries @ (v0 * f)) / (nu0 * v0))))
        bad = {k: v for k, v in d.items() if not v <= tol}
        if bad:
            raise VerificationError(f"Markov construction defects exceed {tol}: {bad}", d)
    return ms


class _Masses:
    """Interval masses with prefix sums taken from the nearer end."""

    def __init__(self, m: np.ndarray):
        self.pre = np.concatenate([[0.0], np.cumsum(m)])
        self.suf = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
        self.mid = (m.size - 1) // 2

    def inside(self, a: int, b) -> np.ndarray:
        b = np.asarray(b)
        if a > self.mid:
            return self.suf[a] - self.suf[b + 1]
        return self.pre[b + 1] - self.pre[a]

    def outside(self, a: int, b) -> np.ndarray:
        return self.pre[a] + self.suf[np.asarray(b) + 1]


def cheeger_of_interval(ms: MarkovSystem, a: int, b: int, *, tol: float = 1e-9) -> tuple[float, float]:
    """``k([a, b])`` in flow form and in Dirichlet-form ``(1_A, (I - P) 1_A)_pi``.

    Both are returned after checking they agree to ``tol`` (relative).
    """
    n = ms.n
    if not (0 <= a <= b < n):
        raise ValueError(f"bad interval [{a}, {b}] for {n} states")
    if a == 0 and b == n - 1:
        raise ValueError("interval is the whole state space")
    mt = _Masses(ms.masses)
    pa = float(mt.inside(a, b))
    pc = float(mt.outside(a, b))
    F = ms.flows
    inside = np.zeros(n, dtype=bool)
    inside[a:b + 1] = True
    flow = float(F[np.ix_(inside, ~inside)].sum())
    dform = pa - float(F[a:b + 1, a:b + 1].sum())
    k1 = flow / (pa * pc)
    k2 = dform / (pa * pc)
    # the form subtracts two O(pa) sums; near-complete intervals lose digits there
    slack = n * np.finfo(float).eps / pc
    if abs(k1 - k2) > tol * max(1.0, abs(k1)) + slack:
        raise VerificationError(f"flow and Dirichlet forms of k differ: {k1!r} vs {k2!r}",
                                {"a": a, "b": b, "k_flow": k1, "k_form": k2})
    return k1, k2


class _Diagonal:
    """Segment sums along one diagonal, from whichever end is nearer.

    Summing from the near end keeps the exponentially small tail flows
    accurate; a single forward prefix sum would bury them under the
    rounding error of the bulk.
    """

    def __init__(self, vals: np.ndarray):
        self.fwd = np.concatenate([[0.0], np.cumsum(vals)])
        self.bwd = np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])
        self.mid = vals.size // 2

    def seg(self, lo, hi) -> np.ndarray:
        """Sum over [lo, hi] clipped to the diagonal, vectorized."""
        m = self.fwd.size - 1
        lo = np.clip(lo, 0, m)
        hi = np.clip(np.asarray(hi) + 1, lo, m)  # exclusive end, never before lo
        return np.where(lo >= self.mid, self.bwd[lo] - self.bwd[hi], self.fwd[hi] - self.fwd[lo])


@dataclass(frozen=True)
class ScanResult:
    k_scan: float
    a_min: int
    b_min: int
    pi_min: float


def cheeger_scan(ms: MarkovSystem, *, pi_tol: float = 1e-12, half_lines_only: bool = False) -> ScanResult:
    """Minimum of k over all intervals [a, b], a <= b, with pi([a, b]) <= 1/2.

    Uses ``flow([a, b]) = C(a) + C(b+1) - 2 X(a, b)`` where ``C(a)`` is the
    flow across the cut between a-1 and a and ``X`` the flow jumping over the
    whole interval, nonzero only for intervals shorter than the band.
    """
    n = ms.n
    F = ms.flows
    band = ms.bandwidth
    if band is None:
        nz = np.nonzero(F)
        band = int(np.max(np.abs(nz[0] - nz[1]))) + 1 if nz[0].size else 1
    band = min(band, n)
    diags = [_Diagonal(np.diagonal(F, d)) for d in range(band)]
    cut = np.zeros(n + 1)
    idx = np.arange(1, n)
    for d in range(1, band):
        cut[1:n] += diags[d].seg(idx - d, np.minimum(idx - 1, n - 1 - d))
    # jump-over flow for short intervals, X[l][a] for length l
    jump = {}
    a_all = np.arange(n)
    for ln in range(1, band - 1):
        b_all = a_all + ln - 1
        acc = np.zeros(n)
        for d in range(ln + 1, band):
            acc += diags[d].seg(b_all + 1 - d, np.minimum(a_all - 1, n - 1 - d))
        jump[ln] = acc
    mt = _Masses(ms.masses)
    best = (np.inf, -1, -1, np.nan)
    for a in range(n):
        bs = np.arange(a, n) if not half_lines_only else (np.array([n - 1]) if a > 0 else np.arange(0, n - 1))
        if bs.size == 0:
            continue
        pa = mt.inside(a, bs)
        pc = mt.outside(a, bs)
        keep = (pa <= 0.5 + pi_tol) & (pa > 0) & (pc > 0)
        if not keep.any():
            continue
        flow = cut[a] + cut[bs + 1]
        lens = bs - a + 1
        for ln in np.unique(lens[lens < band - 1]):
            sel = lens == ln
            flow[sel] -= 2.0 * jump[int(ln)][a]
        k = np.full(bs.size, np.inf)
        np.divide(flow, pa * pc, out=k, where=keep)
        j = int(np.argmin(k))
        if k[j] < best[0] * (1.0 - 1e-12):  # near-ties keep the smaller a
            best = (float(k[j]), a, int(bs[j]), float(pa[j]))
    return ScanResult(*best)


@dataclass(frozen=True)
class CheegerConstants:
    gamma: float
    zeta1: float
    r1: float
    d1: float
    D1: float
    D2: float
    D2_tail: float  # first branch of D2
    D2_floor: float  # second branch, 2/gamma form
    D2_floor_alt: float  # same branch with the 4/gamma factor
    D: float
    log10_gamma_chain: float = float("nan")
    log10_D_chain: float = float("nan")


def theoretical_D(restriction, kernel: KernelSpec, shape: ShapeReport, nu0: float, r0: float, *,
                  chain_n: int | None = None, chain_zeta: float | None = None, eps0: float | None = None) -> CheegerConstants:
    grid: Grid = restriction.grid
    sigma = restriction.sigma_mbeta
    beta = restriction.beta
    J_tail = kernel.mass(0.5, 1.0)
    J_half = kernel.mass(0.0, 0.5)
    gamma = shape.harnack_gamma
    z1 = shape.zeta1
    p_r0 = float(restriction.p[grid.index_of(r0)])
    d1 = p_r0 / nu0
    if not d1 < 1:
        raise HypothesisError(f"tail contraction d1 = {d1} >= 1; r0 too small")
    D1 = sigma * J_tail / gamma
    tail = 2.0 * (sigma / gamma) * J_half / (1.0 - d1 * d1)
    floor = (2.0 / gamma) * z1 * z1 * J_half
    D2 = min(tail, floor)
    lg = ld = float("nan")
    if chain_n is not None and chain_zeta is not None and chain_zeta > 0:
        e = 0.5 * (eps0 if eps0 is not None else 0.0)
        lg = float(np.log10(beta * kernel.sup_norm()) - chain_n * np.log10(1.0 - restriction.m_beta ** 2)
                   - np.log10(chain_zeta) - np.log10(1.0 - e))
        ld = float(np.log10(sigma * J_tail) - lg)
    return CheegerConstants(gamma=gamma, zeta1=z1, r1=shape.r1, d1=d1, D1=D1, D2=D2, D2_tail=tail,
                            D2_floor=floor, D2_floor_alt=2.0 * floor, D=min(D1, D2),
                            log10_gamma_chain=lg, log10_D_chain=ld)


@dataclass(frozen=True)
class CheegerReport:
    k_scan: float
    a_min: int
    b_min: int
    constants: CheegerConstants | None
    nu1: float  # gap of B = I - P
    mu2: float
    sandwich_lower: float
    sandwich_upper: float
    x_a: float = float("nan")
    x_b: float = float("nan")

    @property
    def lower_margin(self) -> float:
        return self.nu1 - self.sandwich_lower

    @property
    def upper_margin(self) -> float:
        return self.sandwich_upper - self.nu1


@dataclass(frozen=True)
class SandwichVerdict:
    passed: bool
    lower_margin: float
    upper_margin: float
    k_ge_D: bool | None


def make_report(scan: ScanResult, constants, nu1: float, mu2: float, grid: Grid | None = None) -> CheegerReport:
    xa = xb = float("nan")
    if grid is not None:
        xa, xb = float(grid.nodes[scan.a_min]), float(grid.nodes[scan.b_min])
    return CheegerReport(k_scan=scan.k_scan, a_min=scan.a_min, b_min=scan.b_min, constants=constants,
                         nu1=nu1, mu2=mu2, sandwich_lower=scan.k_scan ** 2 / 8.0, sandwich_upper=scan.k_scan,
                         x_a=xa, x_b=xb)


def lawler_sokal_check(report: CheegerReport, *, strict: bool = True) -> SandwichVerdict:
    """``k^2/8 <= nu1 <= k``; a violation raises with diagnostics when ``strict``."""
    lo = report.nu1 - report.sandwich_lower
    hi = report.sandwich_upper - report.nu1
    ok = lo >= 0 and hi >= 0
    kD = None if report.constants is None else bool(report.k_scan >= report.constants.D)
    if strict and not ok:
        raise VerificationError(f"conductance sandwich violated: k = {report.k_scan}, gap = {report.nu1}",
                                {"k_scan": report.k_scan, "nu1": report.nu1, "lower_margin": lo, "upper_margin": hi,
                                 "interval": (report.a_min, report.b_min)})
    return SandwichVerdict(passed=ok, lower_margin=lo, upper_margin=hi, k_ge_D=kD)
