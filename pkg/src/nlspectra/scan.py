"""(beta, L) sweeps, the end-to-end verdict and the output files."""

from __future__ import annotations

import csv
import logging
import math
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .cheeger import build_markov, cheeger_of_interval, cheeger_scan, lawler_sokal_check, make_report, theoretical_D
from .csvio import fmt, write_table
from .errors import ConfigError, NonConvergenceError
from .fitting import fit_exponential
from .instanton import InstantonProfile, characteristic_rate, master_grid, restrict_to, solve_instanton
from .kernels import BoundaryKind, build_grid, get_kernel
from .operators import chain_positivity

__all__ = [
    "ScanConfig",
    "ScanRow",
    "Verdict",
    "emit_outputs",
    "parse_config",
    "read_scan_csv",
    "run_cell",
    "run_scan",
    "theorem81_verdict",
]

log = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    "rate_rel": 0.25,  # |rate(mu1) / (2 alpha) - 1|
    "mu1_r2": 0.98,
    "mu1_floor": -1e-8,
    "gap_spread": 1.1,
    "dist_rate_frac": 0.8,
    "dist_r2": 0.95,
    "markov": 1e-9,
    "neumann_mu1": 1e-8,
    "simple_gap": 1e-3,
    "even": 1e-8,
}


@dataclass
class ScanConfig:
    beta_list: list = field(default_factory=lambda: [2.0])
    L_list: list = field(default_factory=lambda: [5.0, 7.0, 10.0, 15.0, 20.0])
    inv_h: int = 40
    bc: BoundaryKind = BoundaryKind.DIRICHLET
    eps0: float | None = None  # None: (1 - sigma)/4
    output_dir: Path = Path("out")
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    workers: int = 1
    kernel: str = "quartic"
    chain: bool = True  # chain-positivity constants, logged only

    def __post_init__(self):
        self.bc = BoundaryKind.parse(self.bc)
        self.output_dir = Path(self.output_dir)

    def cells(self) -> list[tuple[float, float]]:
        seen = []
        for b in self.beta_list:
            for L in self.L_list:
                if (b, L) in seen:
                    warnings.warn(f"duplicate cell (beta={b:g}, L={L:g}) dropped", stacklevel=2)
                    continue
                seen.append((b, L))
        return seen


_LIST_KEYS = {"beta": "beta_list", "L": "L_list"}


def parse_config(text: str, source: str = "<config>") -> ScanConfig:
    """Flat ``key = value`` format; repeated ``beta``/``L`` form lists, ``#`` starts a comment."""
    cfg = ScanConfig(beta_list=[], L_list=[])
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                vals = [float(v) for v in value.replace(",", " ").split()]
                if not vals:
                    raise ValueError("empty value")
                getattr(cfg, _LIST_KEYS[key]).extend(vals)
            elif key == "inv_h":
                cfg.inv_h = int(value)
            elif key == "bc":
                cfg.bc = BoundaryKind.parse(value)
            elif key == "eps0":
                cfg.eps0 = None if value.lower() == "default" else float(value)
            elif key in ("output_dir", "out"):
                cfg.output_dir = Path(value)
            elif key == "workers":
                cfg.workers = int(value)
            elif key == "kernel":
                get_kernel(value)
                cfg.kernel = value
            elif key == "chain":
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"not a boolean: {value!r}")
                cfg.chain = value.lower() in ("true", "1", "yes")
            elif key.startswith("tol."):
                name = key[4:]
                if name not in DEFAULT_TOLERANCES:
                    raise ValueError(f"unknown tolerance {name!r}")
                cfg.tolerances[name] = float(value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    validate_config(cfg)
    return cfg


def load_config(path: "str | Path") -> ScanConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def validate_config(cfg: ScanConfig) -> None:
    for b in cfg.beta_list:
        if not b > 1:
            raise ConfigError(f"beta must exceed 1, got {b}")
    for L in cfg.L_list:
        if not L >= 1:
            raise ConfigError(f"L must be >= 1, got {L}")
        if abs(L * cfg.inv_h - round(L * cfg.inv_h)) > 1e-9:
            raise ConfigError(f"L = {L} is not a multiple of h = 1/{cfg.inv_h}")
    if cfg.inv_h < 2:
        raise ConfigError(f"inv_h must be >= 2, got {cfg.inv_h}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")


@dataclass(frozen=True)
class ScanRow:
    beta: float
    L: float
    inv_h: int
    bc: str
    status: str = "ok"
    error: str = ""
    m_beta: float = math.nan
    sigma_mbeta: float = math.nan
    alpha_fit: float = math.nan
    alpha_char: float = math.nan
    fit_r2: float = math.nan
    instanton_residual: float = math.nan
    nu0: float = math.nan
    nu1: float = math.nan
    nu_eigh: float = math.nan
    mu1: float = math.nan
    mu1_direct: float = math.nan
    mu2: float = math.nan
    trial_bound: float = math.nan
    trial_deficit: float = math.nan
    distance: float = math.nan
    distance_direct: float = math.nan
    a_coef: float = math.nan
    ort_norm: float = math.nan
    eigen_residual: float = math.nan
    v0_min: float = math.nan
    even_defect: float = math.nan
    monotone_tail: bool = False
    harnack_gamma: float = math.nan
    zeta1: float = math.nan
    r1: float = math.nan
    mass_r1: float = math.nan
    eps0: float = math.nan
    r0: float = math.nan
    alpha_eps0: float = math.nan
    hypotheses_ok: bool = False
    decay_C: float = math.nan
    decay_C_min: float = math.nan
    decay_pass: bool = False
    tail_ratio_max: float = math.nan
    d1: float = math.nan
    k_scan: float = math.nan
    a_min: int = -1
    b_min: int = -1
    x_a: float = math.nan
    x_b: float = math.nan
    D1: float = math.nan
    D2: float = math.nan
    D: float = math.nan
    D2_floor_alt: float = math.nan
    gap_B: float = math.nan
    sandwich_lower_margin: float = math.nan
    sandwich_upper_margin: float = math.nan
    sandwich_pass: bool = False
    k_form_defect: float = math.nan
    markov_row_sum: float = math.nan
    markov_stationarity: float = math.nan
    markov_reversibility: float = math.nan
    markov_normalization: float = math.nan
    markov_similarity: float = math.nan
    spectrum_q_vs_a: float = math.nan
    spectrum_q_vs_a_scaled: float = math.nan
    chain_n: int = -1
    chain_zeta: float = math.nan
    log10_gamma_chain: float = math.nan
    wall_time: float = field(default=math.nan, compare=False)
    arrays: dict | None = field(default=None, repr=False, compare=False)


# wall time lives in timing.csv so scan.csv stays byte-reproducible
CSV_FIELDS = [f.name for f in fields(ScanRow) if f.name not in ("wall_time", "arrays")]
_INT_FIELDS = {f.name for f in fields(ScanRow) if f.type in ("int", int)}
_BOOL_FIELDS = {f.name for f in fields(ScanRow) if f.type in ("bool", bool)}
_STR_FIELDS = {"bc", "status", "error"}


def run_cell(profile: InstantonProfile, L: float, bc: "BoundaryKind | str", eps0=None, chain: bool = True,
             alpha_char: float = math.nan) -> ScanRow:
    """One (beta, L) cell: restriction, spectrum, shape, Markov chain, Cheeger scan."""
    from .spectral import analyze  # local: keeps worker start-up light

    t0 = time.perf_counter()
    bc = BoundaryKind.parse(bc)
    kernel = profile.kernel
    grid = build_grid(L, profile.grid.inv_h)
    rs = restrict_to(profile, grid)
    an = analyze(rs, kernel, bc, eps0)
    res, dp, shape = an.result, an.decay, an.shape
    ms = build_markov(res.nu0, res.v0, an.operator)
    defects = ms.defects()
    ev_q = ms.spectrum()
    sc = cheeger_scan(ms)
    chain_n, chain_zeta = -1, math.nan
    if chain:
        try:
            cp = chain_positivity(kernel, grid, rs.p, bc)
            chain_n, chain_zeta = cp.n, cp.zeta_free
        except RuntimeError as exc:
            log.warning("chain positivity at L=%g: %s", L, exc)
    consts = theoretical_D(rs, kernel, shape, res.nu0, dp.r0, chain_n=chain_n if chain_n >= 0 else None,
                           chain_zeta=chain_zeta if chain_n >= 0 else None, eps0=dp.eps0)
    gap_b = float(1.0 - ev_q[1])
    rep = make_report(sc, consts, gap_b, res.mu2, grid)
    sv = lawler_sokal_check(rep, strict=False)
    kf = cheeger_of_interval(ms, sc.a_min, sc.b_min)
    hyp = bool(dp.applicable and res.nu0 > 1.0 - 0.5 * dp.eps0)
    arrays = {"x": grid.nodes, "v0": res.v0, "m_bar": rs.m_bar, "translation_mode": rs.translation_mode,
              "m_bar_prime": rs.m_bar_prime, "p": rs.p}
    return ScanRow(
        beta=profile.beta, L=float(L), inv_h=grid.inv_h, bc=bc.value,
        m_beta=profile.m_beta, sigma_mbeta=profile.sigma_mbeta, alpha_fit=profile.alpha_fit,
        alpha_char=alpha_char, fit_r2=profile.fit_r2, instanton_residual=profile.residual,
        nu0=res.nu0, nu1=res.nu1, nu_eigh=res.nu_eigh, mu1=res.mu1, mu1_direct=res.mu1_direct, mu2=res.mu2,
        trial_bound=res.trial_bound, trial_deficit=res.trial_deficit, distance=res.distance,
        distance_direct=res.distance_direct, a_coef=res.a, ort_norm=res.ort_norm, eigen_residual=res.residual,
        v0_min=float(res.v0.min()), even_defect=shape.even_defect, monotone_tail=shape.min_tail_slope_ok,
        harnack_gamma=shape.harnack_gamma, zeta1=shape.zeta1, r1=shape.r1, mass_r1=shape.mass_r1,
        eps0=dp.eps0, r0=dp.r0, alpha_eps0=dp.alpha_eps0, hypotheses_ok=hyp,
        decay_C=an.eigen_decay.C, decay_C_min=an.eigen_decay.C_min, decay_pass=an.eigen_decay.passed,
        tail_ratio_max=an.tail.max_ratio, d1=consts.d1,
        k_scan=sc.k_scan, a_min=sc.a_min, b_min=sc.b_min, x_a=rep.x_a, x_b=rep.x_b,
        D1=consts.D1, D2=consts.D2, D=consts.D, D2_floor_alt=consts.D2_floor_alt, gap_B=gap_b,
        sandwich_lower_margin=sv.lower_margin, sandwich_upper_margin=sv.upper_margin, sandwich_pass=sv.passed,
        k_form_defect=abs(kf[0] - kf[1]),
        markov_row_sum=defects["row_sum"], markov_stationarity=defects["stationarity"],
        markov_reversibility=defects["reversibility"], markov_normalization=defects["normalization"],
        markov_similarity=_similarity_defect(ms, an.operator),
        spectrum_q_vs_a=float(np.max(np.abs(ev_q - res.eigenvalues))),
        spectrum_q_vs_a_scaled=float(np.max(np.abs(res.nu0 * ev_q - res.eigenvalues))),
        chain_n=chain_n, chain_zeta=chain_zeta, log10_gamma_chain=consts.log10_gamma_chain,
        wall_time=time.perf_counter() - t0, arrays=arrays,
    )


def _similarity_defect(ms, A) -> float:
    f = np.random.default_rng(0).standard_normal(ms.n)
    return float(np.max(np.abs(ms.P @ f - (A.entries @ (ms.v0 * f)) / (ms.nu0 * ms.v0))))


def _r0(profile: InstantonProfile, eps0) -> float:
    """r0 from the master profile; it does not depend on L once L >= r0."""
    from .spectral import decay_params
    return decay_params(restrict_to(profile, profile.grid), eps0).r0


def _failed_row(beta, L, inv_h, bc, exc: BaseException) -> ScanRow:
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return ScanRow(beta=float(beta), L=float(L), inv_h=int(inv_h), bc=BoundaryKind.parse(bc).value,
                   status="nonconvergence" if isinstance(exc, NonConvergenceError) else "failed", error=msg)


def _guarded(fn, profile, L, bc, eps0, chain, alpha_char):
    try:
        return fn(profile, L, bc, eps0, chain, alpha_char)
    except Exception as exc:  # per-cell isolation
        log.debug("cell failed:\n%s", traceback.format_exc())
        return _failed_row(profile.beta, L, profile.grid.inv_h, bc, exc)


def run_scan(config: ScanConfig, *, cell_fn: Callable | None = None) -> list[ScanRow]:
    """Rows ordered by (beta, L) as listed; failures become marked rows."""
    cells = config.cells()
    if not cells:
        warnings.warn("empty sweep: no (beta, L) cells", stacklevel=2)
        return []
    fn = cell_fn or run_cell
    kernel = get_kernel(config.kernel)
    profiles = {}
    chars = {}
    L_top = max(L for _, L in cells)
    for beta in dict.fromkeys(b for b, _ in cells):
        try:
            profiles[beta] = solve_instanton(beta, kernel, master_grid(L_top, config.inv_h))
            chars[beta] = characteristic_rate(beta, kernel)
        except Exception as exc:
            profiles[beta] = exc
    jobs = []
    for beta, L in cells:
        prof = profiles[beta]
        jobs.append((beta, L, prof))
    rows: list[ScanRow | None] = [None] * len(jobs)
    live = []
    for i, (b, L, prof) in enumerate(jobs):
        if isinstance(prof, Exception):
            rows[i] = _failed_row(b, L, config.inv_h, config.bc, prof)
            continue
        try:
            r0 = _r0(prof, config.eps0)
        except Exception as exc:
            rows[i] = _failed_row(b, L, config.inv_h, config.bc, exc)
            continue
        if L < 2 * r0:
            rows[i] = ScanRow(beta=b, L=float(L), inv_h=config.inv_h, bc=config.bc.value, status="inapplicable",
                              error=f"L < 2 r0 = {2 * r0:g}", r0=r0)
            continue
        live.append((i, b, L, prof))
    args = [(fn, prof, L, config.bc, config.eps0, config.chain, chars[b]) for _, b, L, prof in live]
    if config.workers > 1 and len(live) > 1 and cell_fn is None:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            results = list(ex.map(_guarded, *zip(*args)))
    else:
        results = [_guarded(*a) for a in args]
    for (i, *_), row in zip(live, results):
        rows[i] = row
    return rows  # type: ignore[return-value]


@dataclass
class PointVerdict:
    name: str
    passed: bool
    details: dict
    margins: list = field(default_factory=list)


@dataclass
class Verdict:
    beta: float
    bc: str
    points: list
    L1: float | None = None

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    def lines(self) -> list[str]:
        out = [f"beta = {self.beta:g}  bc = {self.bc}  overall: {'PASS' if self.passed else 'FAIL'}"]
        for p in self.points:
            det = ", ".join(f"{k}={_short(v)}" for k, v in p.details.items())
            out.append(f"  [{'PASS' if p.passed else 'FAIL'}] {p.name}: {det}")
        out.append(f"  empirical L1 = {'none' if self.L1 is None else f'{self.L1:g}'}")
        return out


def _short(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


class InsufficientSpanError(ValueError):
    pass


def _cell_checks(rows, tol) -> PointVerdict:
    bad = []
    for r in rows:
        problems = []
        if not r.v0_min > 0:
            problems.append("v0 not positive")
        if not r.even_defect < tol["even"]:
            problems.append("v0 not even")
        if not (r.nu0 - r.nu1) > tol["simple_gap"]:
            problems.append("nu0 not simple")
        if max(r.markov_row_sum, r.markov_stationarity, r.markov_reversibility, r.markov_normalization,
               r.markov_similarity, r.spectrum_q_vs_a_scaled) > tol["markov"]:
            problems.append("Markov defects")
        if not r.sandwich_pass:
            problems.append("sandwich")
        if not r.k_scan >= r.D:
            problems.append("k < D")
        if not (r.decay_pass and r.monotone_tail and r.zeta1 > 0 and r.mass_r1 >= 0.5):
            problems.append("eigenfunction shape")
        if not r.d1 < 1 or not r.tail_ratio_max <= r.d1:
            problems.append("tail contraction")
        if problems:
            bad.append(f"L={r.L:g}:" + "/".join(problems))
    return PointVerdict("cell checks", not bad, {"cells": len(rows), "violations": "; ".join(bad) or "none"})


def theorem81_verdict(rows: Iterable[ScanRow], bc: "BoundaryKind | str | None" = None,
                      tolerances: dict | None = None) -> Verdict:
    rows = sorted((r for r in rows if r.status == "ok"), key=lambda r: r.L)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    if not rows:
        raise InsufficientSpanError("insufficient span: no completed cells")
    betas = {r.beta for r in rows}
    if len(betas) != 1:
        raise ValueError(f"verdict needs a single beta, got {sorted(betas)}")
    bc = BoundaryKind.parse(bc or rows[0].bc)
    Ls = np.array([r.L for r in rows])
    if Ls.size < 4 or Ls.max() < 3 * Ls.min():
        raise InsufficientSpanError(f"insufficient span: need >= 4 L values spanning a factor 3, got {Ls.tolist()}")
    alpha = rows[0].alpha_fit
    mu1 = np.array([r.mu1 for r in rows])
    mu1d = np.array([r.mu1_direct for r in rows])
    points = []
    if bc is BoundaryKind.DIRICHLET:
        ok_sign = bool(np.all(mu1 > tol["mu1_floor"]) and np.all(mu1d > tol["mu1_floor"]))
        fit = fit_exponential(Ls, mu1) if np.all(mu1 > 0) else None
        ok = ok_sign and fit is not None and abs(fit.rate / (2 * alpha) - 1) <= tol["rate_rel"] \
            and fit.r_squared >= tol["mu1_r2"]
        points.append(PointVerdict("mu1 decays like exp(-2 alpha L)", bool(ok), {
            "rate": fit.rate if fit else math.nan, "2alpha": 2 * alpha,
            "r2": fit.r_squared if fit else math.nan, "min_mu1_direct": float(mu1d.min())},
            margins=(mu1 - tol["mu1_floor"]).tolist()))
    else:
        ok = bool(np.all(mu1 <= 0) and np.all(mu1d <= tol["neumann_mu1"]))
        points.append(PointVerdict("Neumann: nu0 >= 1", ok, {
            "max_mu1": float(mu1.max()), "max_mu1_direct": float(mu1d.max())}, margins=(-mu1).tolist()))
    mu2 = np.array([r.mu2 for r in rows])
    Dmax = max(r.D for r in rows)
    spread = float(mu2.max() / mu2.min())
    points.append(PointVerdict("uniform gap mu2 >= D", bool(spread <= tol["gap_spread"] and mu2.min() >= Dmax > 0), {
        "min_mu2": float(mu2.min()), "max_mu2": float(mu2.max()), "spread": spread, "D": Dmax},
        margins=(mu2 - Dmax).tolist()))
    dist = np.array([r.distance for r in rows])
    dec = bool(np.all(np.diff(dist) < 0))
    fitd = fit_exponential(Ls, dist) if np.all(dist > 0) else None
    ok3 = dec and fitd is not None and fitd.rate >= tol["dist_rate_frac"] * alpha and fitd.r_squared >= tol["dist_r2"]
    points.append(PointVerdict("psi1 -> m'/|m'| exponentially", bool(ok3), {
        "rate": fitd.rate if fitd else math.nan, "alpha": alpha, "r2": fitd.r_squared if fitd else math.nan,
        "strictly_decreasing": dec}, margins=dist.tolist()))
    points.append(_cell_checks(rows, tol))
    L1 = next((r.L for r in rows if r.hypotheses_ok), None)
    return Verdict(beta=rows[0].beta, bc=bc.value, points=points, L1=L1)


def verdicts_by_beta(rows: list[ScanRow], bc=None, tolerances=None) -> list["Verdict | str"]:
    out = []
    for beta in dict.fromkeys(r.beta for r in rows):
        sub = [r for r in rows if r.beta == beta]
        try:
            out.append(theorem81_verdict(sub, bc, tolerances))
        except InsufficientSpanError as exc:
            out.append(f"beta = {beta:g}: {exc}")
    return out


SPECTRAL_COLUMNS = ["L", "beta", "nu0", "mu1", "mu2", "trial_bound", "distance_to_mbar_prime", "harnack_gamma",
                    "zeta1", "r0", "r1", "alpha_eps0"]
CHEEGER_COLUMNS = ["L", "beta", "k_scan", "a_min", "b_min", "D1", "D2", "D", "d1", "gamma", "zeta1", "mu2",
                   "sandwich_lower_margin", "sandwich_upper_margin"]
_ALIASES = {"distance_to_mbar_prime": "distance", "gamma": "harnack_gamma"}


def table(rows: list[ScanRow], columns: list[str]) -> list[list]:
    return [[getattr(r, _ALIASES.get(c, c)) for c in columns] for r in rows]


def emit_outputs(rows: list[ScanRow], config: ScanConfig) -> list["Verdict | str"]:
    if not rows:
        raise ValueError("no rows to write")
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_table(out / "scan.csv", CSV_FIELDS, ([getattr(r, c) for c in CSV_FIELDS] for r in rows))
        write_table(out / "timing.csv", ["beta", "L", "wall_time"], ([r.beta, r.L, r.wall_time] for r in rows))
        ok = [r for r in rows if r.status == "ok"]
        write_table(out / "spectral.csv", SPECTRAL_COLUMNS, table(ok, SPECTRAL_COLUMNS))
        write_table(out / "cheeger.csv", CHEEGER_COLUMNS, table(ok, CHEEGER_COLUMNS))
        for name, col in (("mu1_vs_L.dat", "mu1"), ("gap_vs_L.dat", "mu2"), ("psi1_distance_vs_L.dat", "distance")):
            _write_plot(out / "plots" / name, ok, col)
        for r in ok:
            if r.arrays is not None:
                a = r.arrays
                write_table(out / "profiles" / f"{r.beta:g}_{r.L:g}.csv",
                            ["x", "v0", "m_bar", "m_bar_prime", "translation_mode", "p"],
                            zip(a["x"], a["v0"], a["m_bar"], a["m_bar_prime"], a["translation_mode"], a["p"]))
        verdicts = verdicts_by_beta(rows, config.bc, config.tolerances)
        with open(out / "verdict.txt", "w") as fh:
            for v in verdicts:
                fh.write(("\n".join(v.lines()) if isinstance(v, Verdict) else v) + "\n")
            failed = [r for r in rows if r.status != "ok"]
            for r in failed:
                fh.write(f"cell beta={r.beta:g} L={r.L:g}: {r.status}: {r.error}\n")
    except OSError as exc:
        raise OSError(f"writing outputs under {out}: {exc}") from exc
    return verdicts


def _write_plot(path: Path, rows: list[ScanRow], col: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k, beta in enumerate(dict.fromkeys(r.beta for r in rows)):
            if k:
                fh.write("\n\n")
            fh.write(f"# beta = {beta:g}\n# L {col}\n")
            for r in (r for r in rows if r.beta == beta):
                fh.write(f"{fmt(r.L)} {fmt(getattr(r, col))}\n")


def read_scan_csv(path: "str | Path") -> list[ScanRow]:
    rows = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(rd.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in rd:
            kw = {}
            for k in CSV_FIELDS:
                v = rec[k]
                if k in _STR_FIELDS:
                    kw[k] = v
                elif k in _BOOL_FIELDS:
                    kw[k] = v == "true"
                elif k in _INT_FIELDS:
                    kw[k] = int(v)
                else:
                    kw[k] = float(v)
            rows.append(ScanRow(**kw))
    return rows


def row_dict(row: ScanRow) -> dict:
    d = asdict(replace(row, arrays=None))
    d.pop("arrays")
    return d


__all__ += ["InsufficientSpanError", "load_config", "row_dict", "verdicts_by_beta"]
