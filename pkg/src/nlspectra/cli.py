"""Command-line entry point ``nlspectra``.

Exit codes: 0 all checks pass, 1 verdict failure, 2 configuration error,
3 numerical non-convergence.

``NLSPECTRA_SEED`` is reserved; the pipeline uses no randomness.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .errors import ConfigError, NonConvergenceError
from .kernels import BoundaryKind

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NONCONV = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser, *, need_L: bool = True) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--workers", type=int, help="parallel cells")
    p.add_argument("--bc", choices=[b.value for b in BoundaryKind], help="boundary condition")
    p.add_argument("--inv-h", type=int, dest="inv_h", help="grid resolution 1/h")
    p.add_argument("--beta", type=float, action="append", help="inverse temperature (repeatable)")
    if need_L:
        p.add_argument("--L", type=float, action="append", help="half-length (repeatable)")
    p.add_argument("--eps0", type=float, help="cutoff eps0 (default (1 - sigma)/4)")
    p.add_argument("--no-chain", action="store_true", help="skip the chain-positivity constants")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlspectra", description="Spectra of linearized nonlocal operators around the instanton.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("instanton", help="solve the instanton and write its profile")
    _common(p)
    p = sub.add_parser("spectrum", help="spectral report per (beta, L)")
    _common(p)
    p.add_argument("--dump-matrix", action="store_true", help="write A as an NLSP binary per cell")
    p = sub.add_parser("cheeger", help="Cheeger scan and conductance sandwich per (beta, L)")
    _common(p)
    p = sub.add_parser("scan", help="full sweep with verdict and all output files")
    _common(p)
    p = sub.add_parser("verify", help="rerun the verdict on an existing scan.csv")
    p.add_argument("scan_csv", type=Path)
    p.add_argument("--bc", choices=[b.value for b in BoundaryKind])
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args):
    from .scan import ScanConfig, load_config, validate_config

    cfg = load_config(args.config) if args.config else ScanConfig()
    if args.beta:
        cfg.beta_list = list(args.beta)
    if getattr(args, "L", None):
        cfg.L_list = list(args.L)
    if args.inv_h is not None:
        cfg.inv_h = args.inv_h
    if args.bc:
        cfg.bc = BoundaryKind.parse(args.bc)
    if args.eps0 is not None:
        cfg.eps0 = args.eps0
    if args.out is not None:
        cfg.output_dir = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    if args.no_chain:
        cfg.chain = False
    validate_config(cfg)
    return cfg


def _cmd_instanton(cfg) -> int:
    from .instanton import characteristic_rate, master_grid, solve_instanton, write_profile_csv
    from .kernels import get_kernel

    kernel = get_kernel(cfg.kernel)
    L_top = max(cfg.L_list) if cfg.L_list else 10.0
    for beta in cfg.beta_list:
        prof = solve_instanton(beta, kernel, master_grid(L_top, cfg.inv_h))
        path = write_profile_csv(prof, Path(cfg.output_dir) / f"instanton_{beta:g}.csv")
        print(f"beta={beta:g} m_beta={prof.m_beta:.16g} L_max={prof.grid.L:g} iterations={prof.iterations} "
              f"residual={prof.residual:.3e} alpha_fit={prof.alpha_fit:.6g} (R2={prof.fit_r2:.6f}) "
              f"alpha_char={characteristic_rate(beta, kernel):.6g} -> {path}")
    return EXIT_OK


def _run_rows(cfg):
    from .scan import run_scan

    rows = run_scan(cfg)
    for r in rows:
        if r.status == "nonconvergence":
            print(f"beta={r.beta:g} L={r.L:g}: {r.error}", file=sys.stderr)
    return rows


def _status(rows) -> int:
    if any(r.status == "nonconvergence" for r in rows):
        return EXIT_NONCONV
    if any(r.status == "failed" for r in rows):
        return EXIT_VERDICT
    return EXIT_OK


def _cmd_table(cfg, columns, name: str, dump: bool = False) -> int:
    from .csvio import write_table
    from .scan import table

    rows = _run_rows(cfg)
    ok = [r for r in rows if r.status == "ok"]
    out = Path(cfg.output_dir)
    path = write_table(out / name, columns, table(ok, columns))
    for r in ok:
        print("  ".join(f"{c}={v:.6g}" if isinstance(v, float) else f"{c}={v}" for c, v in zip(columns, table([r], columns)[0])))
    if dump:
        _dump_matrices(cfg, ok, out)
    print(f"-> {path}")
    code = _status(rows)
    if name == "cheeger.csv" and code == EXIT_OK and not all(r.sandwich_pass for r in ok):
        code = EXIT_VERDICT
    return code


def _dump_matrices(cfg, rows, out: Path) -> None:
    from .instanton import master_grid, restrict_to, solve_instanton
    from .kernels import build_grid, get_kernel
    from .operators import assemble, write_matrix

    kernel = get_kernel(cfg.kernel)
    L_top = max(r.L for r in rows)
    for beta in dict.fromkeys(r.beta for r in rows):
        prof = solve_instanton(beta, kernel, master_grid(L_top, cfg.inv_h))
        for r in (r for r in rows if r.beta == beta):
            rs = restrict_to(prof, build_grid(r.L, cfg.inv_h))
            write_matrix(assemble("A", rs, kernel, rs.grid, cfg.bc), out / "matrices" / f"A_{beta:g}_{r.L:g}.nlsp")


def _cmd_scan(cfg) -> int:
    from .scan import Verdict, emit_outputs

    rows = _run_rows(cfg)
    if not rows:
        return EXIT_OK
    verdicts = emit_outputs(rows, cfg)
    for v in verdicts:
        print("\n".join(v.lines()) if isinstance(v, Verdict) else v)
    print(f"-> {cfg.output_dir}")
    code = _status(rows)
    if code == EXIT_OK and not all(isinstance(v, Verdict) and v.passed for v in verdicts):
        code = EXIT_VERDICT
    return code


def _cmd_verify(args) -> int:
    from .scan import Verdict, read_scan_csv, verdicts_by_beta

    try:
        rows = read_scan_csv(args.scan_csv)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    verdicts = verdicts_by_beta(rows, args.bc)
    for v in verdicts:
        print("\n".join(v.lines()) if isinstance(v, Verdict) else v)
    return EXIT_OK if verdicts and all(isinstance(v, Verdict) and v.passed for v in verdicts) else EXIT_VERDICT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    warnings.simplefilter("default")
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        cfg = config_from_args(args)
        if args.command == "instanton":
            return _cmd_instanton(cfg)
        if args.command == "spectrum":
            from .scan import SPECTRAL_COLUMNS
            return _cmd_table(cfg, SPECTRAL_COLUMNS, "spectral.csv", dump=args.dump_matrix)
        if args.command == "cheeger":
            from .scan import CHEEGER_COLUMNS
            return _cmd_table(cfg, CHEEGER_COLUMNS, "cheeger.csv")
        return _cmd_scan(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
