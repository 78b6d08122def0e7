"""Command-line interface.

Exit codes: 0 success, 1 invalid configuration, 2 divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, load_config, load_preset
from .export import emit_plots, export_csv
from .graph import evaluation_order, in_neighbors
from .matching import (InfeasibleMatching, NotHurwitz, coupling_matching, feedback_matching,
                       solve_lyapunov, ultimate_bound)
from .simulation import DivergenceError, run, sync_metrics, with_overrides

OUT_ENV = "PLATOON_MRAC_OUT"
EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2

log = logging.getLogger("platoon_mrac")


def _vec(v) -> str:
    return "[" + ", ".join(f"{x:.6g}" for x in np.asarray(v).ravel()) + "]"


def _source(args):
    if args.preset:
        return load_preset(args.preset)
    return load_config(args.config)


def _overrides(cfg, args):
    ctrl, integ = {}, {}
    if getattr(args, "seed", None) is not None:
        ctrl["seed"] = args.seed
    if getattr(args, "mode", None):
        ctrl["mode"] = args.mode
    if getattr(args, "t_end", None) is not None:
        integ["t_end"] = args.t_end
    if getattr(args, "dt", None) is not None:
        integ["dt"] = args.dt
    if ctrl or integ:
        cfg = with_overrides(cfg, controller=ctrl, integration=integ)
        problems = cfg.problems()
        if problems:
            raise ConfigError("validation-error", problems, "command line")
    return cfg


def _print_metrics(trace, stream=None):
    stream = stream or sys.stdout
    m = sync_metrics(trace)
    print(f"{'agent':>5} {'final_err':>12} {'peak_err':>10} {'t_tol':>8}", file=stream)
    for row in m.as_rows():
        print(f"{row['agent']:>5} {row['final_error']:>12.3e} {row['peak_error']:>10.4f} "
              f"{row['time_to_tolerance']:>8.2f}", file=stream)


def cmd_run(args) -> int:
    cfg = _overrides(_source(args), args)
    out = Path(args.out or os.environ.get(OUT_ENV, "out"))
    try:
        trace = run(cfg)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.trace is not None and len(exc.trace):
            path = export_csv(exc.trace, out / "trace_partial.csv")
            print(f"partial trace written to {path}", file=sys.stderr)
        return EXIT_DIVERGED
    csv_path = export_csv(trace, out / "trace.csv")
    files = [] if args.no_plots else emit_plots(trace, out, csv_path.name)
    print(f"{cfg.name}: {len(trace)} samples, t_end={trace.t[-1]:g} s")
    if cfg.n_agents:
        _print_metrics(trace)
    for p in [csv_path, *files]:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _source(args)
    order = ", ".join(str(i) for i in evaluation_order(cfg.topology))
    print(f"{cfg.name}: valid ({cfg.n_agents} followers, evaluation order {order})")
    return EXIT_OK


def cmd_report_matching(args) -> int:
    cfg = _source(args)
    cert = solve_lyapunov(cfg.reference.A0, cfg.Q)
    eps0 = cfg.diagnostics.eps0
    print(f"scenario {cfg.name}")
    print(f"P = {_vec(cert.P)} (row-major), residual {cert.residual:.2e}, "
          f"eig {_vec(np.linalg.eigvalsh(cert.P))}")
    print("feedback gains (A0 = A_i + b_i k_m^T, b0 = b_i k_r):")
    for i, plant in enumerate(cfg.plants, start=1):
        g = feedback_matching(cfg.reference, plant)
        print(f"  k*_m{i} = {_vec(g.k_m_star)}  k*_r{i} = {g.k_r_star:.6g}  "
              f"bound(eps0={eps0:g}) = {ultimate_bound(cert, plant.b, eps0):.6g}")
    edges = [(j, i) for i in range(1, cfg.n_agents + 1)
             for j in in_neighbors(cfg.topology, i) if j != 0]
    if edges:
        print("coupling gains (A_j = A_i + b_i k_m^T, b_j = b_i k_r) for edge j -> i:")
        for j, i in edges:
            g = coupling_matching(cfg.plants[j - 1], cfg.plants[i - 1])
            print(f"  {j} -> {i}: k*_m{i}{j} = {_vec(g.k_m_star)}  k*_r{i}{j} = {g.k_r_star:.6g}")
    return EXIT_OK


def _parse_seeds(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        seeds = list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must look like 0..9, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return seeds


def _sweep_one(job):
    cfg, seed, out = job
    cfg = with_overrides(cfg, controller={"seed": seed})
    try:
        trace = run(cfg)
    except DivergenceError as exc:
        return seed, "diverged", exc.t, np.nan, np.nan
    if out is not None:
        export_csv(trace, Path(out) / f"seed_{seed}" / "trace.csv")
    m = sync_metrics(trace)
    return seed, "ok", float(m.final_error.max()), float(m.peak_error.max()), \
        float(m.time_to_tolerance.max())


def cmd_sweep(args) -> int:
    cfg = _overrides(_source(args), args)
    jobs = [(cfg, s, args.out) for s in args.seeds]
    workers = args.workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    print(f"{'seed':>5} {'status':>9} {'max_final':>12} {'max_peak':>10} {'max_t_tol':>10}")
    for seed, status, final, peak, ttt in rows:
        if status == "ok":
            print(f"{seed:>5} {status:>9} {final:>12.3e} {peak:>10.4f} {ttt:>10.2f}")
        else:
            print(f"{seed:>5} {status:>9}  at t={final:.4g}")
    return EXIT_DIVERGED if any(r[1] != "ok" for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="platoon-mrac",
                                description="Distributed adaptive platoon simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--config", type=Path, help="scenario TOML file")
        g.add_argument("--preset", choices=PRESETS)

    def tweaks(sp):
        sp.add_argument("--mode", choices=("communicated", "estimated"))
        sp.add_argument("--t-end", type=float)
        sp.add_argument("--dt", type=float)

    sp = sub.add_parser("run", help="simulate and export CSV and plots")
    source(sp)
    tweaks(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./out)")
    sp.add_argument("--no-plots", action="store_true")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("validate", help="check a scenario file")
    source(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("report-matching", help="print ideal gains, P and the error bound")
    source(sp)
    sp.set_defaults(func=cmd_report_matching)

    sp = sub.add_parser("sweep", help="run several seeds in parallel")
    source(sp)
    tweaks(sp)
    sp.add_argument("--seeds", type=_parse_seeds, default=list(range(10)), help="e.g. 0..9")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", type=Path, help="write one CSV per seed under this directory")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (InfeasibleMatching, NotHurwitz) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
