"""Command-line front end: ``phasemoments {kernels,run,exact}``.

Every subcommand reads an optional JSON config (see :mod:`phasemoments.config`),
applies flag overrides and writes CSV files with fixed headers, JSON mirrors
and a ``metadata.json`` into the output directory.  Result files are
deterministic for a given config; only ``metadata.json`` carries a timestamp.

Exit codes: 0 success, 2 configuration error, 1 any other failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .errors import CacheError, ConfigError, NumericalError, TruncationError
from .estimator import (MomentEstimate, mirror, phase_stats, q_moments, sample_moments,
                        write_moments_csv, write_moments_json)
from .kernels import covered_levels, default_table_grid, get_kernel_table, verify_integral_equation
from .quantum_state import canonical_phase_pdf, default_x_grid, exact_moments, mean_photon
from .simulator import (allocate_events, equidistant_phases, sample_double_homodyne,
                        sample_homodyne, save_double_homodyne, save_homodyne)

log = logging.getLogger("phasemoments")

RESIDUAL_N_MAX = 30
KERNEL_PLOT_FIELDS = ("x", "K", "K_classical")
BAR_FIELDS = ("source", "k", "re", "im", "stderr_re", "stderr_im")
STATS_FIELDS = ("source", "mean_phase", "mean_phase_err", "delta_phi", "delta_phi_err",
                "sigma_bp", "sigma_h", "clamped")


def _fmt(v):
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _metadata(cfg, command, extra=None):
    doc = {
        "command": command,
        "package_version": __version__,
        "config_sha256": cfg.digest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    doc.update(extra or {})
    return doc


def _tables(cfg, jobs=1):
    grid = default_table_grid(cfg.grid.crossover_x, cfg.grid.kernel_step)
    ks = range(1, cfg.k_max + 1)

    def one(k):
        return get_kernel_table(k, cfg.cache_dir, grid)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            built = list(pool.map(one, ks))
    else:
        built = [one(k) for k in ks]
    return dict(zip(ks, built))


def _exact_estimates(rho, k_max):
    return [MomentEstimate(k, exact_moments(rho, k), 0.0, 0.0, 0) for k in range(1, k_max + 1)]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_kernels(cfg, jobs=1, out=None):
    """Build or load kernel tables, write plot columns and report residuals.

    Residuals cover n <= 30, or fewer levels when the table grid is too
    narrow to hold psi_{n+k} psi_n.
    """
    out = out or sys.stdout
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    tables = _tables(cfg, jobs)
    summary = []
    for k, table in tables.items():
        x = table.x_grid
        cls = np.full_like(x, np.nan)
        nz = x != 0 if k % 2 == 0 else np.ones_like(x, dtype=bool)
        cls[nz] = table.classical(x[nz])
        _write_csv(outdir / f"kernel_k{k}.csv", KERNEL_PLOT_FIELDS,
                   ([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(x, table.values, cls)))
        n_max = covered_levels(table, RESIDUAL_N_MAX)
        if n_max < 0:
            log.warning("K_%d grid |x| <= %g is too narrow to check any Fock level", k, table.crossover_x)
            res = np.array([np.nan])
        else:
            res = verify_integral_equation(table, n_max)
        summary.append({
            "k": k,
            "n_max": n_max,
            "max_residual": float(np.max(res)),
            "worst_n": int(np.argmax(res)) if n_max >= 0 else -1,
            "crossover_x": table.crossover_x,
            "asymptote_constant": table.asymptote_constant,
            "continuation_mismatch": table.meta.get("continuation_mismatch"),
        })
        if n_max >= 0:
            print(f"K_{k}: max |2 pi int K psi_(n+k) psi_n dx - 1| over n <= {n_max} "
                  f"= {np.max(res):.2e} (n = {np.argmax(res)})", file=out)
    _write_csv(outdir / "kernel_residuals.csv", ("k", "n_max", "max_residual", "worst_n"),
               ([s["k"], s["n_max"], _fmt(s["max_residual"]), s["worst_n"]] for s in summary))
    _write_json(outdir / "kernel_residuals.json", {"kernels": summary})
    _write_json(outdir / "metadata.json", _metadata(cfg, "kernels"))
    return summary


def cmd_exact(cfg, out=None):
    """Exact moments, mean photon number and canonical p(phi) of the configured state."""
    out = out or sys.stdout
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rho = cfg.state.build(cfg.fock_dim)
    est = _exact_estimates(rho, cfg.k_max)
    nbar = mean_photon(rho)
    write_moments_csv(est, outdir / "moments_exact.csv")
    write_moments_json(est, outdir / "moments_exact.json")
    phi = -np.pi + 2.0 * np.pi * np.arange(cfg.grid.phi_points) / cfg.grid.phi_points
    p = canonical_phase_pdf(rho, phi)
    _write_csv(outdir / "phase_pdf.csv", ("phi", "p"),
               ([_fmt(a), _fmt(b)] for a, b in zip(phi, p)))
    summary = {"mean_photon_number": nbar,
               "moments": [e.record() for e in est]}
    _write_json(outdir / "exact_summary.json", summary)
    _write_json(outdir / "metadata.json", _metadata(cfg, "exact"))
    print(f"<n> = {nbar:.5f}", file=out)
    for e in est:
        print(f"Psi_{e.k} = {e.value.real:+.6f} {e.value.imag:+.6f}i  "
              f"|Psi| = {abs(e.value):.6f}  arg = {math.atan2(e.value.imag, e.value.real):+.6f}",
              file=out)
    return summary


def _stats_row(source, st):
    return [source] + [_fmt(getattr(st, f)) for f in STATS_FIELDS[1:-1]] + [int(st.clamped)]


def cmd_run(cfg, jobs=1, out=None):
    """Simulate homodyne and double-homodyne records and compare their moments."""
    out = out or sys.stdout
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rho = cfg.state.build(cfg.fock_dim)
    tables = _tables(cfg, jobs)
    x_grid = default_x_grid(rho.dim, cfg.grid.x_points)
    thetas = equidistant_phases(cfg.n_theta)
    a = cfg.allocation
    schedule = allocate_events(cfg.total_events, rho, thetas, a.strategy,
                               a.min_events, a.max_events, x_grid=x_grid)
    hd = sample_homodyne(rho, schedule, cfg.seed, x_grid=x_grid)
    # independent stream for the double-homodyne record
    q_seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(cfg.n_theta + 1,))
                 .generate_state(1, np.uint64)[0])
    dh = sample_double_homodyne(rho, cfg.total_events, q_seed)

    est_h = sample_moments(hd, tables, cfg.k_max)
    est_q = q_moments(dh, cfg.k_max)
    est_x = _exact_estimates(rho, cfg.k_max)
    stats = {"homodyne": phase_stats(est_h[0]), "double_homodyne": phase_stats(est_q[0]),
             "exact": phase_stats(est_x[0])}

    for name, est in (("homodyne", est_h), ("double_homodyne", est_q), ("exact", est_x)):
        write_moments_csv(est, outdir / f"moments_{name}.csv")
        write_moments_json(est, outdir / f"moments_{name}.json", stats[name])
    _write_csv(outdir / "phase_stats.csv", STATS_FIELDS,
               (_stats_row(n, s) for n, s in stats.items()))
    _write_json(outdir / "phase_stats.json", {n: s.record() for n, s in stats.items()})

    bars = []
    for name, est in (("homodyne", est_h), ("double_homodyne", est_q), ("exact", est_x)):
        full = mirror(est)
        zero = MomentEstimate(0, 1.0 + 0j, 0.0, 0.0, full[0].n_events_used)
        full = full[: len(est)] + [zero] + full[len(est):]
        for e in full:
            bars.append([name, e.k, _fmt(e.value.real), _fmt(e.value.imag),
                         _fmt(e.stderr_re), _fmt(e.stderr_im)])
    _write_csv(outdir / "moment_bars.csv", BAR_FIELDS, bars)

    spec = cfg.state.to_dict()
    save_homodyne(hd, outdir / "dataset_homodyne.json", spec)
    save_double_homodyne(dh, outdir / "dataset_double_homodyne.json", spec)
    _write_json(outdir / "metadata.json", _metadata(cfg, "run", {
        "allocation": {"strategy": schedule.strategy,
                       "counts": [int(c) for c in schedule.counts],
                       "thetas": [float(t) for t in schedule.thetas]},
        "double_homodyne": {"n_proposed": dh.n_proposed, "acceptance_rate": dh.acceptance_rate,
                            "envelope_violations": dh.envelope_violations},
        "mean_photon_number": mean_photon(rho),
    }))

    for name, st in stats.items():
        print(f"{name:16s} arg Psi_1 = {st.mean_phase:+.5f} +- {st.mean_phase_err:.5f}  "
              f"delta_phi = {st.delta_phi:.5f} +- {st.delta_phi_err:.5f}", file=out)
    return {"homodyne": est_h, "double_homodyne": est_q, "exact": est_x, "stats": stats,
            "schedule": schedule}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="phasemoments",
                                description="Exponential phase moments from simulated homodyne data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--cache", help="kernel cache directory")
    common.add_argument("--kmax", type=int, help="highest moment order")
    common.add_argument("--jobs", type=int, default=1, help="threads for kernel table builds")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("kernels", parents=[common], help="build kernel tables and plot data")
    sub.add_parser("run", parents=[common], help="simulate, estimate and compare moments")
    sub.add_parser("exact", parents=[common], help="exact moments and phase distribution")
    return p


def load_config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, output_dir=args.out, cache_dir=args.cache,
                              k_max=args.kmax)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"phasemoments: configuration error: {exc}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("phasemoments: configuration error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.command == "kernels":
            cmd_kernels(cfg, jobs=args.jobs)
        elif args.command == "exact":
            cmd_exact(cfg)
        else:
            cmd_run(cfg, jobs=args.jobs)
    except (TruncationError, NumericalError, CacheError, ValueError, OSError) as exc:
        print(f"phasemoments: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
