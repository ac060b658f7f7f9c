"""Command-line entry point: ``transq analyze|simulate|sweep|validate``.

Every command reads one config (a path, or the name of a bundled config) and
writes CSV files to ``--out``. Numbers are rounded to 12 significant digits
and printed in shortest round-trip form, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import bundled_configs, is_sweep, load_text, parse_scenario, parse_sweep
from .errors import CapacityError, ConfigurationError, TransqError
from .metrics import (cumulative_violation_time, series_grid, time_avg_violation, violation_at,
                      violation_series)
from .oracle import OracleConfig, oracle_path
from .propagate import TruncationPolicy, propagate_switch_points, transient_at
from .randomized import expected_subinterval_violation, randomized_switch_profile
from .schedule import Phase
from .simulator import THREADS_ENV, SimConfig, estimate_randomized, estimate_violation

log = logging.getLogger(__name__)

DEFAULT_RUNS = 100_000
DEFAULT_SEED = 0
KERNEL_GATE = 1e-8
ORACLE_STATES = 101
Z_GATE = 3.0
PASS_FRACTION = 0.95

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


def fmt(x):
    """12 significant digits, shortest round-trip spelling."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(f"{float(x):.12g}")
    return repr(x + 0.0)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _policy(cfg, eps_mass=None):
    return TruncationPolicy(eps_mass=eps_mass or cfg.eps_mass, eps_tail=cfg.eps_tail)


def _with_overrides(cfg, args):
    changes = {}
    if args.grid_density is not None:
        changes["grid_density"] = args.grid_density
    if args.eps_mass is not None:
        changes["eps_mass"] = args.eps_mass
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _distribution_rows(profile):
    rows = []
    K = len(profile.i_dists)
    for k in range(1, K + 2):
        entries = [("A", profile.a(k))] + ([("I", profile.i(k))] if k <= K else [])
        for phase, dist in entries:
            rows.extend((k, phase, n, p) for n, p in enumerate(dist.probs))
    return rows


def _write_distributions(out, profile):
    write_csv(out / "distributions.csv", ["k", "phase", "n", "p"], _distribution_rows(profile))


def run_analyze(cfg, out):
    """Write ``series.csv`` and ``distributions.csv`` for one scenario."""
    out.mkdir(parents=True, exist_ok=True)
    policy = _policy(cfg)
    p0 = cfg.initial_distribution()
    if cfg.randomized:
        rs = cfg.randomized_schedule()
        profile = randomized_switch_profile(rs, p0, policy)
        rows = []
        num = den = 0.0
        for sub, t in zip(rs.subintervals, rs.expected_switch_points):
            v = expected_subinterval_violation(rs, profile, sub.k, sub.phase, cfg.q_th, cfg.eps_quad)
            m = sub.duration.mean()
            num, den = num + v * m, den + m
            rows.append((sub.k, "A" if sub.phase is Phase.ACTIVE else "I", t, v,
                         num / den if den > 0 else v))
        write_csv(out / "subintervals.csv", ["k", "phase", "t_expected", "V", "V_bar"], rows)
        _write_distributions(out, profile)
        return profile
    schedule = cfg.schedule()
    profile = propagate_switch_points(schedule, p0, policy)
    series = violation_series(schedule, profile, cfg.q_th, cfg.grid_density, cfg.eps_quad)
    write_csv(out / "series.csv", ["t", "V", "V_bar"], zip(series.grid, series.v, series.v_bar))
    _write_distributions(out, profile)
    return series


def run_simulate(cfg, out, runs=DEFAULT_RUNS, seed=DEFAULT_SEED):
    out.mkdir(parents=True, exist_ok=True)
    p0 = cfg.initial_distribution()
    if cfg.randomized:
        rs = cfg.randomized_schedule()
        est = estimate_randomized(rs, SimConfig(runs, seed, (), cfg.q_th, initial=p0))
        rows = [(sub.k, "A" if sub.phase is Phase.ACTIVE else "I", r, se)
                for sub, r, se in zip(rs.subintervals, est.sub_ratio, est.sub_ratio_stderr)]
        write_csv(out / "subintervals.csv", ["k", "phase", "V", "v_stderr"], rows)
        hist_rows = []
        for k, h in enumerate(est.a_hist, start=1):
            hist_rows.extend((k, "A", n, c / runs) for n, c in enumerate(h))
            if k <= len(est.i_hist):
                hist_rows.extend((k, "I", n, c / runs) for n, c in enumerate(est.i_hist[k - 1]))
        write_csv(out / "distributions.csv", ["k", "phase", "n", "p"], hist_rows)
        return est
    schedule = cfg.schedule()
    grid = series_grid(schedule, cfg.grid_density)
    est = estimate_violation(schedule, SimConfig(runs, seed, grid, cfg.q_th, initial=p0))
    write_csv(out / "series.csv", ["t", "V", "V_bar", "v_stderr", "vbar_stderr"],
              zip(grid, est.v_hat, est.v_bar_series, est.stderr, est.v_bar_series_stderr))
    return est


def run_sweep(spec, out):
    """Long-format ``sweep.csv``; rows in lexicographic axis order."""
    out.mkdir(parents=True, exist_ok=True)
    k_max = max(spec.intervals)
    results = {}
    for lam in spec.lambda_on:
        for t_on in spec.t_on:
            cfg = spec.scenario(lam, t_on, spec.q_th[0], k_max)
            schedule = cfg.schedule()
            profile = propagate_switch_points(schedule, cfg.initial_distribution(), _policy(cfg))
            starts = np.array([schedule.interval_start(k) for k in range(1, k_max + 2)])
            for q in spec.q_th:
                above = cumulative_violation_time(schedule, profile, q, cfg.eps_quad)
                for K in spec.intervals:
                    results[lam, t_on, q, K] = min(max(above[K] / starts[K], 0.0), 1.0)
    rows = [(lam, t_on, q, K, results[lam, t_on, q, K]) for lam, t_on, q, K in spec.cells()]
    write_csv(out / "sweep.csv", ["lambda_on", "t_on", "q_th", "intervals", "v_bar"], rows)
    return rows


def run_validate(cfg, out, runs=DEFAULT_RUNS, seed=DEFAULT_SEED, stream=sys.stdout):
    """Kernel-vs-oracle and analytic-vs-simulation report; returns True when all gates pass."""
    if cfg.randomized:
        raise ConfigurationError("validate supports fixed-length schedules only")
    out.mkdir(parents=True, exist_ok=True)
    schedule = cfg.schedule()
    p0 = cfg.initial_distribution()
    profile = propagate_switch_points(schedule, p0, _policy(cfg))
    grid = series_grid(schedule, cfg.grid_density)

    oracle = oracle_path(schedule, p0, grid, OracleConfig())
    kernel_err = 0.0
    for t, ref in zip(grid, oracle):
        p = transient_at(schedule, profile, t).probs
        n = min(ORACLE_STATES, ref.dim)
        mine = np.zeros(n)
        mine[: min(n, p.size)] = p[:n]
        kernel_err = max(kernel_err, float(np.abs(mine - ref.probs[:n]).max()))

    v = violation_at(schedule, profile, cfg.q_th, grid)
    est = estimate_violation(schedule, SimConfig(runs, seed, grid, cfg.q_th, initial=p0))
    se = np.maximum(est.stderr, 1.0 / runs)
    z = (v - est.v_hat) / se
    passed = int(np.sum(np.abs(z) <= Z_GATE))
    write_csv(out / "validate.csv", ["t", "V", "v_hat", "v_stderr", "z"],
              zip(grid, v, est.v_hat, est.stderr, z))

    kernel_ok = kernel_err <= KERNEL_GATE
    mc_ok = passed >= math.ceil(PASS_FRACTION * grid.size)
    print(f"kernel vs oracle: max abs error {kernel_err:.3e} (gate {KERNEL_GATE:g}) "
          f"{'PASS' if kernel_ok else 'FAIL'}", file=stream)
    print(f"analytic vs simulation: {passed}/{grid.size} points within {Z_GATE:g} sigma "
          f"{'PASS' if mc_ok else 'FAIL'}", file=stream)
    v_bar = time_avg_violation(schedule, profile, cfg.q_th, schedule.horizon, cfg.eps_quad)
    print(f"V_bar at horizon: analytic {v_bar:.6f}, simulated {est.v_bar_hat:.6f} "
          f"+- {est.v_bar_stderr:.1e}", file=stream)
    return kernel_ok and mc_ok


def build_parser():
    parser = argparse.ArgumentParser(
        prog="transq",
        description="Transient queue analysis under switching arrival and service rates.",
        epilog=f"Bundled configs: {', '.join(bundled_configs())}. "
               f"Simulation threads are read from ${THREADS_ENV} (default 1).",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("--config", required=True, help="config path or bundled config name")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--grid-density", type=int, default=None,
                       help="grid points per subinterval (default: config value)")
        p.add_argument("--eps-mass", type=float, default=None,
                       help="truncation mass budget (default: config value)")
        if sim:
            p.add_argument("--runs", type=int, default=DEFAULT_RUNS, help="simulated paths")
            p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed")

    common(sub.add_parser("analyze", help="exact V(t), V_bar(t) and switch-point laws",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    common(sub.add_parser("simulate", help="Monte-Carlo estimates of the same quantities",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter), sim=True)
    common(sub.add_parser("sweep", help="V_bar over a lambda_on x t_on grid",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    common(sub.add_parser("validate", help="cross-check against the oracle and simulation",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter), sim=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        text, source = load_text(args.config)
        if args.command == "sweep":
            if not is_sweep(text):
                raise ConfigurationError(f"{source}: sweep needs a [sweep] section")
            spec = parse_sweep(text, source)
            if args.eps_mass is not None:
                spec = dataclasses.replace(spec, eps_mass=args.eps_mass)
            run_sweep(spec, args.out)
            return EXIT_OK
        cfg = _with_overrides(parse_scenario(text, source), args)
        if args.command == "analyze":
            run_analyze(cfg, args.out)
        elif args.command == "simulate":
            run_simulate(cfg, args.out, args.runs, args.seed)
        else:
            return EXIT_OK if run_validate(cfg, args.out, args.runs, args.seed) else EXIT_GATE
    except CapacityError as exc:
        print(f"transq: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigurationError, TransqError) as exc:
        print(f"transq: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
