"""Command-line entry point: ``charwave <subcommand> [options]``.

Exit codes: 0 all invariants hold, 1 an invariant failed (offending CSV rows
are flagged), 2 configuration error, 3 numerical abort (NaN/Inf).
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import cauchy as _cauchy
from . import estimates as E
from . import nullcone as _cone
from . import nullplane as _plane
from . import oracles as O
from .config import KEY_HELP, ConfigError, ExperimentConfig, parse_config
from .grid import NonFiniteError

log = logging.getLogger("charwave")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SUBCOMMANDS = {
    "run-cauchy": "evolve the periodic Cauchy problem and check norm conservation",
    "run-nullplane": "evolve the null-plane characteristic problem and check its estimate",
    "run-nullcone": "evolve the null-cone characteristic problem and check its estimate",
    "verify-estimates": "property sweep of the energy estimate over random data",
    "convergence": "refinement study of balance residuals and oracle errors",
    "derivatives": "evolve a derivative system and check its estimate",
}
FIXED_PROBLEM = {"run-cauchy": "cauchy", "run-nullplane": "nullplane", "run-nullcone": "nullcone"}
REPORT_COLUMNS = E.EstimateReport.CSV_COLUMNS + ("flag",)
CONVERGENCE_COLUMNS = ("resolution", "residual", "ratio", "order")


def fmt(x):
    """Fixed formatting: integers verbatim, floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# -- data ---------------------------------------------------------------------------------


def make_oracle(cfg: ExperimentConfig):
    if cfg.data == "plane_transverse":
        return O.oracle_plane_transverse(cfg.k, cfg.L_x or 2 * math.pi)
    if cfg.data == "plane_wave":
        return O.oracle_plane_wave(2.0, 1.0, 1.0)
    if cfg.data == "cauchy_plane_wave":
        L = (cfg.L_x or 1.0, cfg.L_x or 1.0, cfg.L_y or 1.0)
        return O.oracle_cauchy_plane_wave((1, 1, 0), L)
    if cfg.data in O.ORACLES or cfg.data.startswith("cone_"):
        return getattr(O, "oracle_" + cfg.data)()
    return None


def make_data(cfg: ExperimentConfig, grid, seed):
    problem = cfg.problem
    if cfg.data == "random":
        return E.random_data(problem, grid, seed)
    if cfg.data == "zero":
        if problem == "cauchy":
            return _cauchy.CauchyState.zeros(grid)
        if problem.startswith("nullplane"):
            return _plane.PlaneCharData.zeros(grid)
        return _cone.ConeCharData.zeros(grid)
    orc = make_oracle(cfg)
    if problem == "cauchy":
        return _cauchy.cauchy_from_psi(
            grid, lambda z, x, y: orc("psi", 0.0, z, x, y), lambda z, x, y: orc("U", 0.0, z, x, y),
            [lambda z, x, y, n=n: orc(n, 0.0, z, x, y) for n in "PQR"])
    table = {"nullplane": O.plane_data, "nullplane_deriv": O.plane_deriv_data,
             "nullcone": O.cone_data, "nullcone_deriv": O.cone_deriv_data}
    return table[problem](orc, grid)


def run_grid(cfg: ExperimentConfig, N=None):
    """Grid for one run; ``nullcone_deriv`` with ``cT_target`` picks ``T = cT_target / c``."""
    grid = cfg.grid(N)
    if cfg.problem == "nullcone_deriv" and cfg.cT_target is not None:
        c = _cone.source_constant(grid)
        grid = cfg.grid(N, T=cfg.cT_target / c)
    return grid


# -- checks --------------------------------------------------------------------------------


def check_run(cfg, rep, run):
    """List of violated invariants for one run (empty when all hold)."""
    bad = []
    tol = E.tolerance(rep.grid, rep.rhs_bound, rep.problem, cfg.tolerance_constants())
    if rep.margin < -tol:
        bad.append(f"margin {rep.margin:.6g} < -tol {-tol:.6g}")
    if getattr(run, "source_max", None) is not None and rep.problem == "nullcone":
        if run.source_max > 0:
            bad.append(f"volume integrand positive ({run.source_max:.3g})")
    if rep.problem == "cauchy" and run.constraints is not None:
        c0, c1 = run.constraints[0], run.constraints[-1]
        if np.any(c1 > 10 * c0 + 1e-300) and np.any(c1 > 1e-12):
            bad.append("constraint residual grew by more than 10x")
    return bad


def single_runs(cfg, n):
    rows, failures = [], 0
    for i in range(n):
        seed = cfg.seed + i
        grid = run_grid(cfg)
        data = make_data(cfg, grid, seed)
        run = E.run_problem(cfg.problem, data)
        rep = (E.cauchy_report(run, seed) if cfg.problem == "cauchy"
               else E.assemble_report(run, seed=seed, problem=cfg.problem))
        bad = check_run(cfg, rep, run)
        extra = ""
        orc = make_oracle(cfg)
        if orc is not None:
            err = (E.cauchy_error(run.final, orc) if cfg.problem == "cauchy"
                   else max(E.sigma_T_errors(run, orc).values()))
            extra = f" max_error={err:.6g}"
        if bad:
            failures += 1
            log.warning("seed %d: %s", seed, "; ".join(bad))
        log.info("%s seed=%d lhs=%.6g rhs=%.6g margin=%.6g balance=%.3g%s", rep.problem, seed,
                 rep.lhs_norm, rep.rhs_bound, rep.margin, rep.balance_residual, extra)
        rows.append(rep.row() + ["FAIL" if bad else "ok"])
    return rows, failures


def cmd_convergence(cfg, out):
    res = E.check_doubling(cfg.resolutions)
    orc = make_oracle(cfg)
    N0 = cfg.N

    def make_grid(N):
        c = ExperimentConfig(**{**cfg.__dict__, "N": N0})
        return run_grid(c, N)

    bal, err, reports = E.refinement_study(make_grid, lambda g: make_data(cfg, g, cfg.seed),
                                           cfg.problem, res, orc)
    main = err if err is not None else bal
    write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, main.rows())
    write_csv(out / "convergence_balance.csv", CONVERGENCE_COLUMNS, bal.rows())
    p = cfg.scheme_order
    rows, failures = [], 0
    for rep in reports:
        ok = E.margin_ok(rep, cfg.tolerance_constants())
        failures += not ok
        rows.append(rep.row() + ["ok" if ok else "FAIL"])
    write_csv(out / "report.csv", REPORT_COLUMNS, rows)
    for r, v, ratio, order in main.rows():
        log.info("%s N=%d %s=%.6g ratio=%.4g order=%.3g", cfg.problem, r, main.quantity, v,
                 ratio, order)
    last = main.ratios[-1]
    in_band = 0.7 * 2**p <= last <= 1.3 * 2**p
    at_floor = max(main.values) < 1e-11
    if not (in_band or at_floor):
        log.warning("final ratio %.4g outside [%.3g, %.3g]", last, 0.7 * 2**p, 1.3 * 2**p)
        failures += 1
    return failures


def run(subcommand, cfg: ExperimentConfig) -> int:
    """Execute a subcommand with a validated config; returns the exit code."""
    out = Path(cfg.output)
    if subcommand == "convergence":
        failures = cmd_convergence(cfg, out)
    else:
        n = cfg.n_samples
        rows, failures = single_runs(cfg, n)
        write_csv(out / "report.csv", REPORT_COLUMNS, rows)
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


# -- argument handling -------------------------------------------------------------------


def _epilog():
    lines = ["config keys (flat key = value; --set overrides):"]
    lines += [f"  {k:24s} {v}" for k, v in KEY_HELP.items()]
    lines += ["", "exit codes: 0 pass, 1 invariant failure, 2 config error, 3 numerical abort"]
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="charwave", description="Energy-estimate experiments for the first-order wave equation.",
        epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=_epilog(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       help="override one config key (repeatable)")
        p.add_argument("--output", metavar="DIR", help="output directory (default out)")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _base_for(subcommand):
    base = ExperimentConfig()
    if subcommand in FIXED_PROBLEM:
        base.problem = FIXED_PROBLEM[subcommand]
    if subcommand == "verify-estimates":
        base.n_samples = 100
    if subcommand == "convergence":
        base.data = "oracle"
    if subcommand == "derivatives":
        base.problem = "nullplane_deriv"
    return base


def configure(subcommand, args) -> ExperimentConfig:
    overrides = list(args.set)
    if args.output is not None:
        overrides.append(f"output={args.output}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = parse_config(args.config, overrides, base=_base_for(subcommand))
    if subcommand in FIXED_PROBLEM and cfg.problem != FIXED_PROBLEM[subcommand]:
        raise ConfigError(f"problem: {subcommand} runs {FIXED_PROBLEM[subcommand]!r}, "
                          f"got {cfg.problem!r}")
    if subcommand == "derivatives":
        if not cfg.problem.endswith("_deriv"):
            if cfg.problem == "cauchy":
                raise ConfigError("problem: derivatives runs nullplane or nullcone systems")
            cfg.problem += "_deriv"
        if cfg.problem == "nullcone_deriv" and cfg.cT_target is None:
            cfg.cT_target = 0.5
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        cfg = configure(args.subcommand, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(args.subcommand, cfg)
    except NonFiniteError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
