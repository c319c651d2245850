"""Command-line driver: ``lrpath {solve,convergence,compare-mc,scaling,hermite-study}``.

Every subcommand writes a CSV table (stdout unless ``--output`` or the
config's ``[output] csv`` names a file). Exit status is 0 on success, 2 for
configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time

import numpy as np

from . import analysis
from .config import ConfigError, RunConfig, load_config, override
from .expr import ExprError
from .mesh import CapacityError, build_time_grid
from .monte_carlo import mc_estimate
from .solver import CrossNotConvergedError, DataError, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

CONVERGENCE_COLUMNS = ["T", "n", "dt", "p2", "eps2", "p4", "eps4", "rank", "wall_seconds"]
COMPARE_MC_COLUMNS = ["n", "dt", "u_mc", "u_lr", "u_exact", "eps_mc", "eps_lr",
                      "mc_seconds", "lr_seconds"]
SCALING_COLUMNS = ["n", "M", "lowrank_seconds", "lowrank_rank", "dense_seconds", "status"]
SKIPPED = "skipped-capacity"


def fmt(value) -> str:
    """Deterministic CSV cell: empty for ``None``, 10 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def _timing(cfg: RunConfig, seconds: float):
    return seconds if cfg.timings else None


def _solve_kwargs(cfg: RunConfig) -> dict:
    return dict(a_x=cfg.a_x, N_x=cfg.N_x, time_rule=cfg.time_rule,
                spatial_rule=cfg.spatial_rule, eps_c=cfg.eps_c, r0=cfg.r0, r_max=cfg.r_max,
                dense_switch_k=cfg.dense_switch_k, seed=cfg.seed)


def _solve(problem, n, cfg: RunConfig):
    kw = _solve_kwargs(cfg)
    a_x, N_x = kw.pop("a_x"), kw.pop("N_x")
    return run(problem, n, a_x, N_x, **kw)


def _solve_dense(problem, n, cfg: RunConfig):
    return run(problem, n, cfg.a_x, cfg.N_x, method="dense", time_rule=cfg.time_rule,
               spatial_rule=cfg.spatial_rule, memory_budget=cfg.memory_budget)


def run_solve(cfg: RunConfig) -> list:
    problem = cfg.build_problem()
    if cfg.x0 is None:
        if len(cfg.n) != 1:
            raise ConfigError("a full-profile solve takes a single n; set x0 for a sweep",
                              key="n")
        report = _solve(problem, cfg.n[0], cfg)
        return [["x", "u"]] + [[fmt(float(x)), fmt(float(u))]
                               for x, u in zip(report.x, report.u_final)]
    rows = [["n", "dt", "x0", "u", "rank", "wall_seconds"]]
    for n in cfg.n:
        report = _solve(problem, n, cfg)
        rows.append([fmt(n), fmt(problem.T / n), fmt(cfg.x0), fmt(report.at(cfg.x0)),
                     fmt(report.max_rank), fmt(_timing(cfg, report.wall_seconds))])
    return rows


def run_convergence(cfg: RunConfig):
    """Sweep ``n`` and return ``(ConvergenceTable, csv rows)``."""
    cfg.require_doubling()
    problem = cfg.build_problem()
    sols, ranks, times = [], [], []
    for n in cfg.n:
        report = _solve(problem, n, cfg)
        sols.append(report.u_final)
        ranks.append(report.max_rank)
        times.append(report.wall_seconds)
    table = analysis.convergence_table(problem.T, cfg.n, sols, ranks,
                                       times if cfg.timings else None)
    rows = [CONVERGENCE_COLUMNS]
    for r in table.rows:
        rows.append([fmt(table.T), fmt(r.n), fmt(r.dt), fmt(r.p2), fmt(r.eps2), fmt(r.p4),
                     fmt(r.eps4), fmt(r.rank), fmt(r.wall_seconds)])
    return table, rows


def run_compare_mc(cfg: RunConfig) -> list:
    """Monte Carlo against the low-rank solve at ``x0``.

    ``eps_mc`` and ``eps_lr`` are relative errors against the exact value when
    the problem has one; otherwise ``eps_mc`` is taken against the low-rank
    value and ``eps_lr`` stays empty.
    """
    if cfg.mc is None:
        raise ConfigError("compare-mc needs an [mc] section or --K", key="mc")
    problem = cfg.build_problem()
    mc_cfg = cfg.mc.to_mc_config()
    x0 = mc_cfg.x0
    u_exact = None if problem.exact is None else float(problem.exact(x0, problem.T))
    rows = [COMPARE_MC_COLUMNS]
    for n in cfg.n:
        tg = build_time_grid(problem.T, n, cfg.time_rule)
        t0 = time.perf_counter()
        u_mc, _ = mc_estimate(problem, tg, mc_cfg)
        mc_seconds = time.perf_counter() - t0
        report = _solve(problem, n, cfg)
        u_lr = report.at(x0)
        ref = u_exact if u_exact is not None else u_lr
        eps_mc = abs(u_mc - ref) / abs(ref)
        eps_lr = None if u_exact is None else abs(u_lr - u_exact) / abs(u_exact)
        rows.append([fmt(n), fmt(problem.T / n), fmt(u_mc), fmt(u_lr), fmt(u_exact),
                     fmt(eps_mc), fmt(eps_lr), fmt(_timing(cfg, mc_seconds)),
                     fmt(_timing(cfg, report.wall_seconds))])
    return rows


def run_scaling(cfg: RunConfig) -> list:
    """Low-rank and (with ``dense``) dense wall times per ``n``."""
    problem = cfg.build_problem()
    rows = [SCALING_COLUMNS if cfg.dense else SCALING_COLUMNS[:4]]
    for n in cfg.n:
        lr = _solve(problem, n, cfg)
        row = [fmt(n), fmt(2 * cfg.N_x), fmt(_timing(cfg, lr.wall_seconds)), fmt(lr.max_rank)]
        if cfg.dense:
            try:
                dense = _solve_dense(problem, n, cfg)
                row += [fmt(_timing(cfg, dense.wall_seconds)), "ok"]
            except CapacityError:
                row += ["", SKIPPED]
        rows.append(row)
    return rows


def run_hermite_study(l_max: int, nrows: int, ncols: int, eps: float, n_sv: int = 9) -> list:
    study = analysis.hermite_rank_study(l_max=l_max, nrows=nrows, ncols=ncols, eps=eps,
                                        n_sv=n_sv)
    rows = [["l", "rank", "s1"] + [f"s{i}/s1" for i in range(2, n_sv + 1)]]
    for r in study:
        rel = list(r.relative[1:]) + [0.0] * (n_sv - r.sv.size)
        rows.append([fmt(r.l), fmt(r.rank), fmt(float(r.sv[0]))] + [fmt(float(v)) for v in rel])
    return rows


def write_csv(rows, path=None, stream=None) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)
    return text


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--output", "-o", help="CSV output path (default: stdout)")
    common.add_argument("--problem", help="harmonic, cauchy, impurity or custom")
    common.add_argument("--V", dest="V", help="potential expression in x and t (custom)")
    common.add_argument("--f", dest="f", help="initial density expression in x (custom)")
    common.add_argument("--sigma", type=float)
    common.add_argument("--T", dest="T", type=float)
    common.add_argument("--n", type=_int_list, help="step count or comma-separated sweep")
    common.add_argument("--a-x", dest="a_x", type=float)
    common.add_argument("--N-x", dest="N_x", type=int)
    common.add_argument("--time-rule", dest="time_rule")
    common.add_argument("--eps-c", dest="eps_c", type=float)
    common.add_argument("--r0", type=int)
    common.add_argument("--r-max", dest="r_max", type=int)
    common.add_argument("--dense-switch-k", dest="dense_switch_k", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--x0", type=float)
    common.add_argument("--no-timings", dest="timings", action="store_false", default=None,
                        help="leave timing columns empty for byte-reproducible output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lrpath", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve and print u(x, T)")
    sub.add_parser("convergence", parents=[common], help="Runge/Richardson table for an n-sweep")
    mc = sub.add_parser("compare-mc", parents=[common], help="Monte Carlo vs low-rank at x0")
    mc.add_argument("--K", type=int)
    mc.add_argument("--mc-seed", dest="mc_seed", type=int)
    mc.add_argument("--antithetic", action="store_true", default=None)
    sc = sub.add_parser("scaling", parents=[common], help="low-rank vs dense wall time")
    sc.add_argument("--dense", action="store_true", default=None, help="also time the dense solver")
    sc.add_argument("--memory-budget", dest="memory_budget", type=int)
    hs = sub.add_parser("hermite-study", help="epsilon-ranks of reshaped Hermite functions")
    hs.add_argument("--l-max", dest="l_max", type=int, default=32)
    hs.add_argument("--nrows", type=int, default=8000)
    hs.add_argument("--ncols", type=int, default=1024)
    hs.add_argument("--eps", type=float, default=1e-8)
    hs.add_argument("--output", "-o")
    return p


_CONFIG_FIELDS = ("problem", "V", "f", "sigma", "T", "n", "a_x", "N_x", "time_rule", "eps_c",
                  "r0", "r_max", "dense_switch_k", "seed", "x0", "timings", "output", "K",
                  "mc_seed", "antithetic", "dense", "memory_budget")


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {k: getattr(args, k) for k in _CONFIG_FIELDS if hasattr(args, k)}
    if changes.get("x0") is not None and args.command == "compare-mc":
        changes["mc_x0"] = changes.pop("x0")
    return override(cfg, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "hermite-study":
            rows = run_hermite_study(args.l_max, args.nrows, args.ncols, args.eps)
            write_csv(rows, args.output)
            return EXIT_OK
        cfg = config_from_args(args)
        if args.command == "solve":
            rows = run_solve(cfg)
        elif args.command == "convergence":
            rows = run_convergence(cfg)[1]
        elif args.command == "compare-mc":
            rows = run_compare_mc(cfg)
        else:
            rows = run_scaling(cfg)
        write_csv(rows, cfg.output)
    except (CrossNotConvergedError, DataError, ArithmeticError, CapacityError) as err:
        print(f"lrpath: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ExprError, ValueError) as err:
        print(f"lrpath: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
