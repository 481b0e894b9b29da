"""Command-line front end: ``lcfshape {solve,sample,optimize,diagnose,mesh-export}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ProblemConfig, load_config
from .diagnostics import random_admissible_thetas, run_suite, write_rows
from .elasticity import solve_elasticity, stress
from .exceptions import NumericalError, ValidationError
from .geometry import make_shape
from .mesh import write_mesh_json, write_mesh_text
from .optimize import optimize_shape
from .reliability import (
    failure_cdf,
    hazard_rate,
    ks_distance,
    objective_J,
    sample_crack_process,
    sample_first_failures,
)
from .thermal import solve_heat

log = logging.getLogger("lcfshape")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
THREADS_ENV = "LCFSHAPE_THREADS"


def _fmt(v) -> str:
    v = float(v)
    return "inf" if v == math.inf else f"{v:.10g}"


def resolve_threads(flag, cfg: ProblemConfig) -> int:
    """Thread count: ``--threads`` beats ``LCFSHAPE_THREADS`` beats the config file."""
    if flag is not None:
        n = flag
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {os.environ[THREADS_ENV]!r}") from None
    else:
        n = cfg.block("numerics")["threads"]
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _outdir(args, cfg: ProblemConfig) -> Path:
    out = Path(args.out or cfg.block("output")["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _formats(cfg):
    return set(cfg.block("output")["formats"])


def _write_state(out: Path, cfg: ProblemConfig, prefix: str, shape, T, u, report):
    fm = _formats(cfg)
    write_mesh_text(shape.mesh, out / f"{prefix}mesh.txt")
    if "json" in fm:
        write_mesh_json(shape.mesh, out / f"{prefix}mesh.json")
    s = stress(shape, u, T, cfg.material)
    for name, obj in (("temperature", T), ("displacement", u), ("stress", s)):
        if "csv" in fm:
            obj.to_csv(out / f"{prefix}{name}.csv")
        if "json" in fm:
            obj.to_json(out / f"{prefix}{name}.json")
    report.to_json(out / f"{prefix}report.json", cfg.times)
    times = cfg.times
    with open(out / f"{prefix}cdf.csv", "w") as fh:
        fh.write("t,F,hazard\n")
        for t in times:
            fh.write(f"{t!r},{float(failure_cdf(t, report))!r},{float(hazard_rate(t, report))!r}\n")


def _gnuplot(out: Path, cfg: ProblemConfig, name: str, body: str):
    if cfg.block("output")["gnuplot"]:
        (out / name).write_text(body)


def _solve_state(cfg: ProblemConfig, theta):
    shape = make_shape(cfg.design, cfg.template.with_coeffs(theta), cfg.baseline_mesh)
    solver = cfg.block("numerics")["solver"]
    T = solve_heat(shape, cfg.robin, solver=solver)
    u = solve_elasticity(shape, cfg.loads, T, cfg.material, solver=solver)
    report = objective_J(shape, u, T, cfg.material, include_dirichlet=cfg.block("reliability")["include_dirichlet"])
    return shape, T, u, report


def cmd_solve(args, cfg: ProblemConfig) -> int:
    out = _outdir(args, cfg)
    shape, T, u, report = _solve_state(cfg, cfg.theta)
    _write_state(out, cfg, "", shape, T, u, report)
    _gnuplot(out, cfg, "cdf.gp", _CDF_PLOT.format(data="cdf.csv"))
    print(f"J = {_fmt(report.J)}")
    print(f"N_scale = {_fmt(report.N_scale)}")
    print(f"T range = [{_fmt(T.values.min())}, {_fmt(T.values.max())}]  max|u| = {_fmt(u.max_norm())}")
    print(f"{'t':>14} {'F(t)':>14} {'h(t)':>14}")
    for t in cfg.times:
        print(f"{_fmt(t):>14} {_fmt(failure_cdf(t, report)):>14} {_fmt(hazard_rate(t, report)):>14}")
    return EXIT_OK


def cmd_sample(args, cfg: ProblemConfig) -> int:
    out = _outdir(args, cfg)
    block = cfg.block("sample")
    seed = args.seed if args.seed is not None else block["seed"]
    reps = args.replications if args.replications is not None else block["replications"]
    if reps < 0:
        raise ConfigError("replications must be >= 0")
    _, _, _, report = _solve_state(cfg, cfg.theta)
    t_max = args.t_max if args.t_max is not None else block["t_max"]
    if t_max is None:
        t_max = report.N_scale if math.isfinite(report.N_scale) else 1.0
    if not t_max > 0:
        raise ConfigError("t_max must be positive")
    taus, counts = sample_first_failures(report, t_max, reps, seed)
    with open(out / "tau.csv", "w") as fh:
        fh.write("replication,tau,censored,events\n")
        for i, (t, k) in enumerate(zip(taus, counts)):
            fh.write(f"{i},{_fmt(t) if math.isinf(t) else repr(float(t))},{int(math.isinf(t))},{int(k)}\n")
    sample_crack_process(report, t_max, seed).to_csv(out / "events.csv")
    ks = ks_distance(taus, report, t_max)
    expected = t_max**report.m * report.J
    summary = {
        "t_max": t_max,
        "replications": reps,
        "seed": seed,
        "J": report.J,
        "expected_events": expected,
        "mean_events": float(counts.mean()) if reps else None,
        "ks_distance": ks,
    }
    (out / "sample_summary.json").write_text(json.dumps(summary, indent=1))
    _gnuplot(out, cfg, "tau.gp", _TAU_PLOT)
    print(f"t_max = {_fmt(t_max)}  replications = {reps}  seed = {seed}")
    print(f"{'t':>14} {'empirical':>12} {'analytic':>12}")
    for t in np.linspace(0, t_max, 11)[1:]:
        emp = float(np.mean(taus <= t)) if reps else float("nan")
        print(f"{_fmt(t):>14} {emp:>12.6f} {float(failure_cdf(t, report)):>12.6f}")
    print(f"event count mean = {summary['mean_events']}  expected = {_fmt(expected)}")
    print(f"KS distance = {ks:.6g}")
    return EXIT_OK


def cmd_optimize(args, cfg: ProblemConfig) -> int:
    from dataclasses import replace

    out = _outdir(args, cfg)
    opt = cfg.optimizer if args.seed is None else replace(cfg.optimizer, seed=args.seed)
    checkpoint = out / f"checkpoint-{cfg.digest[:12]}-seed{opt.seed}.jsonl"
    trace = optimize_shape(opt, cfg.problem(), checkpoint=checkpoint)
    fm = _formats(cfg)
    if "csv" in fm:
        trace.to_csv(out / "trace.csv")
    if "json" in fm:
        trace.to_json(out / "trace.json")
    best = trace.best
    _write_state(out, cfg, "incumbent_", best.shape, best.temperature, best.displacement, best.report)
    _gnuplot(out, cfg, "trace.gp", _TRACE_PLOT)
    print(f"evaluations = {len(trace.entries)}")
    print(f"baseline J = {_fmt(trace.baseline_J)}")
    print(f"incumbent J = {_fmt(trace.best_J)}  reduction = {100 * trace.improvement:.3f}%")
    print(f"incumbent volume deviation = {best.volume_deviation:.3e}")
    print("incumbent theta = " + " ".join(f"{t:.6g}" for t in trace.best_theta))
    return EXIT_OK


def cmd_diagnose(args, cfg: ProblemConfig) -> int:
    out = _outdir(args, cfg)
    block = cfg.block("diagnose")
    n = args.n_shapes if args.n_shapes is not None else block["n_shapes"]
    seed = args.seed if args.seed is not None else block["seed"]
    problem = cfg.problem()
    thetas = random_admissible_thetas(problem, n, block["amplitude"], seed, block["max_attempts"])
    rows = run_suite(problem, thetas, threads=resolve_threads(args.threads, cfg))
    write_rows(rows, out / "diagnostics.csv")
    print(f"{'shape':>5} {'min_det':>9} {'dV/V':>10} {'T_min':>10} {'T_max':>10} {'slack':>9} {'MP':>4} "
          f"{'max|u|':>10} {'[gradT]':>10} {'[grad u]':>10}")
    for r in rows:
        print(f"{r.shape:>5} {r.min_det:>9.4f} {r.volume_deviation:>10.2e} {r.T_min:>10.4g} {r.T_max:>10.4g} "
              f"{r.mp_slack:>9.2e} {'ok' if r.mp_pass and r.abs_bound_pass else 'FAIL':>4} {r.max_u:>10.3e} "
              f"{r.holder_T:>10.3e} {r.holder_u:>10.3e}")
    passed = sum(r.mp_pass and r.abs_bound_pass for r in rows)
    finite = all(r.estimates_finite for r in rows)
    print(f"maximum principle: {passed}/{len(rows)} pass; Hoelder estimates finite: {finite}")
    if rows:
        print(f"displacement envelope max|u| = {_fmt(max(r.max_u for r in rows))}")
    return EXIT_OK


def cmd_mesh_export(args, cfg: ProblemConfig) -> int:
    out = _outdir(args, cfg)
    shape = make_shape(cfg.design, cfg.template.with_coeffs(cfg.theta), cfg.baseline_mesh)
    write_mesh_text(shape.mesh, out / "mesh.txt")
    write_mesh_json(shape.mesh, out / "mesh.json")
    m = shape.mesh
    print(f"nodes = {m.n_nodes}  cells = {m.n_cells}  facets = {len(m.facets)}")
    return EXIT_OK


_CDF_PLOT = """set datafile separator ','
set key top left
set logscale x
set xlabel 'load cycles t'
set ylabel 'F(t)'
plot '{data}' using 1:2 skip 1 with linespoints title 'failure probability'
"""

_TAU_PLOT = """set datafile separator ','
set xlabel 'first crack time'
set ylabel 'count'
binwidth = 0
stats 'tau.csv' using 2 skip 1 nooutput
binwidth = (STATS_max - STATS_min) / 40.0
bin(x) = binwidth * floor(x / binwidth)
plot 'tau.csv' using (bin($2)):(1.0) skip 1 smooth frequency with boxes title 'tau'
"""

_TRACE_PLOT = """set datafile separator ','
set logscale y
set xlabel 'evaluation'
set ylabel 'J'
plot 'trace.csv' using 2:4 skip 1 with points title 'J', \\
     'trace.csv' using 2:14 skip 1 with lines title 'incumbent'
"""

_COMMANDS = {
    "solve": cmd_solve,
    "sample": cmd_sample,
    "optimize": cmd_optimize,
    "diagnose": cmd_diagnose,
    "mesh-export": cmd_mesh_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcfshape", description="LCF reliability and shape optimisation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML problem file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--t-max", type=float, dest="t_max")
        p.add_argument("--replications", type=int)
        p.add_argument("--n-shapes", type=int, dest="n_shapes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        resolve_threads(args.threads, cfg)
        return _COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
