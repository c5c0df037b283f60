"""Experiment runner: builds the test operators, sweeps the error
estimators over time grids, and benchmarks the step-size controllers.

    krylovexp build --config cfg.json --out results/
    krylovexp sweep --config cfg.json --out results/ [--threads 4] [--seed 7]
    krylovexp bench --config cfg.json --out results/

Exit codes: 0 ok, 1 a proven upper bound was exceeded by the oracle
error, 2 configuration problem.

The JSON config holds a "problems" list plus a "sweep" and/or "bench"
section; see the README for a complete example.  Sweep output is one
wide CSV per (problem, m) with the classic column set, one long-format
CSV covering every estimator evaluation, and a standalone matplotlib
script that renders the log-log overlay figures.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .approximant import (Approximant, DefectRoundoffError, effective_order)
from .estimators import (era, era_corrected, err1, fmt_float, fmt_sigma,
                         quad_estimates, write_sweep_csv)
from .krylov import KrylovConfig, build_krylov
from .oracle import oracle_laplacian, oracle_phi, oracle_series
from .problems import ProblemSpec, starting_vector
from .stepper import (ControllerSpec, propagate, propagate_fixed_steps,
                      write_bench_csv)


class ConfigError(Exception):
    pass


WIDE_COLUMNS = ("t", "oracle_error", "Era", "Err1", "HermiteQuad",
                "ImprovedHermiteQuad", "TrapezoidQuad", "EffectiveOrderQuad",
                "rho")

_BOUND_SLACK_REL = 1e-9


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _problem_specs(config, seed_override=None):
    entries = config.get("problems")
    _require(isinstance(entries, list) and entries, "config needs a nonempty 'problems' list")
    specs = []
    for e in entries:
        _require(isinstance(e, dict) and "kind" in e, "each problem needs a 'kind'")
        seed = seed_override if seed_override is not None else e.get("seed", 0)
        try:
            specs.append(ProblemSpec(e["kind"], e.get("params", {}), seed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return specs


def _t_grid(section):
    grid = section.get("t_grid")
    _require(isinstance(grid, dict), "sweep needs a 't_grid' object")
    if "values" in grid:
        values = [float(x) for x in grid["values"]]
        _require(len(values) > 0, "t_grid.values must be nonempty")
        _require(all(x > 0 for x in values), "t values must be > 0")
        return sorted(values)
    for key in ("start", "stop", "points"):
        _require(key in grid, f"t_grid needs '{key}' (or explicit 'values')")
    start, stop, points = float(grid["start"]), float(grid["stop"]), int(grid["points"])
    _require(0 < start <= stop, "t_grid needs 0 < start <= stop")
    _require(points >= 1, "t_grid.points must be >= 1")
    if grid.get("scale", "log") == "log":
        return list(np.geomspace(start, stop, points))
    return list(np.linspace(start, stop, points))


def _reference(spec, op, sigma, t, v, p, accuracy):
    if p == 0 and spec.kind in ("schrodinger_free", "heat"):
        return oracle_laplacian(op.n, sigma, t, v)
    if p == 0:
        return oracle_series(op, sigma, t, v, accuracy)
    return oracle_phi(op, sigma, t, v, p, accuracy)


def _sweep_cell(spec, m, section, accuracy):
    """All estimator evaluations for one (problem, m) pair."""
    p = int(section.get("p", 0))
    corrected = bool(section.get("corrected", False))
    op, sigma = spec.build()
    v = starting_vector(spec)
    dec = build_krylov(op, v, KrylovConfig(m_max=m))
    kind = "corrected" if corrected else "standard"
    appr = Approximant(dec, sigma, kind, p, op=op)
    quad_appr = appr if not corrected else Approximant(dec, sigma, "standard", p, op=op)
    wide_rows = []
    long_rows = []
    violation = False
    for t in _t_grid(section):
        ref = _reference(spec, op, sigma, t, v, p, accuracy)
        err = float(np.linalg.norm(appr.apply(t) - ref))
        if corrected:
            e_era = era_corrected(dec, op, sigma, t, p)
            e_err1 = err1(dec, sigma, t, p, corrected=True, op=op)
        else:
            e_era = era(dec, sigma, t, p)
            e_err1 = err1(dec, sigma, t, p)
        quad_list = quad_estimates(quad_appr, t)
        quads = {e.kind: e.value for e in quad_list}
        try:
            rho = effective_order(quad_appr, t)
        except DefectRoundoffError:
            rho = math.nan
        wide_rows.append({
            "t": t, "oracle_error": err,
            "Era": e_era.value, "Err1": e_err1.value,
            "HermiteQuad": quads["hermite_quad"],
            "ImprovedHermiteQuad": quads.get("improved_hermite_quad", math.nan),
            "TrapezoidQuad": quads["trapezoid_quad"],
            "EffectiveOrderQuad": quads.get("effective_order_quad", math.nan),
            "rho": rho,
        })
        for est in [e_era, e_err1] + quad_list:
            long_rows.append({
                "problem": spec.kind, "m": m, "sigma": sigma, "p": p,
                "t": t, "estimator": est.kind, "value": est.value,
                "extra_matvecs": est.extra_matvecs, "oracle_error": err,
            })
            if (est.is_proven_upper_bound
                    and err > est.value * (1.0 + _BOUND_SLACK_REL) + 10.0 * accuracy):
                violation = True
    return wide_rows, long_rows, violation


def _write_wide_csv(path, rows):
    lines = [",".join(WIDE_COLUMNS)]
    for r in sorted(rows, key=lambda r: r["t"]):
        lines.append(",".join(fmt_float(r[c]) for c in WIDE_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


_PLOT_SCRIPT = '''\
"""Render log-log overlays of the sweep CSVs (generated file)."""
import csv
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

FILES = {files!r}

for name in FILES:
    with open(name) as fh:
        rows = list(csv.DictReader(fh))
    t = [float(r["t"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for col in ("oracle_error", "Era", "Err1", "HermiteQuad",
                "ImprovedHermiteQuad", "TrapezoidQuad", "EffectiveOrderQuad"):
        y = [float(r[col]) for r in rows]
        if all(math.isnan(v) for v in y):
            continue
        style = "k-" if col == "oracle_error" else None
        if style:
            ax.loglog(t, y, style, label=col, linewidth=2)
        else:
            ax.loglog(t, y, label=col)
    ax.set_xlabel("t")
    ax.set_ylabel("error / estimate")
    ax.set_title(name)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = name.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    print("wrote", out)
'''


def cmd_sweep(config, out_dir, threads=1, seed_override=None):
    specs = _problem_specs(config, seed_override)
    section = config.get("sweep")
    _require(isinstance(section, dict), "config needs a 'sweep' section")
    ms = section.get("m")
    _require(isinstance(ms, list) and ms, "sweep needs a nonempty 'm' list")
    ms = [int(m) for m in ms]
    _require(all(m >= 2 for m in ms), "sweep m values must be >= 2")
    accuracy = float(section.get("oracle_accuracy", 1e-13))

    cells = [(spec, m) for spec in specs for m in ms]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda c: _sweep_cell(c[0], c[1], section, accuracy), cells))
    else:
        results = [_sweep_cell(spec, m, section, accuracy) for spec, m in cells]

    all_long = []
    files = []
    violated = False
    for (spec, m), (wide, long_rows, violation) in zip(cells, results):
        name = f"sweep_{spec.kind}_m{m}.csv"
        _write_wide_csv(out_dir / name, wide)
        files.append(name)
        all_long.extend(long_rows)
        violated = violated or violation
    write_sweep_csv(out_dir / "estimates_long.csv", all_long)
    (out_dir / "plot_sweeps.py").write_text(_PLOT_SCRIPT.format(files=sorted(files)))
    return 1 if violated else 0


def cmd_bench(config, out_dir, seed_override=None):
    specs = {s.kind: s for s in _problem_specs(config, seed_override)}
    section = config.get("bench")
    _require(isinstance(section, dict), "config needs a 'bench' section")
    runs = section.get("runs")
    _require(isinstance(runs, list) and runs, "bench needs a nonempty 'runs' list")
    accuracy = float(section.get("oracle_accuracy", 1e-13))

    rows = []
    violated = False
    for run in runs:
        _require(isinstance(run, dict), "each bench run must be an object")
        kind = run.get("problem")
        _require(kind in specs, f"bench run references unknown problem {kind!r}")
        spec = specs[kind]
        try:
            m = int(run["m"])
            tol = float(run["tol"])
            controller = run["controller"]
            estimator = run.get("estimator", "era")
            ctrl = ControllerSpec(controller, tol,
                                  run.get("error_model", "per_unit_step"),
                                  int(run.get("iteration_cap", 5)),
                                  run.get("safety"))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad bench run: {exc}") from exc
        op, sigma = spec.build()
        v = starting_vector(spec)
        cfg = KrylovConfig(m_max=m)
        if "n_steps" in run:
            n_steps = int(run["n_steps"])
            _require(n_steps >= 1, "n_steps must be >= 1")
            result = propagate_fixed_steps(op, sigma, v, n_steps, cfg, ctrl, estimator)
        else:
            _require("t_final" in run, "bench run needs 'n_steps' or 't_final'")
            result = propagate(op, sigma, v, float(run["t_final"]), cfg, ctrl, estimator)
        total_t = result.total_time
        if spec.kind in ("schrodinger_free", "heat"):
            ref = oracle_laplacian(op.n, sigma, total_t, v)
        else:
            ref = oracle_series(op, sigma, total_t, v, accuracy)
        err = float(np.linalg.norm(result.w_final - ref))
        rows.append({
            "controller": ctrl.kind, "estimator": estimator, "m": m,
            "tol": tol, "N": len(result.records), "total_t": total_t,
            "total_matvecs": result.total_matvecs,
            "accumulated_bound": result.accumulated_bound,
            "oracle_error_per_unit_t": err / total_t,
        })
        proven_run = all(r.estimate.is_proven_upper_bound for r in result.records)
        if proven_run:
            slack = result.accumulated_bound * _BOUND_SLACK_REL + 10.0 * accuracy
            if err > result.accumulated_bound + slack:
                violated = True
            if (ctrl.error_model == "per_unit_step"
                    and err / total_t > tol * (1.0 + _BOUND_SLACK_REL) + 10.0 * accuracy / total_t):
                violated = True
    write_bench_csv(out_dir / "bench.csv", rows)
    return 1 if violated else 0


def cmd_build(config, out_dir, seed_override=None):
    for spec in _problem_specs(config, seed_override):
        op, sigma = spec.build()
        base = out_dir / spec.kind
        op.to_matrix_market(base.with_suffix(".mtx"))
        meta = {
            "kind": spec.kind,
            "params": spec.params,
            "seed": spec.seed,
            "sigma": fmt_sigma(sigma),
            "n": op.n,
            "nnz": op.nnz,
            "symmetry": op.symmetry,
            "nonexpansive": op.nonexpansive,
            "norm_1": op.norm_1,
            "norm_inf": op.norm_inf,
        }
        base.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="krylovexp",
        description="Krylov exponential/phi action experiments")
    parser.add_argument("command", choices=("build", "sweep", "bench"))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None,
                        help="override every problem seed")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must fit in 64 bits")
        config = _load_config(args.config)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "build":
            return cmd_build(config, out_dir, args.seed)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir, args.threads, args.seed)
        return cmd_bench(config, out_dir, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
