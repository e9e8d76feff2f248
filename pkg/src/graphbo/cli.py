"""Experiment runner CLI: config ingestion, multi-seed orchestration,
result emission, and report tables.

Outputs per run: a CSV of iterations, a CSV of hyperparameter fits, and a
small JSON summary. Per experiment: ``summary.json`` with median/IQR
evaluations-to-optimum per strategy and a long-format gamma trace table.
All CSV content is a pure function of the config and seeds; wall times
live only in the JSON summaries.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .benchmarks import Benchmark, build_benchmark
from .bo import GBOConfig, RunRecord, run_baseline, run_gbo
from .hyperopt import DEFAULT_GRID, NelderMeadOptions
from .kernels import KernelWorkspace

__all__ = ["UsageError", "load_config", "run_experiment", "report", "main"]

STRATEGIES = ("gbo", "random", "bo_f", "bo_g", "ga", "sa")


class UsageError(ValueError):
    """Invalid configuration or command usage."""


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")
    _validate_config(config)
    return config


def _validate_config(config: dict) -> None:
    for key in ("benchmark", "feature_groups", "strategies", "budget", "n_init", "seeds"):
        if key not in config:
            raise UsageError(f"config missing required key {key!r}")
    for strategy in config["strategies"]:
        if strategy not in STRATEGIES:
            raise UsageError(
                f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}"
            )
    if not isinstance(config["feature_groups"], list) or not config["feature_groups"]:
        raise UsageError("feature_groups must be a non-empty list")
    for group in config["feature_groups"]:
        if "name" not in group or "features" not in group:
            raise UsageError("each feature group needs 'name' and 'features'")
    if int(config["n_init"]) < 2:
        raise UsageError("n_init must be >= 2")
    if int(config["budget"]) < int(config["n_init"]):
        raise UsageError("budget must be >= n_init")


def _resolve_seeds(config, seed_base: int) -> list[int]:
    seeds = config["seeds"]
    if isinstance(seeds, int):
        return [seed_base + i for i in range(seeds)]
    return [seed_base + int(s) for s in seeds]


def _gbo_config(config: dict, bench: Benchmark, workspace) -> GBOConfig:
    kernel = config.get("kernel", {})
    fit = config.get("fit", {})
    grid = kernel.get("grid")
    nm = NelderMeadOptions(
        max_iter=fit.get("nm_max_iter"),
        xatol=float(fit.get("nm_xatol", 1e-3)),
        fatol=float(fit.get("nm_fatol", 1e-4)),
    )
    return GBOConfig(
        refit_every=int(config.get("refit_every", 10)),
        grid=tuple(tuple(point) for point in grid) if grid else DEFAULT_GRID,
        restarts=int(fit.get("restarts", 5)),
        nm_options=nm,
        workspace=workspace,
        optimum_value=bench.optimum_value,
        encoding=bench.encoding,
    )


def _build_workspace(config: dict, bench: Benchmark) -> KernelWorkspace:
    kernel = config.get("kernel", {})
    return KernelWorkspace(
        bench.candidates.graphs,
        bench.feature_groups,
        k=int(kernel.get("k", 4)),
        samples=int(kernel.get("samples", 500)),
        samples_per_node=int(kernel.get("samples_per_node", 10)),
        seed=int(kernel.get("seed", 0)),
    )


def _run_one(args):
    strategy, seed, bench, gbo_config, budget, n_init = args
    start = time.perf_counter()
    if strategy == "gbo":
        record = run_gbo(
            bench.candidates,
            bench.feature_groups,
            bench.objective,
            budget,
            n_init=n_init,
            seed=seed,
            config=gbo_config,
        )
    else:
        record = run_baseline(
            strategy,
            bench.candidates,
            bench.feature_groups,
            bench.objective,
            budget,
            n_init=n_init,
            seed=seed,
            config=gbo_config,
        )
    return strategy, seed, record, time.perf_counter() - start


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_run_csv(path, record: RunRecord, n_groups: int) -> None:
    beta_cols = [f"beta_{j}" for j in range(n_groups)]
    header = ["iteration", "candidate_id", "y", "best_so_far", "alpha"]
    header += beta_cols + ["sigma", "gamma"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in record.rows:
            values = [row.iteration, row.candidate_id, _fmt(row.y), _fmt(row.best_so_far)]
            if row.params is None:
                values += [""] * (2 + n_groups)
            else:
                summary = row.params.flat_summary()
                values.append(_fmt(summary["alpha"]))
                values += [_fmt(summary[c]) for c in beta_cols]
                values.append(_fmt(summary["sigma"]))
            values.append(_fmt(row.gamma))
            writer.writerow(values)


def _write_fits_csv(path, record: RunRecord) -> None:
    if not record.fits:
        return
    keys = list(record.fits[0].params.flat_summary())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration"] + keys + ["lml"])
        for fit in record.fits:
            summary = fit.params.flat_summary()
            writer.writerow(
                [fit.iteration] + [_fmt(summary[k]) for k in keys] + [_fmt(fit.lml)]
            )


def _pct(sorted_vals: list[float], q: float) -> float:
    """Linear-interpolation percentile that tolerates inf entries."""
    pos = (len(sorted_vals) - 1) * q / 100.0
    lo, hi = int(math.floor(pos)), int(math.ceil(pos))
    if not (np.isfinite(sorted_vals[lo]) and np.isfinite(sorted_vals[hi])):
        return math.inf
    return sorted_vals[lo] + (sorted_vals[hi] - sorted_vals[lo]) * (pos - lo)


def _median_iqr(values: list[float | None]) -> dict:
    """Median/IQR with unfinished runs counted as worse than any finished one."""
    filled = sorted(float("inf") if v is None else float(v) for v in values)

    def encode(x):
        return None if x is None or not np.isfinite(x) else float(x)

    return {
        "values": [None if v is None else int(v) for v in values],
        "median": encode(_pct(filled, 50)),
        "q1": encode(_pct(filled, 25)),
        "q3": encode(_pct(filled, 75)),
        "found_fraction": sum(v is not None for v in values) / max(len(values), 1),
    }


def run_experiment(config_path, out_dir, jobs: int = 1, seed_base: int = 0) -> dict:
    """Execute every (strategy, seed) run of a config; returns the summary."""
    config_path = Path(config_path)
    config = load_config(config_path)
    out_dir = Path(out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    bench = build_benchmark(config, base_dir=config_path.parent, jobs=jobs)
    workspace = _build_workspace(config, bench)
    gbo_config = _gbo_config(config, bench, workspace)
    # The graph kernel per grid point depends only on the candidate set:
    # build it once here so parallel workers inherit it ready-made.
    if any(s in ("gbo", "bo_g") for s in config["strategies"]):
        for w, d in gbo_config.grid:
            workspace.graph_gram(w, d)

    seeds = _resolve_seeds(config, seed_base)
    budget = int(config["budget"])
    n_init = int(config["n_init"])
    tasks = [
        (strategy, seed, bench, gbo_config, budget, n_init)
        for seed in seeds
        for strategy in config["strategies"]
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    n_groups = len(bench.feature_groups)
    by_strategy: dict[str, list] = {s: [] for s in config["strategies"]}
    gamma_rows = []
    any_aborted = False
    for strategy, seed, record, wall in results:
        stem = f"{strategy}_seed{seed}"
        _write_run_csv(runs_dir / f"{stem}.csv", record, n_groups)
        _write_fits_csv(runs_dir / f"{stem}_fits.csv", record)
        with open(runs_dir / f"{stem}.json", "w") as fh:
            json.dump(
                {
                    "strategy": strategy,
                    "seed": seed,
                    "evaluations_to_optimum": record.evaluations_to_optimum,
                    "wall_time_s": wall,
                    "aborted": record.aborted,
                    "error": record.error,
                },
                fh,
                indent=2,
            )
        by_strategy[strategy].append(record)
        any_aborted = any_aborted or record.aborted
        for row in record.rows:
            if row.gamma is not None:
                gamma_rows.append((strategy, seed, row.iteration, row.gamma))

    with open(out_dir / "gamma_traces.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "seed", "iteration", "gamma"])
        for strategy, seed, iteration, gamma in gamma_rows:
            writer.writerow([strategy, seed, iteration, _fmt(gamma)])

    summary = {
        "benchmark": config["benchmark"],
        "budget": budget,
        "n_init": n_init,
        "seeds": seeds,
        "metadata": bench.metadata,
        "strategies": {
            strategy: _median_iqr([r.evaluations_to_optimum for r in records])
            for strategy, records in by_strategy.items()
        },
        "aborted_runs": any_aborted,
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def _read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _quartiles(values: list[float]) -> tuple[float, float, float]:
    qs = np.percentile(values, [25, 50, 75])
    return float(qs[0]), float(qs[1]), float(qs[2])


def report(results_dir) -> dict:
    """Aggregate run CSVs into convergence-curve and boxplot tables.

    Writes ``curves.csv`` (per-strategy mean/variance best-so-far),
    ``hyperparam_quartiles.csv`` (quartiles of each fitted parameter and
    its relevance over the final fit of every run), and
    ``gamma_by_strategy.csv``. Returns the tables as dictionaries.
    """
    results_dir = Path(results_dir)
    runs_dir = results_dir / "runs"
    run_files = sorted(runs_dir.glob("*_seed*.csv"))
    run_files = [p for p in run_files if not p.stem.endswith("_fits")]
    if not run_files:
        raise UsageError(f"no run CSVs found under {runs_dir}")

    curves: dict[str, list[list[float]]] = {}
    final_gamma: dict[str, list[float]] = {}
    for path in run_files:
        strategy = path.stem.rsplit("_seed", 1)[0]
        rows = _read_csv(path)
        curves.setdefault(strategy, []).append([float(r["best_so_far"]) for r in rows])
        gammas = [float(r["gamma"]) for r in rows if r["gamma"] not in ("", "inf")]
        if gammas:
            final_gamma.setdefault(strategy, []).append(gammas[-1])

    curve_table = []
    for strategy in sorted(curves):
        series = curves[strategy]
        horizon = max(len(s) for s in series)
        for it in range(horizon):
            # Shorter (aborted) runs carry their last incumbent forward.
            vals = [s[min(it, len(s) - 1)] for s in series]
            curve_table.append(
                {
                    "strategy": strategy,
                    "iteration": it + 1,
                    "mean_best_so_far": float(np.mean(vals)),
                    "var_best_so_far": float(np.var(vals)),
                }
            )
    with open(results_dir / "curves.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["strategy", "iteration", "mean_best_so_far", "var_best_so_far"]
        )
        writer.writeheader()
        for row in curve_table:
            writer.writerow(
                {k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()}
            )

    final_fits: dict[str, dict[str, list[float]]] = {}
    for path in sorted(runs_dir.glob("*_fits.csv")):
        strategy = path.stem[: -len("_fits")].rsplit("_seed", 1)[0]
        rows = _read_csv(path)
        if not rows:
            continue
        last = rows[-1]
        bucket = final_fits.setdefault(strategy, {})
        for key, value in last.items():
            if key in ("iteration", "w", "d") or value == "":
                continue
            bucket.setdefault(key, []).append(float(value))
            if key.startswith("l_"):
                bucket.setdefault(f"relevance_{key[2:]}", []).append(1.0 / float(value))

    quartile_table = []
    for strategy in sorted(final_fits):
        for key in sorted(final_fits[strategy]):
            q1, med, q3 = _quartiles(final_fits[strategy][key])
            quartile_table.append(
                {"strategy": strategy, "parameter": key, "q1": q1, "median": med, "q3": q3}
            )
    with open(results_dir / "hyperparam_quartiles.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["strategy", "parameter", "q1", "median", "q3"])
        writer.writeheader()
        for row in quartile_table:
            writer.writerow(
                {k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()}
            )

    gamma_table = []
    for strategy in sorted(final_gamma):
        q1, med, q3 = _quartiles(final_gamma[strategy])
        gamma_table.append(
            {"strategy": strategy, "q1": q1, "median_gamma": med, "q3": q3}
        )
    with open(results_dir / "gamma_by_strategy.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["strategy", "q1", "median_gamma", "q3"])
        writer.writeheader()
        for row in gamma_table:
            writer.writerow(
                {k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()}
            )

    return {"curves": curve_table, "hyperparams": quartile_table, "gamma": gamma_table}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="graphbo", description="Graph Bayesian-optimization experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run every (strategy, seed) of a config")
    run_p.add_argument("config", help="experiment config (JSON)")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    run_p.add_argument("--out", default="results", help="output directory")
    run_p.add_argument("--seed-base", type=int, default=0, help="offset added to seeds")
    report_p = sub.add_parser("report", help="aggregate a results directory")
    report_p.add_argument("results_dir")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            summary = run_experiment(
                args.config, args.out, jobs=args.jobs, seed_base=args.seed_base
            )
            print(json.dumps(summary["strategies"], indent=2))
            return 1 if summary["aborted_runs"] else 0
        report(args.results_dir)
        print(f"report tables written under {args.results_dir}")
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
