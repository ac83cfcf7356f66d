"""Command-line entry point: ``cbome <subcommand> --config cfg.json --out dir``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .benchmarks import make_benchmark
from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .report import (
    BENCHMARK_HEADER,
    LOSS_HEADER,
    PREDICTION_HEADER,
    SEGMENT_HEADER,
    write_csv,
    write_summary,
)
from .rng import RngStream
from .solver import run_batch

__all__ = ["main", "build_parser"]

logger = logging.getLogger("cbome")


class CellFailure(Exception):
    pass


def _batch_row(obj, method, n, mu, res):
    return {
        "objective": obj, "method": method, "N": n, "mu": mu,
        "success_rate": res.success_rate, "error_inf": res.mean_error,
        "fitness": res.mean_value, "iterations": res.mean_iterations,
        "w_iter": res.mean_w_iter, "cts": res.cts_w_iter,
    }


def cmd_benchmark(cfg: ExperimentConfig, out: Path, jobs: int = 1):
    """Run every (objective, method, N, mu) cell and write ``benchmark.csv``.

    ``cts`` is the work saved relative to the ``mu = 0`` cell with the same
    objective, method and N, measured by ``w_iter``; it is empty when the grid
    has no such cell.  Wall-clock savings go to ``summary.json``.
    """
    rows, agg, failed = [], [], []
    for obj_name in cfg.objectives:
        objective = make_benchmark(obj_name, cfg.dim, RngStream(cfg.seed))
        for method in cfg.methods:
            for n in cfg.N:
                ref = None
                for mu in sorted(cfg.mu, key=float):
                    scfg = cfg.solver.replace(method=method, n0=int(n), mu=float(mu))
                    try:
                        res = run_batch(objective, scfg, cfg.n_runs, n_jobs=jobs)
                    except Exception as exc:  # reported per cell, run continues
                        failed.append(f"{obj_name}/{method}/N={n}/mu={mu}: {exc}")
                        continue
                    if float(mu) == 0.0:
                        ref = res
                    if ref is not None:
                        res.with_reference(ref)
                    rows.append(_batch_row(obj_name, method, int(n), float(mu), res))
                    agg.append({**rows[-1], "cts_wall": res.cts_wall,
                                "mean_wall_time": res.mean_wall_time})
    name = "compare.csv" if cfg.kind == "compare" else "benchmark.csv"
    write_csv(out / name, BENCHMARK_HEADER, rows)
    return agg, failed


def cmd_segment(cfg: ExperimentConfig, out: Path, jobs: int = 1):
    from .segmentation import (
        apply_thresholds, histogram, otsu_objective, psnr, read_pgm, rmse, segment,
        uniform_thresholds, write_pgm,
    )

    path = Path(cfg.image)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    img = read_pgm(path)
    t, seg, report = segment(img, cfg.thresholds, cfg.solver)
    tu = uniform_thresholds(cfg.thresholds)
    seg_u = apply_thresholds(img, tu)
    write_pgm(seg, out / f"{path.stem}_cbo_me.pgm")
    rows = [
        {"image": path.name, "method": "cbo_me", "d": cfg.thresholds, "psnr": psnr(img, seg),
         "rmse": rmse(img, seg), "thresholds": [int(x) for x in t]},
        {"image": path.name, "method": "uniform", "d": cfg.thresholds, "psnr": psnr(img, seg_u),
         "rmse": rmse(img, seg_u), "thresholds": [int(x) for x in tu]},
    ]
    write_csv(out / "segment.csv", SEGMENT_HEADER, rows)
    h = histogram(img)
    agg = [{**r, "otsu": otsu_objective(h, r["thresholds"])} for r in rows]
    agg[0].update(report.summary())
    return agg, []


def cmd_approx(cfg: ExperimentConfig, out: Path, jobs: int = 1):
    from .nnapprox import MlpShape, TARGETS, default_grid, mlp_forward_batch, train

    shape = MlpShape(cfg.layers, cfg.width)
    grid = default_grid(cfg.grid)
    theta, report = train(shape, cfg.target, cfg.solver, grid)
    write_csv(out / "loss.csv", LOSS_HEADER, enumerate(report.consensus_values.tolist()))
    pred = mlp_forward_batch(shape, theta[None, :], grid)[0]
    target = TARGETS[cfg.target](grid)
    write_csv(out / "prediction.csv", PREDICTION_HEADER, zip(grid, target, pred))
    return [{"target": cfg.target, "n_params": shape.n_params,
             "initial_loss": float(report.consensus_values[0]), **report.summary()}], []


def cmd_validate_selection(cfg: ExperimentConfig, out: Path, jobs: int = 1):
    from .transport import SELECTION_CSV_HEADER, selection_bound_experiment

    lo, hi = cfg.n_sel
    rows = selection_bound_experiment(n=cfg.n, dims=tuple(cfg.dims), n_sel_grid=range(lo, hi + 1),
                                      trials=cfg.trials, rng=RngStream(cfg.seed))
    write_csv(out / "selection.csv", SELECTION_CSV_HEADER, rows)
    worst = max(r["empirical_w2sq"] / r["bound_prop4"] for r in rows if r["bound_prop4"] > 0)
    above_mc = sum(r["empirical_w2sq"] > r["bound_mc"] for r in rows)
    return [{"rows": len(rows), "max_ratio_to_bound": worst, "rows_above_mc_bound": above_mc}], []


COMMANDS = {
    "benchmark": cmd_benchmark,
    "compare": cmd_benchmark,
    "segment": cmd_segment,
    "approx": cmd_approx,
    "validate-selection": cmd_validate_selection,
}


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbome", description="Consensus-based optimisation experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in KINDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON experiment config")
        s.add_argument("--seed", type=_seed, help="overrides the config seed")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
        s.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None:
            cfg = load_config(args.config, args.command)
        else:
            cfg = ExperimentConfig.from_dict({}, args.command)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except (OSError, ConfigError) as exc:
        print(f"cbome: config error: {exc}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        agg, failed = COMMANDS[args.command](cfg, args.out, args.jobs)
    except Exception as exc:
        print(f"cbome {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_summary(args.out / "summary.json", cfg.to_dict(),
                  {"cells": agg, "failed": failed, "wall_time": time.perf_counter() - t0})
    for f in failed:
        print(f"cbome {args.command}: failed cell {f}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
