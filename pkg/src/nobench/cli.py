"""Command-line harness: dataset generation, experiments, reporting.

Subcommands:

* ``nobench generate`` -- build a Darcy candidate pool and write a NOBENCH1
  file (prints the SHA-256 digest).
* ``nobench run``      -- run the configured algorithms over seeded trials,
  writing ``results.csv`` and ``summary.csv``.
* ``nobench report``   -- summarize a results directory into two SVG plots
  plus a terminal table.

Seeding: trial i uses base_seed + i; all algorithms within a trial share
one oracle noise stream, so comparisons are paired.
"""

import argparse
import csv
import hashlib
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bandit import (
    AlgorithmConfig,
    Oracle,
    RegretCurve,
    TrialResult,
    prepare_algorithm,
    regret_curves,
    run_algorithm,
)
from .config import ExperimentConfig, apply_overrides, load_config
from .errors import StructureError
from .fields import Grid2D
from .functionals import make_functional
from .grf import GRFConfig
from .pool import generate_pool, pool_digest, read_pool, serialize_pool, write_pool
from .rng import ALGO_STREAM, NOISE_STREAM, child_rng

RESULTS_CSV = "results.csv"
SUMMARY_CSV = "summary.csv"
CSV_COLUMNS = (
    "algorithm",
    "trial",
    "t",
    "chosen_index",
    "instant_regret",
    "cumulative_regret",
)


def build_pool(cfg: ExperimentConfig):
    spec = cfg.pool
    if spec.path is not None:
        path = Path(spec.path)
        if not path.exists():
            raise StructureError(f"pool file {path} does not exist")
        return read_pool(path)
    grid = Grid2D(spec.nx, spec.ny)
    return generate_pool(
        spec.n,
        GRFConfig(grid, spec.tau, spec.alpha),
        a_low=spec.a_low,
        a_high=spec.a_high,
        g=spec.forcing,
        seed=spec.seed,
    )


def build_oracle(cfg: ExperimentConfig, pool) -> Oracle:
    target = None
    if cfg.functional == "inverse":
        if not 0 <= cfg.target_index < pool.n:
            raise StructureError(f"target_index {cfg.target_index} outside pool")
        target = pool.output_field(cfg.target_index)
    functional = make_functional(
        cfg.functional, k=cfg.functional_k, g=pool.meta.get("g", 1.0), target=target
    )
    sigma = 0.01 * float(pool.outputs.std()) if cfg.noise == "auto" else float(cfg.noise)
    return Oracle(pool, functional, sigma)


def _run_one(pool, cfg: ExperimentConfig, kind: str, trial: int, ctx=None) -> TrialResult:
    oracle = build_oracle(cfg, pool)
    algo_cfg = AlgorithmConfig(kind, cfg.budget, cfg.algo_options.get(kind, {}))
    if ctx is None:
        ctx = prepare_algorithm(algo_cfg, pool)
    trial_seed = cfg.seed + trial
    algo_id = list(cfg.algorithms).index(kind) if kind in cfg.algorithms else 0
    rng = child_rng(trial_seed, ALGO_STREAM, algo_id)
    noise_rng = child_rng(trial_seed, NOISE_STREAM)
    return run_algorithm(oracle, algo_cfg, rng, noise_rng, ctx)


_WORKER_STATE = {}


def _worker_init(pool_bytes, cfg):
    from .pool import deserialize_pool

    _WORKER_STATE["pool"] = deserialize_pool(pool_bytes)
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["ctx"] = {}


def _worker_run(task):
    kind, trial = task
    pool = _WORKER_STATE["pool"]
    cfg = _WORKER_STATE["cfg"]
    if kind not in _WORKER_STATE["ctx"]:
        algo_cfg = AlgorithmConfig(kind, cfg.budget, cfg.algo_options.get(kind, {}))
        _WORKER_STATE["ctx"][kind] = prepare_algorithm(algo_cfg, pool)
    return kind, trial, _run_one(pool, cfg, kind, trial, _WORKER_STATE["ctx"][kind])


def run_experiment(cfg: ExperimentConfig, log=print):
    """Execute all (algorithm, trial) pairs; returns (results, failures)."""
    cfg.validate()
    pool = build_pool(cfg)
    results = {}
    failures = []
    tasks = [(kind, trial) for kind in cfg.algorithms for trial in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            initializer=_worker_init,
            initargs=(serialize_pool(pool), cfg),
        ) as ex:
            for (kind, trial), outcome in zip(tasks, ex.map(_worker_run, tasks)):
                results[(kind, trial)] = outcome[2]
                log(f"done {kind} trial {trial}")
    else:
        for kind in cfg.algorithms:
            algo_cfg = AlgorithmConfig(kind, cfg.budget, cfg.algo_options.get(kind, {}))
            ctx = prepare_algorithm(algo_cfg, pool)
            for trial in range(cfg.trials):
                try:
                    results[(kind, trial)] = _run_one(pool, cfg, kind, trial, ctx)
                    log(f"done {kind} trial {trial}")
                except Exception as err:  # noqa: BLE001 - per-trial isolation
                    failures.append((kind, trial, repr(err)))
                    log(f"FAILED {kind} trial {trial}: {err!r}")
    return results, failures


def write_results(results, failures, cfg: ExperimentConfig, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    rows_path = out_dir / RESULTS_CSV
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for (kind, trial) in sorted(results):
            res = results[(kind, trial)]
            for t in range(len(res.chosen)):
                writer.writerow(
                    [
                        kind,
                        trial,
                        t + 1,
                        int(res.chosen[t]),
                        repr(float(res.instant[t])),
                        repr(float(res.cumulative[t])),
                    ]
                )
    summary_path = out_dir / SUMMARY_CSV
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "trials", "budget", "mean_final_cumulative", "std_final_cumulative"]
        )
        for kind in cfg.algorithms:
            finals = [
                results[(kind, trial)].cumulative[-1]
                for trial in range(cfg.trials)
                if (kind, trial) in results
            ]
            if finals:
                writer.writerow(
                    [
                        kind,
                        len(finals),
                        cfg.budget,
                        repr(float(np.mean(finals))),
                        repr(float(np.std(finals))),
                    ]
                )
    if failures:
        with open(out_dir / "failures.txt", "w") as fh:
            for kind, trial, err in failures:
                fh.write(f"{kind}\t{trial}\t{err}\n")


def read_results(results_dir: Path):
    """results.csv -> {algorithm: [TrialResult-like arrays sorted by trial]}"""
    rows_path = results_dir / RESULTS_CSV
    if not rows_path.exists():
        raise StructureError(f"no {RESULTS_CSV} in {results_dir}")
    per_key = {}
    with open(rows_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_COLUMNS):
            raise StructureError(f"unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            key = (row["algorithm"], int(row["trial"]))
            per_key.setdefault(key, []).append(
                (int(row["t"]), int(row["chosen_index"]), float(row["instant_regret"]), float(row["cumulative_regret"]))
            )
    grouped = {}
    for (kind, trial), entries in sorted(per_key.items()):
        entries.sort()
        inst = np.array([e[2] for e in entries])
        cum = np.array([e[3] for e in entries])
        chosen = np.array([e[1] for e in entries], dtype=int)
        grouped.setdefault(kind, []).append(
            TrialResult(kind, chosen, inst, cum, np.zeros(len(entries)))
        )
    return grouped


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    if args.n is not None:
        cfg.pool.n = args.n
    if args.nx is not None:
        cfg.pool.nx = args.nx
        cfg.pool.ny = args.nx if args.ny is None else args.ny
    elif args.ny is not None:
        cfg.pool.ny = args.ny
    if args.seed is not None:
        cfg.pool.seed = args.seed
    cfg.pool.path = None  # always generate here
    pool = build_pool(cfg)
    out = Path(args.out)
    write_pool(pool, out)
    print(f"wrote {pool.n} instances at {pool.grid.nx}x{pool.grid.ny} to {out}")
    print(f"sha256 {pool_digest(pool)}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    apply_overrides(
        cfg,
        seed=args.seed,
        out=args.out,
        algorithms=args.algo.split(",") if args.algo else None,
        trials=args.trials,
        budget=args.budget,
        noise=args.noise,
        pool_path=args.pool,
        workers=args.workers,
    )
    results, failures = run_experiment(cfg)
    out_dir = Path(cfg.out)
    write_results(results, failures, cfg, out_dir)
    print(f"wrote {out_dir / RESULTS_CSV}")
    if failures:
        print(f"{len(failures)} trial(s) failed; see {out_dir / 'failures.txt'}")
        return 1
    return 0


def cmd_report(args) -> int:
    from .plotting import render_regret_svg

    results_dir = Path(args.results_dir)
    grouped = read_results(results_dir)
    curves = {kind: regret_curves(trials) for kind, trials in grouped.items()}
    out_dir = Path(args.out) if args.out else results_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    for which, fname, title in (
        ("cumulative", "cumulative_regret.svg", "Cumulative regret"),
        ("average", "average_regret.svg", "Average regret"),
    ):
        svg = render_regret_svg(curves, which, title)
        (out_dir / fname).write_text(svg)
        print(f"wrote {out_dir / fname}")
    print(f"{'algorithm':>10s}  final cumulative regret (mean +- std)")
    for kind in sorted(curves):
        c = curves[kind]
        print(f"{kind:>10s}  {c.mean_cumulative[-1]:.6f} +- {c.std_cumulative[-1]:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nobench",
        description="Functional optimization benchmarks with neural-operator "
        "Thompson sampling and baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a Darcy pool file")
    gen.add_argument("--config", default=None)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, default=None)
    gen.add_argument("--nx", type=int, default=None)
    gen.add_argument("--ny", type=int, default=None)
    gen.add_argument("--seed", type=int, default=None)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run algorithms across seeded trials")
    run.add_argument("--config", default=None)
    run.add_argument("--pool", default=None)
    run.add_argument("--algo", default=None, help="comma-separated algorithm kinds")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--budget", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--noise", type=float, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--workers", type=int, default=None)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="plots and summary from a results dir")
    rep.add_argument("results_dir")
    rep.add_argument("--out", default=None)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
