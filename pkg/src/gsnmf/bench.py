"""Benchmark harness: seeded sweeps over noise levels, metrics, result tables.

Per-trial seeds derive from ``sha256(f"{base_seed}:{eps_index}:{trial}")``
(first 8 bytes, big-endian), so any subset of a sweep reproduces in
isolation.  Trials are independent and may fan out across worker processes;
records merge by key, so execution order never changes the output.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import gen_fully_random, gen_middle_point
from .decomposition import (
    IndexSets,
    accuracy,
    assemble_factors,
    fit_weights,
    nmf_ahals,
)
from .decomposition import distance_to_ground_truth as ground_truth_distance
from .gsfgm import FgmConfig, gsfgm_solve, post_process_diagonal
from .gspa import gspa, spa_c, spa_r, spa_star
from .matrix import frobenius_norm, load_matrix, nonnegative_matrix, sinkhorn_scale

GENERATORS = ("fully-random", "middle-point")
ALGORITHMS = ("gspa", "gsfgm", "spa-star", "spa-c", "spa-r", "nmf")
WORKERS_ENV = "GSNMF_WORKERS"


def default_noise_levels() -> tuple:
    return tuple(float(e) for e in np.logspace(-3, 0, 20))


@dataclass(frozen=True)
class SweepConfig:
    """One benchmark sweep: generator, noise grid, trials, algorithms, problem size."""

    generator: str = "fully-random"
    noise_levels: tuple = dataclasses.field(default_factory=default_noise_levels)
    trials: int = 25
    algorithms: tuple = ALGORITHMS
    m: int = 60
    n: int = 60
    r1: int = 10
    r2: int = 10
    base_seed: int = 0
    lambda_tilde: float = 0.25
    delta: float = 1e-4
    max_iter: int = 1000
    nmf_iters: int = 1000

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        levels = tuple(float(e) for e in self.noise_levels)
        if not levels or any(e < 0 for e in levels) or list(levels) != sorted(levels):
            raise ValueError("noise levels must be nonnegative and ascending")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        algos = tuple(self.algorithms)
        unknown = set(algos) - set(ALGORITHMS)
        if unknown or not algos:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        object.__setattr__(self, "noise_levels", levels)
        object.__setattr__(self, "algorithms", algos)


@dataclass
class ExperimentRecord:
    """One (algorithm, instance) evaluation."""

    algorithm: str
    noise_level: float
    eps_index: int
    trial: int
    seed: int
    accuracy: float | None
    relative_error: float | None
    distance_to_ground_truth: float | None
    wall_time_seconds: float
    r1_found: int | None
    r2_found: int | None
    error: str | None = None


def trial_seed(base_seed: int, eps_index: int, trial: int) -> int:
    digest = hashlib.sha256(f"{base_seed}:{eps_index}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _generate(cfg: SweepConfig, eps: float, seed: int):
    if cfg.generator == "fully-random":
        return gen_fully_random(cfg.m, cfg.n, cfg.r1, cfg.r2, eps, seed)
    return gen_middle_point(eps, seed)


def extract_index_sets(algorithm: str, M, r1: int, r2: int,
                       fgm_cfg: FgmConfig | None = None) -> IndexSets:
    """Run one index-selection algorithm on ``M``.

    ``M`` is used as given; callers equilibrate first when appropriate.
    """
    r = r1 + r2
    if algorithm == "gspa":
        return gspa(M, r)[0]
    if algorithm == "gsfgm":
        sol = gsfgm_solve(M, r1, r2, fgm_cfg or FgmConfig())
        return post_process_diagonal(sol.X, sol.Y, r1, r2)
    if algorithm == "spa-star":
        return spa_star(M, r1, r2)
    if algorithm == "spa-c":
        return spa_c(M, r)
    if algorithm == "spa-r":
        return spa_r(M, r)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _run_trial(cfg: SweepConfig, eps_index: int, trial: int) -> list:
    eps = cfg.noise_levels[eps_index]
    seed = trial_seed(cfg.base_seed, eps_index, trial)
    inst = _generate(cfg, eps, seed)
    truth = inst.truth
    r1 = truth.index_sets.r1
    r2 = truth.index_sets.r2
    fgm_cfg = FgmConfig(cfg.lambda_tilde, cfg.max_iter, cfg.delta)
    records = []
    for algo in cfg.algorithms:
        base = dict(algorithm=algo, noise_level=eps, eps_index=eps_index,
                    trial=trial, seed=seed)
        try:
            if algo == "nmf":
                tic = time.perf_counter()
                W, H, _ = nmf_ahals(inst.M, r1 + r2, iters=cfg.nmf_iters, seed=seed)
                wall = time.perf_counter() - tic
                rel = frobenius_norm(inst.M - W @ H) / frobenius_norm(inst.M)
                dist = ground_truth_distance(W, H, truth)
                records.append(ExperimentRecord(**base, accuracy=None, relative_error=rel,
                                                distance_to_ground_truth=dist,
                                                wall_time_seconds=wall,
                                                r1_found=None, r2_found=None))
            else:
                tic = time.perf_counter()
                sets = extract_index_sets(algo, inst.M, r1, r2, fgm_cfg)
                wall = time.perf_counter() - tic
                dec = fit_weights(inst.M, sets)
                W, H = assemble_factors(inst.M, dec)
                records.append(ExperimentRecord(
                    **base,
                    accuracy=accuracy(sets, truth.index_sets),
                    relative_error=dec.relative_error,
                    distance_to_ground_truth=ground_truth_distance(W, H, truth),
                    wall_time_seconds=wall,
                    r1_found=sets.r1, r2_found=sets.r2))
        except Exception as exc:  # noqa: BLE001 - a failed trial must not kill the sweep
            records.append(ExperimentRecord(**base, accuracy=None, relative_error=None,
                                            distance_to_ground_truth=None,
                                            wall_time_seconds=0.0,
                                            r1_found=None, r2_found=None, error=str(exc)))
    return records


def run_sweep(cfg: SweepConfig, workers: int | None = None):
    """Run all (noise level, trial) cells and return records plus aggregate means.

    Aggregates map ``(algorithm, eps_index)`` to the per-metric arithmetic
    means over trials (``None`` where a metric is undefined for the
    algorithm, e.g. accuracy for the NMF baseline).
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    tasks = [(e, t) for e in range(len(cfg.noise_levels)) for t in range(cfg.trials)]
    by_key = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_trial, cfg, e, t): (e, t) for e, t in tasks}
            for fut, key in futures.items():
                by_key[key] = fut.result()
    else:
        for e, t in tasks:
            by_key[(e, t)] = _run_trial(cfg, e, t)

    records = []
    for e, t in tasks:  # canonical order regardless of completion order
        records.extend(by_key[(e, t)])
    return records, _aggregate(records, cfg)


def emit_figure_data(records, cfg: SweepConfig, out_dir) -> list:
    """Write one CSV per metric (rows = noise levels, columns = algorithms).

    Also writes ``manifest.json`` (config echo) and ``records.jsonl`` (every
    record, including wall times; the CSVs themselves contain no timing so
    replays are byte-identical).
    """
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    aggregates = _aggregate(records, cfg)
    written = []
    for metric in ("accuracy", "relative_error", "distance_to_ground_truth"):
        path = out / f"{metric}.csv"
        lines = ["eps," + ",".join(cfg.algorithms)]
        for e, eps in enumerate(cfg.noise_levels):
            cells = []
            for algo in cfg.algorithms:
                val = aggregates[(algo, e)][metric]
                cells.append("" if val is None else f"{val:.17g}")
            lines.append(f"{eps:.17g}," + ",".join(cells))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    manifest = {"config": dataclasses.asdict(cfg)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    with (out / "records.jsonl").open("w") as fh:
        for rec in records:
            fh.write(json.dumps(dataclasses.asdict(rec), sort_keys=True) + "\n")
    return written


def _aggregate(records, cfg: SweepConfig):
    aggregates = {}
    for algo in cfg.algorithms:
        for e in range(len(cfg.noise_levels)):
            cell = [r for r in records
                    if r.algorithm == algo and r.eps_index == e and r.error is None]
            aggregates[(algo, e)] = {
                "accuracy": _mean([r.accuracy for r in cell if r.accuracy is not None]),
                "relative_error": _mean([r.relative_error for r in cell
                                         if r.relative_error is not None]),
                "distance_to_ground_truth": _mean(
                    [r.distance_to_ground_truth for r in cell
                     if r.distance_to_ground_truth is not None]),
            }
    return aggregates


def _mean(vals):
    return None if not vals else sum(vals) / len(vals)


def run_single(matrix_path, algorithm: str, r1: int | None = None, r2: int | None = None,
               r: int | None = None, no_scale: bool = False,
               fgm_cfg: FgmConfig | None = None):
    """Load a matrix, equilibrate (unless ``no_scale``), select indices, fit weights.

    Index selection runs on the scaled matrix; the weights and relative error
    are fitted on the original, since the decomposition is scaling-invariant.
    Returns ``(decomposition, report_dict)``.
    """
    if algorithm not in ALGORITHMS or algorithm == "nmf":
        raise ValueError(f"algorithm must be one of {[a for a in ALGORITHMS if a != 'nmf']}")
    M = nonnegative_matrix(load_matrix(matrix_path))
    if algorithm in ("gspa", "spa-c", "spa-r"):
        if r is None:
            if r1 is None or r2 is None:
                raise ValueError(f"{algorithm} needs --rank (or both --r1 and --r2)")
            r = r1 + r2
        r1_eff, r2_eff = r, 0  # extract_index_sets only uses the total for these
    else:
        if r1 is None or r2 is None:
            raise ValueError(f"{algorithm} needs both --r1 and --r2")
        r1_eff, r2_eff = r1, r2

    work = M if no_scale else sinkhorn_scale(M).scaled
    tic = time.perf_counter()
    sets = extract_index_sets(algorithm, work, r1_eff, r2_eff, fgm_cfg)
    wall = time.perf_counter() - tic
    dec = fit_weights(M, sets)
    report = {
        "algorithm": algorithm,
        "matrix": str(matrix_path),
        "scaled": not no_scale,
        "cols_1based": [i + 1 for i in sets.cols],
        "rows_1based": [i + 1 for i in sets.rows],
        "cols_0based": list(sets.cols),
        "rows_0based": list(sets.rows),
        "relative_error": dec.relative_error,
        "wall_time_seconds": wall,
    }
    return dec, report
