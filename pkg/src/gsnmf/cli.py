"""Command-line front end: generate instances, run algorithms, sweep noise levels.

Subcommands: ``synth`` (instance to a directory), ``run`` (one algorithm on a
matrix file), ``sweep`` (noise grid x trials, figure-ready CSVs), ``scale``
(equilibrate a matrix file), ``metrics`` (score a decomposition against a
matrix and optional ground truth).  Index sets print 1-based; files store
0-based (truth files carry both).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ALGORITHMS,
    GENERATORS,
    SweepConfig,
    emit_figure_data,
    run_single,
    run_sweep,
)
from .datagen import gen_fully_random, gen_middle_point, save_instance
from .decomposition import (
    GroundTruth,
    IndexSets,
    accuracy,
    assemble_factors,
    distance_to_ground_truth,
    fit_weights,
    load_decomposition,
)
from .gsfgm import FgmConfig
from .matrix import load_matrix, nonnegative_matrix, save_matrix, sinkhorn_scale


def _parse_indices(text: str) -> tuple:
    """Comma-separated 1-based indices -> 0-based tuple."""
    if not text.strip():
        return ()
    return tuple(int(tok) - 1 for tok in text.split(","))


def _fgm_cfg(args) -> FgmConfig:
    return FgmConfig(lambda_tilde=args.lambda_tilde, max_iter=args.max_iter,
                     delta=args.delta)


def _cmd_synth(args) -> int:
    if args.generator == "fully-random":
        inst = gen_fully_random(args.m, args.n, args.r1, args.r2, args.eps, args.seed)
    else:
        inst = gen_middle_point(args.eps, args.seed)
    save_instance(inst, args.out)
    print(f"wrote instance to {args.out} "
          f"(shape {inst.M.shape[0]}x{inst.M.shape[1]}, eps={inst.noise_level}, seed={inst.seed})")
    return 0


def _cmd_run(args) -> int:
    dec, report = run_single(args.matrix, args.algo, r1=args.r1, r2=args.r2,
                             r=args.rank, no_scale=args.no_scale, fgm_cfg=_fgm_cfg(args))
    print(f"algorithm: {report['algorithm']}")
    print(f"columns (1-based): {report['cols_1based']}")
    print(f"rows (1-based):    {report['rows_1based']}")
    print(f"relative error:    {report['relative_error']:.6e}")
    print(f"wall time:         {report['wall_time_seconds']:.3f}s")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_sweep(args) -> int:
    if args.eps_grid:
        levels = tuple(float(tok) for tok in args.eps_grid.split(","))
    else:
        levels = tuple(float(e) for e in np.logspace(-3, 0, 20))
    cfg = SweepConfig(
        generator=args.generator,
        noise_levels=levels,
        trials=args.trials,
        algorithms=tuple(args.algos.split(",")),
        m=args.m, n=args.n, r1=args.r1, r2=args.r2,
        base_seed=args.seed,
        lambda_tilde=args.lambda_tilde,
        delta=args.delta,
        max_iter=args.max_iter,
    )
    records, _ = run_sweep(cfg)
    written = emit_figure_data(records, cfg, args.out)
    failed = [r for r in records if r.error is not None]
    print(f"{len(records)} records ({len(failed)} failed) -> {args.out}")
    for path in written:
        print(f"  {path.name}")
    return 0


def _cmd_scale(args) -> int:
    M = nonnegative_matrix(load_matrix(args.matrix))
    result = sinkhorn_scale(M, args.k1, args.k2, tol=args.tol, max_iter=args.max_iter)
    save_matrix(args.out, result.scaled)
    print(f"converged: {result.converged} after {result.iterations} iterations")
    if args.factors_out:
        doc = {
            "row_factors": [float(v) for v in result.row_factors],
            "col_factors": [float(v) for v in result.col_factors],
            "converged": result.converged,
            "iterations": result.iterations,
        }
        Path(args.factors_out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_metrics(args) -> int:
    M = nonnegative_matrix(load_matrix(args.matrix))
    if args.decomposition:
        dec = load_decomposition(args.decomposition, m=M.shape[0], n=M.shape[1])
        sets = dec.index_sets
    else:
        sets = IndexSets(_parse_indices(args.cols or ""), _parse_indices(args.rows or ""))
    dec = fit_weights(M, sets)
    out = {
        "cols_1based": [i + 1 for i in sets.cols],
        "rows_1based": [i + 1 for i in sets.rows],
        "relative_error": dec.relative_error,
    }
    if args.truth:
        truth_doc = json.loads(Path(args.truth).read_text())
        truth_sets = IndexSets(tuple(truth_doc["cols_0based"]), tuple(truth_doc["rows_0based"]))
        out["accuracy"] = accuracy(sets, truth_sets)
        if truth_doc.get("wstar_file"):
            base = Path(args.truth).parent
            truth = GroundTruth(truth_sets,
                                load_matrix(base / truth_doc["wstar_file"]),
                                load_matrix(base / truth_doc["hstar_file"]))
            W, H = assemble_factors(M, dec)
            if W.shape[1] == truth.rank:
                out["distance_to_ground_truth"] = distance_to_ground_truth(W, H, truth)
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsnmf",
                                     description="Generalized separable NMF toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic instance into a directory")
    p.add_argument("--generator", choices=GENERATORS, default="fully-random")
    p.add_argument("--m", type=int, default=60)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--r1", type=int, default=10)
    p.add_argument("--r2", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="run one algorithm on a matrix file")
    p.add_argument("matrix")
    p.add_argument("--algo", choices=[a for a in ALGORITHMS if a != "nmf"], required=True)
    p.add_argument("--rank", type=int, default=None, help="total number of indices r")
    p.add_argument("--r1", type=int, default=None)
    p.add_argument("--r2", type=int, default=None)
    p.add_argument("--no-scale", action="store_true")
    p.add_argument("--lambda-tilde", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", default=None, help="write a JSON report here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="benchmark sweep over noise levels")
    p.add_argument("--generator", choices=GENERATORS, default="fully-random")
    p.add_argument("--eps-grid", default=None,
                   help="comma-separated noise levels (default: 20 log-spaced in [1e-3, 1])")
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--algos", default=",".join(ALGORITHMS))
    p.add_argument("--m", type=int, default=60)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--r1", type=int, default=10)
    p.add_argument("--r2", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-tilde", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scale", help="equilibrate row/column sums of a matrix file")
    p.add_argument("matrix")
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--k2", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--out", required=True)
    p.add_argument("--factors-out", default=None)
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("metrics", help="score index sets / a decomposition on a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--decomposition", default=None, help="decomposition JSON file")
    p.add_argument("--cols", default=None, help="comma-separated 1-based column indices")
    p.add_argument("--rows", default=None, help="comma-separated 1-based row indices")
    p.add_argument("--truth", default=None, help="truth JSON file")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
