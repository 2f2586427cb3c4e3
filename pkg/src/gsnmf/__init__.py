"""Generalized separable NMF: approximate a nonnegative matrix by a few of its
own columns and rows, ``M ~ M[:,K1] @ P1 + P2 @ M[K2,:]``.

Provides a greedy joint column/row selector (:func:`gspa`), a convex
penalized model solved by an accelerated projected gradient method
(:func:`gsfgm_solve`), classical column-selection baselines, weight fitting
and evaluation metrics, synthetic instance generators, and a benchmark
harness with a command-line front end (``gsnmf``).
"""

from .matrix import (
    ScalingResult,
    as_matrix,
    frobenius_norm,
    load_matrix,
    nonnegative_matrix,
    permute_rows_cols,
    save_matrix,
    sinkhorn_scale,
    spectral_norm_estimate,
)
from .decomposition import (
    GroundTruth,
    GsDecomposition,
    IndexSets,
    accuracy,
    assemble_factors,
    distance_to_ground_truth,
    fit_weights,
    load_decomposition,
    nmf_ahals,
    reconstruction,
    relative_error,
    save_decomposition,
)
from .gspa import ExtractionTrace, TraceStep, gspa, spa, spa_c, spa_r, spa_star
from .gsfgm import (
    FgmConfig,
    OmegaSpec,
    SelfExpressiveSolution,
    fgm_gradients,
    gsfgm_solve,
    init_fgm,
    omega1_spec,
    omega2_spec,
    omega_violation,
    penalized_objective,
    post_process_diagonal,
    post_process_real_data,
    project_omega1,
    project_omega2,
    project_row_omega,
)
from .datagen import (
    GREEDY_FAILURE_SCALED_REF,
    SyntheticInstance,
    compression_fixture,
    curve_simplex_matrix,
    gen_fully_random,
    gen_middle_point,
    greedy_failure_matrix,
    load_instance,
    non_unique_fixture,
    save_instance,
)
from .bench import ExperimentRecord, SweepConfig, emit_figure_data, run_single, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
