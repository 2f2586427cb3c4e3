"""Column/row decompositions ``M ~ M[:,K1] @ P1 + P2 @ M[K2,:]``.

Holds the index-set data model, nonnegative least-squares fitting of the
weight matrices for fixed index sets, the three evaluation metrics
(accuracy, relative approximation error, distance to ground truth), and an
accelerated-HALS NMF baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matrix import as_matrix, frobenius_norm, load_matrix, nonnegative_matrix, save_matrix


@dataclass(frozen=True)
class IndexSets:
    """Sorted, distinct 0-based column indices ``cols`` and row indices ``rows``."""

    cols: tuple
    rows: tuple

    def __post_init__(self):
        cols = tuple(sorted(int(i) for i in self.cols))
        rows = tuple(sorted(int(i) for i in self.rows))
        if len(set(cols)) != len(cols) or len(set(rows)) != len(rows):
            raise ValueError("index sets must not contain duplicates")
        if (cols and cols[0] < 0) or (rows and rows[0] < 0):
            raise ValueError("indices must be nonnegative")
        if len(cols) + len(rows) < 1:
            raise ValueError("at least one column or row index is required")
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "rows", rows)

    @property
    def r1(self) -> int:
        return len(self.cols)

    @property
    def r2(self) -> int:
        return len(self.rows)

    def check_shape(self, m: int, n: int) -> None:
        if self.cols and self.cols[-1] >= n:
            raise ValueError(f"column index {self.cols[-1]} out of range for n={n}")
        if self.rows and self.rows[-1] >= m:
            raise ValueError(f"row index {self.rows[-1]} out of range for m={m}")


@dataclass
class GsDecomposition:
    """Index sets plus fitted nonnegative weights and the achieved relative error."""

    index_sets: IndexSets
    P1: np.ndarray  # r1 x n
    P2: np.ndarray  # m x r2
    relative_error: float


@dataclass
class GroundTruth:
    """Planted index sets and factors with ``Wstar @ Hstar`` the noiseless matrix."""

    index_sets: IndexSets
    Wstar: np.ndarray
    Hstar: np.ndarray

    @property
    def rank(self) -> int:
        return self.Wstar.shape[1]


def reconstruction(M, sets: IndexSets, P1, P2) -> np.ndarray:
    """Evaluate ``M[:,K1] @ P1 + P2 @ M[K2,:]``."""
    M = as_matrix(M)
    out = np.zeros_like(M)
    if sets.r1:
        out += M[:, list(sets.cols)] @ P1
    if sets.r2:
        out += P2 @ M[list(sets.rows), :]
    return out


def fit_weights(M, sets: IndexSets, inner_iters: int = 500, tol: float = 1e-8,
                return_history: bool = False):
    """Fit nonnegative weights ``(P1, P2)`` for fixed index sets.

    Minimizes ``||M - M[:,K1] @ P1 - P2 @ M[K2,:]||_F**2`` over ``P1, P2 >= 0``
    by exact cyclic coordinate descent: each sweep updates every column of
    ``P2`` then every row of ``P1`` in closed form, so the objective never
    increases.  Stops after ``inner_iters`` sweeps or when the relative
    objective decrease falls below ``tol``.  Basis columns/rows with zero norm
    get zero coefficients and are skipped.
    """
    M = as_matrix(M)
    m, n = M.shape
    sets.check_shape(m, n)
    K1 = list(sets.cols)
    K2 = list(sets.rows)
    r1, r2 = len(K1), len(K2)

    A = M[:, K1]
    B = M[K2, :]
    P1 = np.zeros((r1, n))
    P2 = np.zeros((m, r2))

    AtA = A.T @ A
    AtM = A.T @ M
    BBt = B @ B.T
    MBt = M @ B.T
    a_diag = AtA.diagonal().copy()
    b_diag = BBt.diagonal().copy()

    norm_M2 = float((M * M).sum())
    obj = norm_M2  # objective at the all-zero start
    history = [obj]
    for _ in range(inner_iters):
        prev = obj
        if r2:
            GBt = MBt - A @ (P1 @ B.T)
            for k in range(r2):
                if b_diag[k] <= 0.0:
                    P2[:, k] = 0.0
                    continue
                P2[:, k] = np.maximum(0.0, P2[:, k] + (GBt[:, k] - P2 @ BBt[:, k]) / b_diag[k])
        if r1:
            AtE = AtM - (A.T @ P2) @ B
            for k in range(r1):
                if a_diag[k] <= 0.0:
                    P1[k, :] = 0.0
                    continue
                P1[k, :] = np.maximum(0.0, P1[k, :] + (AtE[k, :] - AtA[k, :] @ P1) / a_diag[k])
        resid = M - reconstruction(M, sets, P1, P2)
        obj = float((resid * resid).sum())
        history.append(obj)
        if obj > prev + 1e-9 * max(prev, 1.0):
            raise ArithmeticError("coordinate-descent objective increased; numerical breakdown")
        if obj == 0.0 or (prev - obj) <= tol * prev:
            break

    if norm_M2 == 0.0:
        raise ValueError("relative error undefined for a zero matrix")
    dec = GsDecomposition(sets, P1, P2, math.sqrt(max(obj, 0.0) / norm_M2))
    if return_history:
        return dec, history
    return dec


def relative_error(M, dec: GsDecomposition) -> float:
    """``||M - M[:,K1] @ P1 - P2 @ M[K2,:]||_F / ||M||_F``, recomputed from fields."""
    M = as_matrix(M)
    denom = frobenius_norm(M)
    if denom == 0.0:
        raise ValueError("relative error undefined for a zero matrix")
    resid = M - reconstruction(M, dec.index_sets, dec.P1, dec.P2)
    return frobenius_norm(resid) / denom


def accuracy(found: IndexSets, truth: IndexSets) -> float:
    """Fraction of the planted column and row indices recovered."""
    total = truth.r1 + truth.r2
    if total == 0:
        raise ValueError("ground-truth index sets are empty")
    hits = len(set(found.cols) & set(truth.cols)) + len(set(found.rows) & set(truth.rows))
    return hits / total


def _best_match_distance(target: np.ndarray, candidate: np.ndarray, axis: int) -> float:
    """min over column (axis=1) or row (axis=0) permutations of ||target - candidate(perm)||_F."""
    if axis == 1:
        diffs = target.T[:, None, :] - candidate.T[None, :, :]
    else:
        diffs = target[:, None, :] - candidate[None, :, :]
    cost = (diffs * diffs).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(max(cost[rows, cols].sum(), 0.0))


def distance_to_ground_truth(W, H, truth: GroundTruth) -> float:
    """Permutation-invariant distance of ``(W, H)`` to the planted factors.

    The two permutations are optimized independently by optimal assignment on
    the pairwise squared-distance costs between columns of ``W`` and ``Wstar``
    (rows of ``H`` and ``Hstar``).
    """
    W = as_matrix(W)
    H = as_matrix(H)
    r = truth.rank
    if W.shape[1] != r or H.shape[0] != r:
        raise ValueError(f"factor rank mismatch: expected {r}, got W:{W.shape[1]}, H:{H.shape[0]}")
    nw = frobenius_norm(truth.Wstar)
    nh = frobenius_norm(truth.Hstar)
    if nw == 0.0 or nh == 0.0:
        raise ValueError("ground-truth factors must be nonzero")
    dw = _best_match_distance(truth.Wstar, W, axis=1)
    dh = _best_match_distance(truth.Hstar, H, axis=0)
    return dw / (2.0 * nw) + dh / (2.0 * nh)


def assemble_factors(M, dec: GsDecomposition):
    """Stack the decomposition into rank-``r1+r2`` factors ``W = [M[:,K1], P2]``, ``H = [P1; M[K2,:]]``."""
    M = as_matrix(M)
    sets = dec.index_sets
    W = np.hstack([M[:, list(sets.cols)], dec.P2])
    H = np.vstack([dec.P1, M[list(sets.rows), :]])
    return W, H


def _hals_sweep_cols(F, G, GtG):
    """One exact HALS pass over the columns of F for ||X - F @ ...||: F[:,k] update."""
    for k in range(F.shape[1]):
        d = GtG[k, k]
        if d <= 0.0:
            continue
        F[:, k] = np.maximum(0.0, F[:, k] + (G[:, k] - F @ GtG[:, k]) / d)


def _hals_sweep_rows(F, G, GtG):
    for k in range(F.shape[0]):
        d = GtG[k, k]
        if d <= 0.0:
            continue
        F[k, :] = np.maximum(0.0, F[k, :] + (G[k, :] - GtG[k, :] @ F) / d)


def _accelerated_block(update_sweep, objective, max_repeats: int = 10, keep_ratio: float = 0.01):
    """Repeat a block sweep while it keeps paying at least ``keep_ratio`` of the first decrease."""
    before = objective()
    update_sweep()
    after = objective()
    first = before - after
    repeats = 1
    while repeats < max_repeats and first > 0:
        update_sweep()
        new = objective()
        gain = after - new
        after = new
        repeats += 1
        if gain < keep_ratio * first:
            break


def nmf_ahals(M, r: int, iters: int = 1000, seed: int = 0):
    """Accelerated HALS NMF baseline: ``M ~ W @ H`` with ``W, H >= 0``.

    Alternates exact coordinate updates on the columns of ``W`` and rows of
    ``H``; each block is swept repeatedly while the sweep still pays off
    (at least 1% of its first decrease, capped at 10 sweeps).  Returns
    ``(W, H, residual_history)`` with one Frobenius residual per outer
    iteration; the history is nonincreasing.  Deterministic for a fixed seed.
    """
    M = nonnegative_matrix(M)
    m, n = M.shape
    if not (1 <= r <= min(m, n)):
        raise ValueError(f"rank must be in [1, {min(m, n)}], got {r}")
    rng = np.random.default_rng(seed)
    W = rng.random((m, r))
    H = rng.random((r, n))
    WH = W @ H
    den = float((WH * WH).sum())
    if den > 0:
        W *= float((M * WH).sum()) / den

    norm_M2 = float((M * M).sum())
    history = []
    for _ in range(iters):
        HHt = H @ H.T
        MHt = M @ H.T
        # phi_W = ||M - W H||^2 - ||M||^2, cheap in the factored form
        phi_w = lambda: float(-2.0 * (W * MHt).sum() + ((W.T @ W) * HHt).sum())
        _accelerated_block(lambda: _hals_sweep_cols(W, MHt, HHt), phi_w)

        WtW = W.T @ W
        WtM = W.T @ M
        phi_h = lambda: float(-2.0 * (H * WtM).sum() + ((H @ H.T) * WtW).sum())
        _accelerated_block(lambda: _hals_sweep_rows(H, WtM, WtW), phi_h)

        err2 = norm_M2 + phi_h()
        history.append(math.sqrt(max(err2, 0.0)))
    return W, H, history


def save_decomposition(dec: GsDecomposition, json_path) -> None:
    """Write a decomposition as JSON with CSV sidecars for the weight matrices.

    An empty index set has no sidecar; its file entry is ``null``.
    """
    json_path = Path(json_path)
    stem = json_path.with_suffix("").name
    doc = {
        "cols": list(dec.index_sets.cols),
        "rows": list(dec.index_sets.rows),
        "relative_error": dec.relative_error,
        "p1_file": None,
        "p2_file": None,
    }
    if dec.index_sets.r1:
        doc["p1_file"] = stem + "_p1.csv"
        save_matrix(json_path.parent / doc["p1_file"], dec.P1)
    if dec.index_sets.r2:
        doc["p2_file"] = stem + "_p2.csv"
        save_matrix(json_path.parent / doc["p2_file"], dec.P2)
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_decomposition(json_path, m: int | None = None, n: int | None = None) -> GsDecomposition:
    """Read a decomposition written by :func:`save_decomposition`.

    ``m``/``n`` size the empty weight matrices when an index set is empty.
    """
    json_path = Path(json_path)
    doc = json.loads(json_path.read_text())
    sets = IndexSets(tuple(doc["cols"]), tuple(doc["rows"]))
    if sets.r1:
        P1 = load_matrix(json_path.parent / doc["p1_file"])
    else:
        P1 = np.zeros((0, n if n is not None else 0))
    if sets.r2:
        P2 = load_matrix(json_path.parent / doc["p2_file"])
    else:
        P2 = np.zeros((m if m is not None else 0, 0))
    return GsDecomposition(sets, P1, P2, float(doc["relative_error"]))
