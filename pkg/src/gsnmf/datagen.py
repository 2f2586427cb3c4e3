"""Reproducible synthetic instances and constructive fixtures.

Instances are built in block form

    [[W1, W1 @ H1 + W2 @ H2],
     [0,  H2]]

(the first ``r1`` columns and last ``r2`` rows are the planted basis),
equilibrated, perturbed by norm-controlled noise, clamped at zero, and
randomly permuted.  Ground-truth factors come from the scaled un-permuted
blocks and are stored in the emitted (permuted) frame so metrics can compare
directly against algorithm output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .decomposition import GroundTruth, IndexSets
from .matrix import frobenius_norm, load_matrix, save_matrix, sinkhorn_scale

_SCALE_RETRIES = 10


@dataclass
class SyntheticInstance:
    """Generated matrix plus everything needed to score recovery against it."""

    M: np.ndarray
    truth: GroundTruth
    noise_level: float
    row_perm: np.ndarray
    col_perm: np.ndarray
    seed: int


def _sparse_uniform(rng, shape, density: float = 0.5) -> np.ndarray:
    """Entries are uniform [0,1] with probability ``density``, else exactly zero."""
    vals = rng.random(shape)
    keep = rng.random(shape) < density
    return np.where(keep, vals, 0.0)


def _assemble_block(W1, H1, W2, H2, m, n, r1, r2) -> np.ndarray:
    B = np.zeros((m, n))
    B[: m - r2, :r1] = W1
    B[: m - r2, r1:] = W1 @ H1 + W2 @ H2
    B[m - r2 :, r1:] = H2
    return B


def _planted_factors(Ms, H1, W2, scaling, m, n, r1, r2):
    """Ground-truth factors of the scaled block matrix ``Ms``.

    The off-diagonal blocks of the scaled decomposition are the original
    ``H1``/``W2`` conjugated by the accumulated scaling factors.
    """
    u = scaling.row_factors[: m - r2]
    v = scaling.row_factors[m - r2 :]
    a = scaling.col_factors[:r1]
    b = scaling.col_factors[r1:]
    H1s = H1 * b[None, :] / a[:, None] if r1 else H1
    W2s = W2 * u[:, None] / v[None, :] if r2 else W2
    r = r1 + r2
    W = np.zeros((m, r))
    W[: m - r2, :r1] = Ms[: m - r2, :r1]
    W[: m - r2, r1:] = W2s
    W[m - r2 :, r1:] = np.eye(r2)
    H = np.zeros((r, n))
    H[:r1, :r1] = np.eye(r1)
    H[:r1, r1:] = H1s
    H[r1:, r1:] = Ms[m - r2 :, r1:]
    return W, H


def _finish_instance(rng, blocks, noise, eps, seed, m, n, r1, r2) -> SyntheticInstance:
    W1, H1, W2, H2, scaling, Ms = blocks
    norm_Ms = frobenius_norm(Ms)
    if eps > 0:
        nn = frobenius_norm(noise)
        noisy = Ms + noise * (eps * norm_Ms / nn)
    else:
        noisy = Ms
    clamped = np.maximum(0.0, noisy)

    row_perm = rng.permutation(m)
    col_perm = rng.permutation(n)
    M = clamped[np.ix_(row_perm, col_perm)]

    Wb, Hb = _planted_factors(Ms, H1, W2, scaling, m, n, r1, r2)
    K1 = tuple(int(j) for j in np.flatnonzero(col_perm < r1))
    K2 = tuple(int(i) for i in np.flatnonzero(row_perm >= m - r2))
    truth = GroundTruth(IndexSets(K1, K2), Wb[row_perm, :], Hb[:, col_perm])
    return SyntheticInstance(M, truth, float(eps), row_perm, col_perm, int(seed))


def gen_fully_random(m: int, n: int, r1: int, r2: int, eps: float, seed: int) -> SyntheticInstance:
    """Random planted instance: dense uniform basis blocks, 50%-sparse mixing blocks.

    Noise is i.i.d. standard normal rescaled to ``||N||_F = eps * ||Ms||_F``.
    If the block matrix fails to equilibrate, the draw is retried with a fresh
    sub-seed (at most 10 attempts).
    """
    if not (0 <= r1 <= n and 0 <= r2 <= m and 1 <= r1 + r2 <= min(m, n)):
        raise ValueError(f"invalid ranks ({r1}, {r2}) for a {m}x{n} matrix")
    if eps < 0:
        raise ValueError("noise level must be nonnegative")
    for attempt in range(_SCALE_RETRIES):
        rng = np.random.default_rng((int(seed), attempt))
        W1 = rng.random((m - r2, r1))
        H1 = _sparse_uniform(rng, (r1, n - r1))
        W2 = _sparse_uniform(rng, (m - r2, r2))
        H2 = rng.random((r2, n - r1))
        block = _assemble_block(W1, H1, W2, H2, m, n, r1, r2)
        try:
            scaling = sinkhorn_scale(block)
        except ValueError:
            continue
        if not scaling.converged:
            continue
        noise = rng.standard_normal((m, n))
        blocks = (W1, H1, W2, H2, scaling, scaling.scaled)
        return _finish_instance(rng, blocks, noise, eps, seed, m, n, r1, r2)
    raise RuntimeError(f"failed to generate a scalable instance after {_SCALE_RETRIES} attempts")


def _two_hot(count: int, positions: int) -> np.ndarray:
    """All ``C(positions, 2)`` vectors with two entries equal to 0.5."""
    out = np.zeros((count, positions))
    for row, (i, j) in enumerate(combinations(range(positions), 2)):
        out[row, i] = 0.5
        out[row, j] = 0.5
    return out


def gen_middle_point(eps: float, seed: int) -> SyntheticInstance:
    """Adversarial instance: interior points are midpoints pushed outward.

    Fixed dimensions ``m=78, n=55, r1=10, r2=12`` so the mixing blocks can
    enumerate all two-element midpoint combinations (``C(10,2)=45`` interior
    columns, ``C(12,2)=66`` interior rows).  The noise is deterministic given
    the blocks: zero on the planted columns/rows, and on the interior block it
    points from the average basis element toward each data point, rescaled to
    ``||N||_F = eps * ||Ms||_F``.
    """
    m, n, r1, r2 = 78, 55, 10, 12
    if eps < 0:
        raise ValueError("noise level must be nonnegative")
    for attempt in range(_SCALE_RETRIES):
        rng = np.random.default_rng((int(seed), attempt))
        W1 = rng.random((m - r2, r1))
        H1 = _two_hot(n - r1, r1).T  # 10 x 45: columns are the two-hot combinations
        W2 = _two_hot(m - r2, r2)    # 66 x 12: rows are the two-hot combinations
        H2 = rng.random((r2, n - r1))
        block = _assemble_block(W1, H1, W2, H2, m, n, r1, r2)
        try:
            scaling = sinkhorn_scale(block)
        except ValueError:
            continue
        if not scaling.converged:
            continue
        Ms = scaling.scaled
        wbar = Ms[: m - r2, :r1].mean(axis=1)
        hbar = Ms[m - r2 :, r1:].mean(axis=0)
        noise = np.zeros((m, n))
        noise[: m - r2, r1:] = Ms[: m - r2, r1:] - wbar[:, None] - hbar[None, :]
        blocks = (W1, H1, W2, H2, scaling, Ms)
        return _finish_instance(rng, blocks, noise, eps, seed, m, n, r1, r2)
    raise RuntimeError(f"failed to generate a scalable instance after {_SCALE_RETRIES} attempts")


# Equilibrated form of greedy_failure_matrix(0.001), printed to 3 decimals.
# Its best-scoring column (third) and row (first) tie and lie outside the
# planted sets, so the greedy selector picks them first.
GREEDY_FAILURE_SCALED_REF = np.array([
    [4.654, 0.028, 0.251, 0.034, 0.033],
    [0.212, 2.551, 0.034, 1.045, 1.157],
    [0.134, 2.421, 0.033, 1.157, 1.255],
    [0.000, 0.000, 4.654, 0.212, 0.134],
    [0.000, 0.000, 0.028, 2.551, 2.421],
])


def greedy_failure_matrix(eps: float):
    """5x5 matrix with planted columns {0,1} and rows {3,4} that defeats the greedy selector.

    By symmetry of the construction (``H2 = W1.T``, ``W2 = H1.T``) the scaled
    matrix has a column and a row with identical best scores, neither of which
    is planted.  Returns the matrix and the 3-decimal reference of its scaled
    form for ``eps = 0.001``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    W1 = np.array([[1.0, eps], [1.0, 2.0], [1.0, 3.0]])
    H1 = np.array([[eps, 2 * eps, 3 * eps], [eps, 1.0, 2.0]])
    H2 = W1.T
    W2 = H1.T
    M = _assemble_block(W1, H1, W2, H2, 5, 5, 2, 2)
    return M, GREEDY_FAILURE_SCALED_REF.copy()


def curve_simplex_matrix(n: int) -> np.ndarray:
    """3 x n matrix whose columns are distinct vertices on a simplex curve.

    Columns 0-1 are unit vectors, columns 2-3 the curve endpoints, and the
    remaining ``n - 4`` columns sample ``(x, 2*(1/2 - x)**2, 1 - x - y)`` at
    distinct ``x`` in ``(0, 1/2)``.  Every column past the first two sums to
    one and is an extreme ray, so no column is a conic combination of the
    others, yet the matrix admits a compact 2-column + 1-row decomposition.
    """
    if n < 4:
        raise ValueError("need at least 4 columns")
    M = np.zeros((3, n))
    M[0, 0] = 1.0
    M[1, 1] = 1.0
    M[:, 2] = (0.5, 0.0, 0.5)
    M[:, 3] = (0.0, 0.5, 0.5)
    k = n - 4
    if k:
        xs = np.arange(1, k + 1) / (2.0 * (k + 1))
        ys = 2.0 * (0.5 - xs) ** 2
        M[0, 4:] = xs
        M[1, 4:] = ys
        M[2, 4:] = 1.0 - xs - ys
    return M


def compression_fixture(m: int, n: int) -> np.ndarray:
    """Deterministic ``(m+3) x (n+3)`` matrix compressible only by mixed selection.

    Anti-diagonal assembly of two curve-simplex matrices: selecting columns
    alone (or rows alone) needs nearly all of them, while 3 columns plus
    3 rows reconstruct it exactly.
    """
    Mn = curve_simplex_matrix(n)
    Mm = curve_simplex_matrix(m)
    out = np.zeros((m + 3, n + 3))
    out[:3, 3:] = Mn
    out[3:, :3] = Mm.T
    return out


def non_unique_fixture(r1: int, r2: int, r3: int, r4: int, m: int, n: int,
                       seed: int | None = None) -> np.ndarray:
    """Matrix with two distinct exact decompositions of the same total size.

    Built from a 3 x 3 block-upper-triangular template whose third block
    column is expressible through either the first ``r1`` columns + last
    ``r2`` rows or the first ``r3`` columns + last ``r4`` rows
    (``r1 > r3``, ``r2 < r4``, ``r1 + r2 == r3 + r4``).  ``seed=None`` uses the
    all-ones parameterization; otherwise blocks are drawn uniform [0,1].
    """
    if not (r1 > r3 >= 1 and 1 <= r2 < r4 and r1 + r2 == r3 + r4):
        raise ValueError("need r1 > r3 >= 1, r4 > r2 >= 1 and r1 + r2 == r3 + r4")
    if m <= r4 or n <= r1:
        raise ValueError("dimensions too small for the requested ranks")
    shapes = {
        "M11": (m - r4, r3),
        "M22": (r4 - r2, r1 - r3),
        "M33": (r2, n - r1),
        "X1": (r3, n - r1),
        "Y1": (m - r4, r2),
        "X2": (r1 - r3, n - r1),
        "Y2": (r4 - r2, r2),
    }
    if seed is None:
        blk = {k: np.ones(s) for k, s in shapes.items()}
    else:
        rng = np.random.default_rng(seed)
        blk = {k: rng.random(s) for k, s in shapes.items()}
    M13 = blk["M11"] @ blk["X1"] + blk["Y1"] @ blk["M33"]
    M23 = blk["M22"] @ blk["X2"] + blk["Y2"] @ blk["M33"]
    M = np.zeros((m, n))
    M[: m - r4, :r3] = blk["M11"]
    M[m - r4 : m - r2, r3:r1] = blk["M22"]
    M[m - r2 :, r1:] = blk["M33"]
    M[: m - r4, r1:] = M13
    M[m - r4 : m - r2, r1:] = M23
    return M


def save_instance(inst: SyntheticInstance, out_dir) -> None:
    """Serialize an instance to a directory (matrix CSV, truth and permutation JSON)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / "matrix.csv", inst.M)
    save_matrix(out / "wstar.csv", inst.truth.Wstar)
    save_matrix(out / "hstar.csv", inst.truth.Hstar)
    truth = {
        "cols_0based": list(inst.truth.index_sets.cols),
        "rows_0based": list(inst.truth.index_sets.rows),
        "cols_1based": [i + 1 for i in inst.truth.index_sets.cols],
        "rows_1based": [i + 1 for i in inst.truth.index_sets.rows],
        "seed": inst.seed,
        "noise_level": inst.noise_level,
        "wstar_file": "wstar.csv",
        "hstar_file": "hstar.csv",
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    perms = {
        "row_perm": [int(i) for i in inst.row_perm],
        "col_perm": [int(j) for j in inst.col_perm],
    }
    (out / "permutations.json").write_text(json.dumps(perms, indent=2, sort_keys=True) + "\n")


def load_instance(in_dir) -> SyntheticInstance:
    src = Path(in_dir)
    M = load_matrix(src / "matrix.csv")
    truth_doc = json.loads((src / "truth.json").read_text())
    perms = json.loads((src / "permutations.json").read_text())
    truth = GroundTruth(
        IndexSets(tuple(truth_doc["cols_0based"]), tuple(truth_doc["rows_0based"])),
        load_matrix(src / truth_doc["wstar_file"]),
        load_matrix(src / truth_doc["hstar_file"]),
    )
    return SyntheticInstance(
        M, truth, float(truth_doc["noise_level"]),
        np.asarray(perms["row_perm"], dtype=np.int64),
        np.asarray(perms["col_perm"], dtype=np.int64),
        int(truth_doc["seed"]),
    )
