"""Dense nonnegative matrices and shared numerical primitives.

Matrices are plain 2-D float64 ``numpy`` arrays (row-major); the helpers here
validate them, compute norms, estimate the largest singular value, equilibrate
row/column sums, apply permutations, and read/write CSV and MatrixMarket files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse


def as_matrix(data) -> np.ndarray:
    """Coerce ``data`` to a 2-D float64 array with finite entries."""
    a = np.ascontiguousarray(data, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"matrix must have at least one row and one column, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix entries must be finite")
    return a


def nonnegative_matrix(data) -> np.ndarray:
    """Like :func:`as_matrix`, but reject any negative entry."""
    a = as_matrix(data)
    if (a < 0).any():
        raise ValueError("matrix has negative entries")
    return a


def frobenius_norm(M) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(M), "fro"))


def spectral_norm_estimate(M, tol: float = 1e-8, max_iter: int = 1000, seed: int = 0) -> float:
    """Estimate the largest singular value by the power method.

    Runs power iteration on the smaller Gram matrix of ``M`` from a seeded
    positive start vector, and stops when the Rayleigh quotient's relative
    change drops below ``tol``.  Deterministic for a fixed ``seed``; a zero
    matrix returns 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(M)
    if not M.any():
        return 0.0
    m, n = M.shape
    if n <= m:
        gram = lambda v: M.T @ (M @ v)
        dim = n
    else:
        gram = lambda v: M @ (M.T @ v)
        dim = m
    rng = np.random.default_rng(seed)
    v = rng.random(dim) + 0.5
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(max_iter):
        w = gram(v)
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector fell in the null space; nonneg inputs never get here
            return math.sqrt(max(new, 0.0))
        v = w / nw
        if new > 0 and abs(new - rayleigh) <= tol * new:
            rayleigh = new
            break
        rayleigh = new
    return math.sqrt(max(rayleigh, 0.0))


@dataclass
class ScalingResult:
    """Outcome of :func:`sinkhorn_scale`.

    ``scaled == diag(row_factors) @ original @ diag(col_factors)`` entrywise;
    when ``converged`` every column sums to ``k1`` and every row to ``k2``
    within the requested tolerance.
    """

    scaled: np.ndarray
    row_factors: np.ndarray
    col_factors: np.ndarray
    converged: bool
    iterations: int


def sinkhorn_scale(M, k1: float | None = None, k2: float | None = None,
                   tol: float = 1e-9, max_iter: int = 10000) -> ScalingResult:
    """Equilibrate ``M`` so column sums equal ``k1`` and row sums equal ``k2``.

    Alternately rescales rows then columns until the worst relative deviation
    of the sums drops below ``tol`` or ``max_iter`` passes are spent.  The
    targets must satisfy ``n*k1 == m*k2`` (total mass consistency); both
    default to ``k1 = m``, ``k2 = n``.  Matrices with an all-zero row or
    column cannot be scaled and are rejected.
    """
    M = nonnegative_matrix(M)
    m, n = M.shape
    if k1 is None and k2 is None:
        k1, k2 = float(m), float(n)
    if k1 is None or k2 is None:
        raise ValueError("give both targets k1 and k2, or neither")
    if k1 <= 0 or k2 <= 0:
        raise ValueError("scaling targets must be positive")
    if abs(n * k1 - m * k2) > 1e-9 * max(n * k1, m * k2):
        raise ValueError(f"inconsistent targets: n*k1={n * k1} != m*k2={m * k2}")
    if (M.sum(axis=1) == 0).any() or (M.sum(axis=0) == 0).any():
        raise ValueError("matrix with an all-zero row or column is not scalable")

    r = np.ones(m)
    c = np.ones(n)

    def deviation(r, c):
        rows = r * (M @ c)
        cols = c * (M.T @ r)
        return max(np.abs(rows - k2).max() / k2, np.abs(cols - k1).max() / k1)

    if deviation(r, c) <= tol:
        return ScalingResult(M.copy(), r, c, True, 0)

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = k2 / (M @ c)
        c = k1 / (M.T @ r)
        # column sums are now exact; only the row sums can still deviate
        rows = r * (M @ c)
        if np.abs(rows - k2).max() / k2 <= tol:
            converged = True
            break
    scaled = r[:, None] * M * c[None, :]
    return ScalingResult(scaled, r, c, converged, iterations)


def _check_permutation(perm, length: int, what: str) -> np.ndarray:
    p = np.asarray(perm, dtype=np.int64)
    if p.ndim != 1 or p.shape[0] != length:
        raise ValueError(f"{what} permutation must have length {length}")
    seen = np.zeros(length, dtype=bool)
    if (p < 0).any() or (p >= length).any():
        raise ValueError(f"{what} permutation has out-of-range entries")
    seen[p] = True
    if not seen.all():
        raise ValueError(f"{what} permutation is not a bijection")
    return p


def permute_rows_cols(M, row_perm, col_perm) -> np.ndarray:
    """Return the matrix with ``out[i, j] = M[row_perm[i], col_perm[j]]``."""
    M = as_matrix(M)
    rp = _check_permutation(row_perm, M.shape[0], "row")
    cp = _check_permutation(col_perm, M.shape[1], "column")
    return M[np.ix_(rp, cp)]


def save_matrix(path, M) -> None:
    """Write a matrix as CSV, or MatrixMarket array format for ``.mtx``/``.mm``.

    Values carry 17 significant digits so that a read-back is bit-exact.
    """
    M = as_matrix(M)
    path = Path(path)
    if path.suffix.lower() in (".mtx", ".mm"):
        scipy.io.mmwrite(str(path), M, precision=17)
    else:
        np.savetxt(path, M, delimiter=",", fmt="%.17g")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix` (CSV or MatrixMarket)."""
    path = Path(path)
    if path.stat().st_size == 0:
        raise ValueError(f"empty matrix file: {path}")
    if path.suffix.lower() in (".mtx", ".mm"):
        a = scipy.io.mmread(str(path))
        if scipy.sparse.issparse(a):
            a = a.toarray()
    else:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    return as_matrix(a)
