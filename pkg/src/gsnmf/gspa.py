"""Greedy column/row selection by successive orthogonal projections.

``spa`` is the classical column selector: repeatedly take the column of the
residual with the largest squared 2-norm and project every column onto its
orthogonal complement.  ``gspa`` generalizes it by letting columns and rows
compete at every step: the best column score ``n * ||R[:,p]||**2`` is compared
against the best row score ``m * ||R[q,:]||**2`` and the winner is deflated.
``spa_star``/``spa_c``/``spa_r`` are composite baselines built from ``spa``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .decomposition import IndexSets
from .matrix import as_matrix, frobenius_norm

# residuals below this fraction of ||M||_F count as zero and stop the loops
_ZERO_RESIDUAL = 1e-12


@dataclass
class TraceStep:
    kind: str            # "column" or "row"
    index: int
    score: float         # selection score at the time of extraction
    residual_after: float


@dataclass
class ExtractionTrace:
    """Ordered record of the selections an extraction made."""

    steps: list

    def to_jsonl(self) -> str:
        lines = [json.dumps({"kind": s.kind, "index": s.index, "score": s.score,
                             "residual_after": s.residual_after}) for s in self.steps]
        return "\n".join(lines) + ("\n" if lines else "")


def deflate_column(R: np.ndarray, p: int) -> None:
    """Project all columns of ``R`` onto the orthogonal complement of ``R[:,p]`` (in place)."""
    u = R[:, p].copy()
    R -= np.outer(u, u @ R) / (u @ u)
    R[:, p] = 0.0  # exact zero instead of roundoff dust


def deflate_row(R: np.ndarray, q: int) -> None:
    """Project all rows of ``R`` onto the orthogonal complement of ``R[q,:]`` (in place)."""
    v = R[q, :].copy()
    R -= np.outer(R @ v, v) / (v @ v)
    R[q, :] = 0.0


def spa(M, r: int):
    """Select up to ``r`` columns greedily by largest residual 2-norm.

    Returns the extracted column indices in selection order plus the trace.
    Stops early once the residual vanishes.
    """
    M = as_matrix(M)
    m, n = M.shape
    if r < 0 or r > n:
        raise ValueError(f"r must be in [0, {n}], got {r}")
    norm0 = frobenius_norm(M)
    if norm0 == 0.0:
        raise ValueError("cannot select columns of a zero matrix")
    R = M.copy()
    indices = []
    steps = []
    for _ in range(r):
        if frobenius_norm(R) <= _ZERO_RESIDUAL * norm0:
            break
        scores = (R * R).sum(axis=0)
        p = int(np.argmax(scores))
        deflate_column(R, p)
        indices.append(p)
        steps.append(TraceStep("column", p, float(scores[p]), frobenius_norm(R)))
    return indices, ExtractionTrace(steps)


def gspa(M, r: int):
    """Jointly select columns and rows, deflating whichever scores higher.

    Expects an already equilibrated matrix (no internal rescaling).  At every
    step the best column score ``n * ||R[:,p]||**2`` competes with the best row
    score ``m * ||R[q,:]||**2``; ties go to the column.  Stops after ``r``
    total indices or once the residual vanishes.
    """
    M = as_matrix(M)
    m, n = M.shape
    if r < 1 or r > m + n:
        raise ValueError(f"r must be in [1, {m + n}], got {r}")
    norm0 = frobenius_norm(M)
    if norm0 == 0.0:
        raise ValueError("cannot select from a zero matrix")
    R = M.copy()
    K1 = []
    K2 = []
    steps = []
    while frobenius_norm(R) > _ZERO_RESIDUAL * norm0 and len(K1) + len(K2) < r:
        col_scores = n * (R * R).sum(axis=0)
        row_scores = m * (R * R).sum(axis=1)
        p = int(np.argmax(col_scores))
        q = int(np.argmax(row_scores))
        if col_scores[p] >= row_scores[q]:
            score = float(col_scores[p])
            deflate_column(R, p)
            K1.append(p)
            steps.append(TraceStep("column", p, score, frobenius_norm(R)))
        else:
            score = float(row_scores[q])
            deflate_row(R, q)
            K2.append(q)
            steps.append(TraceStep("row", q, score, frobenius_norm(R)))
    return IndexSets(tuple(K1), tuple(K2)), ExtractionTrace(steps)


def spa_star(M, r1: int, r2: int) -> IndexSets:
    """Run ``spa`` on ``M`` for ``r1`` columns and on ``M.T`` for ``r2`` rows."""
    M = as_matrix(M)
    cols = spa(M, r1)[0] if r1 else []
    rows = spa(M.T, r2)[0] if r2 else []
    return IndexSets(tuple(cols), tuple(rows))


def spa_c(M, r: int) -> IndexSets:
    """Columns-only baseline: ``r`` columns, no rows."""
    cols, _ = spa(M, r)
    return IndexSets(tuple(cols), ())


def spa_r(M, r: int) -> IndexSets:
    """Rows-only baseline: ``r`` rows, no columns."""
    rows, _ = spa(as_matrix(M).T, r)
    return IndexSets((), tuple(rows))
