import math

import numpy as np
import pytest

from gsnmf import (
    as_matrix,
    frobenius_norm,
    load_matrix,
    nonnegative_matrix,
    permute_rows_cols,
    save_matrix,
    sinkhorn_scale,
    spectral_norm_estimate,
)

# 5x5 worked example, printed to 3 decimals (the golden small fixture)
PRINTED_M = np.array([
    [1, 0.001, 0.002, 0.006, 0.009],
    [1, 2, 0.006, 4.004, 7.005],
    [1, 3, 0.009, 7.005, 12.006],
    [0, 0, 1, 1, 1],
    [0, 0, 0.001, 2, 3],
])


def test_validators_reject_bad_input():
    with pytest.raises(ValueError):
        as_matrix(np.array([1.0, 2.0]))  # 1-D
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.nan, 1.0]]))
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.inf, 1.0]]))
    with pytest.raises(ValueError):
        nonnegative_matrix(np.array([[1.0, -1e-12]]))
    with pytest.raises(ValueError):
        as_matrix(np.zeros((0, 3)))


def test_frobenius_zero_and_identity():
    assert frobenius_norm(np.zeros((2, 2))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3), abs=1e-15)


def test_frobenius_against_direct_summation():
    # oracle: exact compensated summation over the 25 printed squared entries
    expected = math.sqrt(math.fsum(float(v) ** 2 for v in PRINTED_M.ravel()))
    assert frobenius_norm(PRINTED_M) == pytest.approx(expected, rel=1e-14)


def test_spectral_norm_diagonal_and_rank_one():
    assert spectral_norm_estimate(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-7)
    u = np.array([[0.6], [0.8]])
    v = np.array([[0.8, 0.6]])
    assert spectral_norm_estimate(u @ v) == pytest.approx(1.0, rel=1e-7)
    assert spectral_norm_estimate(np.zeros((3, 4))) == 0.0


def test_spectral_norm_against_eigensolver():
    rng = np.random.default_rng(42)
    for _ in range(5):
        M = rng.random((5, 4))
        # oracle: dense eigensolver on the Gram matrix
        expected = math.sqrt(max(np.linalg.eigvalsh(M.T @ M)))
        got = spectral_norm_estimate(M, tol=1e-10)
        assert got == pytest.approx(expected, rel=1e-8)


def test_spectral_norm_transpose_symmetry():
    rng = np.random.default_rng(3)
    M = rng.random((6, 9))
    a = spectral_norm_estimate(M, tol=1e-9)
    b = spectral_norm_estimate(M.T, tol=1e-9)
    assert abs(a - b) <= 2e-9 * max(a, b)


def test_sinkhorn_matches_printed_scaled_matrix():
    res = sinkhorn_scale(PRINTED_M, 5, 5)
    assert res.converged
    expected = np.array([
        [4.654, 0.028, 0.251, 0.034, 0.033],
        [0.212, 2.551, 0.034, 1.045, 1.157],
        [0.134, 2.421, 0.033, 1.157, 1.255],
        [0, 0, 4.654, 0.212, 0.134],
        [0, 0, 0.028, 2.551, 2.421],
    ])
    assert np.abs(res.scaled - expected).max() < 5e-4
    # reconstruction from the accumulated factors
    rebuilt = res.row_factors[:, None] * PRINTED_M * res.col_factors[None, :]
    assert np.allclose(rebuilt, res.scaled, atol=1e-12)


def test_sinkhorn_fixed_point_zero_iterations():
    M = np.full((3, 3), 1.0)  # rows and columns already sum to 3
    res = sinkhorn_scale(M, 3, 3)
    assert res.converged and res.iterations == 0
    assert np.array_equal(res.row_factors, np.ones(3))
    assert np.array_equal(res.col_factors, np.ones(3))


def test_sinkhorn_hits_targets_direct_summation():
    rng = np.random.default_rng(11)
    M = rng.random((6, 4)) + 0.05
    res = sinkhorn_scale(M, k1=6, k2=4, tol=1e-10)
    assert res.converged
    # oracle: direct row/column summation
    assert np.abs(res.scaled.sum(axis=0) - 6).max() < 1e-8
    assert np.abs(res.scaled.sum(axis=1) - 4).max() < 1e-8


def test_sinkhorn_rejects_bad_targets_and_zero_lines():
    with pytest.raises(ValueError):
        sinkhorn_scale(np.ones((2, 3)), k1=1.0, k2=1.0)  # 3*1 != 2*1
    M = np.ones((3, 3))
    M[1, :] = 0.0
    with pytest.raises(ValueError):
        sinkhorn_scale(M)


def test_sinkhorn_nonconvergence_flag():
    rng = np.random.default_rng(0)
    M = rng.random((5, 5)) + 0.1
    res = sinkhorn_scale(M, tol=1e-14, max_iter=1)
    assert not res.converged


def test_sinkhorn_prescaling_invariance():
    # equilibration of a positive matrix is unique: diagonal prescaling must not matter
    rng = np.random.default_rng(5)
    M = rng.random((5, 7)) + 0.2
    tol = 1e-10
    base = sinkhorn_scale(M, tol=tol)
    d1 = rng.random(5) + 0.5
    d2 = rng.random(7) + 0.5
    pre = sinkhorn_scale(d1[:, None] * M * d2[None, :], tol=tol)
    assert np.abs(base.scaled - pre.scaled).max() <= 10 * tol * base.scaled.max()


def test_permute_identity_and_involution():
    rng = np.random.default_rng(2)
    M = rng.random((4, 5))
    ident = permute_rows_cols(M, np.arange(4), np.arange(5))
    assert np.array_equal(ident, M)
    swap = np.array([1, 0, 2, 3])
    twice = permute_rows_cols(permute_rows_cols(M, swap, np.arange(5)), swap, np.arange(5))
    assert np.array_equal(twice, M)


def test_permute_against_index_formula():
    rng = np.random.default_rng(9)
    M = rng.random((3, 3))
    rp = rng.permutation(3)
    cp = rng.permutation(3)
    out = permute_rows_cols(M, rp, cp)
    for i in range(3):
        for j in range(3):
            assert out[i, j] == M[rp[i], cp[j]]
    assert frobenius_norm(out) == pytest.approx(frobenius_norm(M), rel=1e-15)


def test_permute_rejects_non_bijections():
    M = np.ones((3, 3))
    with pytest.raises(ValueError):
        permute_rows_cols(M, [0, 0, 1], np.arange(3))
    with pytest.raises(ValueError):
        permute_rows_cols(M, [0, 1], np.arange(3))


def test_csv_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(7)
    M = rng.random((6, 3)) * 1e3
    path = tmp_path / "m.csv"
    save_matrix(path, M)
    assert np.array_equal(load_matrix(path), M)


def test_matrixmarket_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(8)
    M = rng.random((4, 5))
    path = tmp_path / "m.mtx"
    save_matrix(path, M)
    assert np.array_equal(load_matrix(path), M)


def test_load_single_row_and_errors(tmp_path):
    path = tmp_path / "row.csv"
    path.write_text("1.0,2.0,3.0\n")
    assert load_matrix(path).shape == (1, 3)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValueError):
        load_matrix(empty)
