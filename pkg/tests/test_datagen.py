import numpy as np
import pytest

from gsnmf import (
    GREEDY_FAILURE_SCALED_REF,
    IndexSets,
    compression_fixture,
    curve_simplex_matrix,
    fit_weights,
    frobenius_norm,
    gen_fully_random,
    gen_middle_point,
    greedy_failure_matrix,
    load_instance,
    non_unique_fixture,
    save_instance,
    sinkhorn_scale,
)

PRINTED_M = np.array([
    [1, 0.001, 0.002, 0.006, 0.009],
    [1, 2, 0.006, 4.004, 7.005],
    [1, 3, 0.009, 7.005, 12.006],
    [0, 0, 1, 1, 1],
    [0, 0, 0.001, 2, 3],
])


def test_golden_matrix_printed_entries():
    M, ref = greedy_failure_matrix(0.001)
    assert np.abs(M - PRINTED_M).max() < 5e-4
    assert M[1, 3] == pytest.approx(4.004, abs=5e-4)
    assert M[0, 4] == pytest.approx(0.009, abs=5e-4)
    assert np.all(M[3:, :2] == 0.0)  # zero block of the planted decomposition
    scaled = sinkhorn_scale(M, 5, 5).scaled
    assert np.abs(scaled - ref).max() < 5e-4
    assert np.array_equal(ref, GREEDY_FAILURE_SCALED_REF)
    with pytest.raises(ValueError):
        greedy_failure_matrix(0.0)


def test_fully_random_noiseless_structure():
    inst = gen_fully_random(12, 10, 3, 2, 0.0, seed=6)
    t = inst.truth
    assert inst.M.shape == (12, 10)
    assert (inst.M >= 0).all()
    assert t.index_sets.r1 == 3 and t.index_sets.r2 == 2
    # planted factors reproduce the emitted matrix exactly at eps=0
    assert np.abs(t.Wstar @ t.Hstar - inst.M).max() < 1e-12
    assert fit_weights(inst.M, t.index_sets).relative_error <= 1e-8


def test_fully_random_zero_block_many_seeds():
    for seed in range(20):
        inst = gen_fully_random(14, 11, 3, 2, 0.0, seed)
        block = inst.M[np.ix_(inst.truth.index_sets.rows, inst.truth.index_sets.cols)]
        assert np.all(block == 0.0), f"seed {seed}"


def test_fully_random_determinism_and_seed_sensitivity():
    a = gen_fully_random(10, 9, 2, 2, 0.05, seed=42)
    b = gen_fully_random(10, 9, 2, 2, 0.05, seed=42)
    c = gen_fully_random(10, 9, 2, 2, 0.05, seed=43)
    assert np.array_equal(a.M, b.M)
    assert np.array_equal(a.row_perm, b.row_perm)
    assert not np.array_equal(a.M, c.M)


def test_fully_random_matches_documented_draw_order():
    # independent reconstruction: replay the documented draw order
    # (W1, H1, W2, H2, N, permutations) and rebuild the instance
    m, n, r1, r2, eps, seed = 9, 8, 2, 2, 0.01, 5
    inst = gen_fully_random(m, n, r1, r2, eps, seed)
    rng = np.random.default_rng((seed, 0))
    W1 = rng.random((m - r2, r1))
    v1 = rng.random((r1, n - r1))
    k1 = rng.random((r1, n - r1)) < 0.5
    H1 = np.where(k1, v1, 0.0)
    v2 = rng.random((m - r2, r2))
    k2 = rng.random((m - r2, r2)) < 0.5
    W2 = np.where(k2, v2, 0.0)
    H2 = rng.random((r2, n - r1))
    block = np.zeros((m, n))
    block[: m - r2, :r1] = W1
    block[: m - r2, r1:] = W1 @ H1 + W2 @ H2
    block[m - r2 :, r1:] = H2
    scal = sinkhorn_scale(block)
    N = rng.standard_normal((m, n))
    N *= eps * frobenius_norm(scal.scaled) / frobenius_norm(N)
    assert abs(frobenius_norm(N) / frobenius_norm(scal.scaled) - eps) < 1e-12
    row_perm = rng.permutation(m)
    col_perm = rng.permutation(n)
    expected = np.maximum(0.0, scal.scaled + N)[np.ix_(row_perm, col_perm)]
    assert np.array_equal(inst.M, expected)
    assert np.array_equal(inst.row_perm, row_perm)
    assert np.array_equal(inst.col_perm, col_perm)


def test_fully_random_rejects_bad_ranks():
    with pytest.raises(ValueError):
        gen_fully_random(10, 10, 8, 8, 0.0, 0)
    with pytest.raises(ValueError):
        gen_fully_random(10, 10, 0, 0, 0.0, 0)
    with pytest.raises(ValueError):
        gen_fully_random(10, 10, 2, 2, -0.1, 0)


def test_middle_point_dimensions_and_counts():
    inst = gen_middle_point(0.0, 3)
    assert inst.M.shape == (78, 55)  # 66+12 rows, 10+45 columns
    assert inst.truth.index_sets.r1 == 10
    assert inst.truth.index_sets.r2 == 12
    assert inst.truth.rank == 22


def test_middle_point_noiseless_exactly_separable():
    inst = gen_middle_point(0.0, 1)
    assert fit_weights(inst.M, inst.truth.index_sets).relative_error <= 1e-8
    assert np.abs(inst.truth.Wstar @ inst.truth.Hstar - inst.M).max() < 1e-12


def test_middle_point_noise_leaves_planted_lines_clean():
    # noise is zero on the planted columns and rows, so those survive intact
    clean = gen_middle_point(0.0, 7)
    noisy = gen_middle_point(0.2, 7)
    t = clean.truth.index_sets
    # map emitted indices back through the (identical) permutations
    assert np.array_equal(clean.row_perm, noisy.row_perm)
    assert np.array_equal(clean.col_perm, noisy.col_perm)
    assert np.allclose(noisy.M[:, list(t.cols)], clean.M[:, list(t.cols)], atol=1e-12)
    assert np.allclose(noisy.M[list(t.rows), :], clean.M[list(t.rows), :], atol=1e-12)
    assert not np.allclose(noisy.M, clean.M, atol=1e-6)


def test_curve_simplex_matrix_properties():
    Mn = curve_simplex_matrix(9)
    assert Mn.shape == (3, 9)
    # every column from the third onward lies on the unit simplex
    assert np.allclose(Mn[:, 2:].sum(axis=0), 1.0, atol=1e-15)
    assert (Mn >= 0).all()
    xs = Mn[0, 4:]
    assert (np.diff(xs) > 0).all() and xs.min() > 0 and xs.max() < 0.5


def test_compression_fixture_block_layout():
    M = compression_fixture(7, 9)
    assert M.shape == (10, 12)
    assert np.all(M[:3, :3] == 0.0)
    assert np.all(M[3:, 3:] == 0.0)
    assert np.array_equal(M[:3, 3:], curve_simplex_matrix(9))
    assert np.array_equal(M[3:, :3], curve_simplex_matrix(7).T)
    # compact mixed decomposition exists: 3 columns + 3 rows reconstruct exactly
    dec = fit_weights(M, IndexSets((0, 1, 2), (0, 1, 2)))
    assert dec.relative_error <= 1e-10


def test_non_unique_fixture_all_ones_matches_published_example():
    M = non_unique_fixture(2, 1, 1, 2, 3, 3)
    assert np.array_equal(M, np.array([[1.0, 0, 2], [0, 1, 2], [0, 0, 1]]))


def test_non_unique_fixture_dual_exact_decompositions():
    for seed in (None, 5, 9):
        M = non_unique_fixture(3, 2, 2, 3, 9, 8, seed=seed)
        m = M.shape[0]
        first = fit_weights(M, IndexSets(tuple(range(3)), (m - 2, m - 1)))
        second = fit_weights(M, IndexSets(tuple(range(2)), (m - 3, m - 2, m - 1)))
        assert first.relative_error <= 1e-8
        assert second.relative_error <= 1e-8


def test_non_unique_fixture_validates_ranks():
    with pytest.raises(ValueError):
        non_unique_fixture(2, 2, 1, 2, 6, 6)  # r1+r2 != r3+r4
    with pytest.raises(ValueError):
        non_unique_fixture(1, 1, 2, 0, 6, 6)


def test_instance_roundtrip(tmp_path):
    inst = gen_fully_random(8, 7, 2, 1, 0.02, seed=9)
    save_instance(inst, tmp_path / "inst")
    back = load_instance(tmp_path / "inst")
    assert np.array_equal(back.M, inst.M)
    assert back.truth.index_sets == inst.truth.index_sets
    assert np.array_equal(back.truth.Wstar, inst.truth.Wstar)
    assert np.array_equal(back.truth.Hstar, inst.truth.Hstar)
    assert np.array_equal(back.row_perm, inst.row_perm)
    assert np.array_equal(back.col_perm, inst.col_perm)
    assert back.seed == inst.seed and back.noise_level == inst.noise_level
