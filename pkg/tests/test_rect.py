import numpy as np
import pytest

from hodlrqr import rect_qr_prototype, stats, to_dense
from hodlrqr.bench import gen_random_rect_dense
from hodlrqr.core import PartitionTree


def reconstruct(f, m, n):
    y = f.y.to_dense()
    q = np.eye(m) - y @ to_dense(f.t) @ y.T
    return q, f.r.to_dense()


def test_square_input_identity_permutation(rng):
    a, tr, tc = gen_random_rect_dense(128, 128, 32, seed=41)
    f = rect_qr_prototype(a, tr, tc, 1e-13)
    assert np.array_equal(f.perm, np.arange(128))
    r = f.r.to_dense()
    assert np.array_equal(np.tril(r, -1), np.zeros_like(r))
    q, r = reconstruct(f, 128, 128)
    assert np.linalg.norm(q @ r - a, 2) <= 1e-12 * np.linalg.norm(a, 2)


def test_rectangular_factorization(rng):
    m, n = 300, 160
    a, tr, tc = gen_random_rect_dense(m, n, 40, seed=42)
    f = rect_qr_prototype(a, tr, tc, 1e-12)
    q, r = reconstruct(f, m, n)
    norm = np.linalg.norm(a, 2)
    assert np.linalg.norm(q.T @ q - np.eye(m), 2) <= 1e-12
    assert np.linalg.norm(q @ r - a, 2) <= 1e-11 * norm
    # permuted R is exactly upper triangular; rows past the triangles only
    # carry SVD roundoff from compressing the coupling blocks
    rp = r[f.perm][:n]
    assert np.array_equal(np.tril(rp, -1), np.zeros_like(rp))
    assert np.max(np.abs(r[f.perm][n:])) <= 1e-13 * norm


def test_structured_factors_have_small_ranks(rng):
    a, tr, tc = gen_random_rect_dense(400, 200, 50, seed=43)
    f = rect_qr_prototype(a, tr, tc, 1e-11)
    assert f.y.max_offdiag_rank() <= 12
    assert f.r.max_offdiag_rank() <= 12
    assert stats(f.t)["max_offdiag_rank"] <= 16


def test_rejects_wide_and_mismatched():
    a, tr, tc = gen_random_rect_dense(64, 32, 8, seed=44)
    with pytest.raises(ValueError):
        rect_qr_prototype(a.T, tc, tr, 1e-12)
    with pytest.raises(ValueError):
        rect_qr_prototype(a, tc, tc, 1e-12)  # wrong row tree


def test_rejects_block_wider_than_tall():
    rows = PartitionTree(1, (6, 6))
    cols = PartitionTree(1, (8, 4))
    a = np.random.default_rng(0).standard_normal((12, 12))
    with pytest.raises(ValueError):
        rect_qr_prototype(a, rows, cols, 1e-12)
