import numpy as np
import pytest

from hodlrqr import HodlrMatrix, LowRankBlock, build_partition


def random_hodlr_pair(n, n_min, rank=1, seed=0, scale=1.0):
    """Random HODLR matrix with exactly low-rank off-diagonal blocks,
    returned together with its dense counterpart."""
    rng = np.random.default_rng(seed)
    tree = build_partition(n, n_min)

    def build(tr):
        if tr.level == 0:
            return HodlrMatrix(dense=scale * rng.standard_normal((tr.n, tr.n)))
        t1, t2 = tr.split()
        a11 = build(t1)
        a21 = LowRankBlock(scale * rng.standard_normal((t2.n, rank)),
                           rng.standard_normal((rank, t1.n)))
        a12 = LowRankBlock(scale * rng.standard_normal((t1.n, rank)),
                           rng.standard_normal((rank, t2.n)))
        a22 = build(t2)
        return HodlrMatrix(a11=a11, a22=a22, a12=a12, a21=a21)

    h = build(tree)
    from hodlrqr import to_dense
    return h, to_dense(h), tree


def spd_hodlr_pair(n, n_min, seed=0):
    """Well-conditioned symmetric positive definite test matrix."""
    rng = np.random.default_rng(seed)
    tree = build_partition(n, n_min)
    m = rng.standard_normal((n, n))
    spd = m @ m.T / n + 5.0 * np.eye(n)
    from hodlrqr import TruncationControl, from_dense, to_dense
    h = from_dense(spd, tree, TruncationControl(1e-13 * np.linalg.norm(spd, 2)))
    return h, to_dense(h), tree


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
