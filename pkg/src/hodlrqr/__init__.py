"""QR decompositions of HODLR matrices.

Householder-based recursive QR with compact WY representations, the
supporting HODLR arithmetic, Cholesky-based baselines and a benchmark
harness.
"""

from .arith import (
    CholeskyBreakdownError,
    add,
    apply_dense,
    apply_transpose_dense,
    cholesky,
    hodlr_spectral_norm,
    low_rank_update,
    matvec,
    multiply,
    scale,
    solve_upper_triangular_right,
    transpose,
)
from .baselines import cholqr, cholqr2
from .core import (
    HodlrMatrix,
    LowRankBlock,
    PartitionTree,
    TruncationControl,
    build_partition,
    from_dense,
    hodlr_identity,
    left_orthogonalize,
    recompress_hodlr,
    stats,
    to_dense,
    truncate_lowrank,
)
from .dense import (
    HouseholderReflector,
    SvdResult,
    householder_reflector,
    qr_economy,
    spectral_norm_estimate,
    svd,
    truncation_rank,
)
from .hqr import (
    HodlrQRFactors,
    StructuredColumn,
    StructuredY,
    apply_q,
    apply_q_transpose,
    hqr,
    hqr_rec,
    q_to_hodlr,
)
from .io import CorruptionError, FormatError, read_hodlr, write_hodlr
from .rect import RectHodlr, RectQRFactors, rect_qr_prototype
from .wy import DenseWY, block_qr, wy_apply_q, wy_apply_qt

__version__ = "0.1.0"

__all__ = [
    "CholeskyBreakdownError", "CorruptionError", "DenseWY", "FormatError",
    "HodlrMatrix", "HodlrQRFactors", "HouseholderReflector", "LowRankBlock",
    "PartitionTree", "RectHodlr", "RectQRFactors", "StructuredColumn",
    "StructuredY", "SvdResult", "TruncationControl", "add", "apply_dense",
    "apply_q", "apply_q_transpose", "apply_transpose_dense", "block_qr",
    "build_partition", "cholesky", "cholqr", "cholqr2", "from_dense",
    "hodlr_identity", "hodlr_spectral_norm", "householder_reflector", "hqr",
    "hqr_rec", "left_orthogonalize", "low_rank_update", "matvec", "multiply",
    "q_to_hodlr", "qr_economy", "read_hodlr", "recompress_hodlr",
    "rect_qr_prototype", "scale", "solve_upper_triangular_right",
    "spectral_norm_estimate", "stats", "svd", "to_dense", "transpose",
    "truncate_lowrank", "truncation_rank", "wy_apply_q", "wy_apply_qt",
    "write_hodlr",
]
