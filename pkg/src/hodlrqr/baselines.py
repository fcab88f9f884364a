"""Cholesky-based QR decompositions of HODLR matrices, the accuracy and
speed comparison targets.  Orthogonality of the computed Q degrades with
the squared condition number, and the Cholesky step breaks down when
A^T A is not numerically positive definite."""

from .arith import cholesky, multiply, solve_upper_triangular_right, transpose
from .core import HodlrMatrix, TruncationControl


def cholqr(a: HodlrMatrix, tc: TruncationControl) -> tuple[HodlrMatrix, HodlrMatrix]:
    """QR via the Cholesky decomposition of A^T A.

    Returns (q, r) with r upper triangular and q = A r^{-1}.  A
    CholeskyBreakdownError from the factorization is surfaced verbatim.
    """
    gram = multiply(transpose(a), a, tc)
    r = cholesky(gram, tc)
    q = solve_upper_triangular_right(a, r, tc)
    return q, r


def cholqr2(a: HodlrMatrix, tc: TruncationControl,
            reorth_steps: int = 1) -> tuple[HodlrMatrix, HodlrMatrix]:
    """CholQR followed by reorthogonalization passes (default one)."""
    if reorth_steps < 0:
        raise ValueError("reorth_steps must be >= 0")
    q, r = cholqr(a, tc)
    for _ in range(reorth_steps):
        q, r_i = cholqr(q, tc)
        r = multiply(r_i, r, tc)
    return q, r
