"""Benchmark harness: matrix generators, accuracy metrics and CSV runners
for the accuracy/rank/memory experiments at desk scale."""

import math
import time
from dataclasses import dataclass

import numpy as np

from .arith import (
    CholeskyBreakdownError,
    apply_dense,
    apply_transpose_dense,
    hodlr_spectral_norm,
)
from .baselines import cholqr, cholqr2
from .core import (
    HodlrMatrix,
    LowRankBlock,
    PartitionTree,
    TruncationControl,
    build_partition,
    from_dense,
    stats,
    to_dense,
)
from .dense import spectral_norm_estimate
from .hqr import HodlrQRFactors, apply_q, apply_q_transpose, hqr, q_to_hodlr

CSV_HEADER = ("method,n,seed,eps,kappa2,e_orth,e_acc,rank_Y,rank_T,rank_Q,rank_R,"
              "mem_YT_rel,mem_Q_rel,mem_R_rel,time_s,failed")

METHODS = ("hqr", "cholqr", "cholqr2", "dense")

# interval configurations of the three Cauchy test matrices
CAUCHY_CONFIGS = {
    "a1": (-1.25, 998.25, -0.7, 998.9),
    "a2": (-1.25, 998.25, -0.45, 999.15),
    "a3": (-1.25, 998.25, -0.15, 999.45),
}


@dataclass
class BenchRecord:
    method: str
    n: int
    seed: int
    eps: float
    kappa2: float = math.nan
    e_orth: float = math.nan
    e_acc: float = math.nan
    rank_y: float = math.nan
    rank_t: float = math.nan
    rank_q: float = math.nan
    rank_r: float = math.nan
    mem_yt_rel: float = math.nan
    mem_q_rel: float = math.nan
    mem_r_rel: float = math.nan
    time_s: float = math.nan
    failed: int = 0

    def to_csv_row(self) -> str:
        def num(x):
            x = float(x)
            return "nan" if math.isnan(x) else f"{x:.17g}"

        cols = [self.method, str(self.n), str(self.seed), f"{self.eps:.17g}",
                num(self.kappa2), num(self.e_orth), num(self.e_acc),
                num(self.rank_y), num(self.rank_t), num(self.rank_q), num(self.rank_r),
                num(self.mem_yt_rel), num(self.mem_q_rel), num(self.mem_r_rel),
                num(self.time_s), str(self.failed)]
        return ",".join(cols)


def gen_random_hodlr(n: int, n_min: int, offdiag_rank: int = 1,
                     seed: int = 0) -> HodlrMatrix:
    """Random HODLR matrix: standard normal dense diagonal leaves, each
    off-diagonal block an outer product of standard normal factors.

    Reproducibility: every leaf and every off-diagonal block draws from
    its own PCG64 stream, spawned from SeedSequence(seed) in the HDLR1
    serialization order (a11 subtree, a21 block, a12 block, a22 subtree).
    """
    tree = build_partition(n, n_min)
    root = np.random.SeedSequence(seed)

    def next_rng():
        return np.random.Generator(np.random.PCG64(root.spawn(1)[0]))

    def build(tr: PartitionTree) -> HodlrMatrix:
        if tr.level == 0:
            return HodlrMatrix(dense=next_rng().standard_normal((tr.n, tr.n)))
        t1, t2 = tr.split()
        a11 = build(t1)
        g21 = next_rng()
        a21 = LowRankBlock(g21.standard_normal((t2.n, offdiag_rank)),
                           g21.standard_normal((offdiag_rank, t1.n)))
        g12 = next_rng()
        a12 = LowRankBlock(g12.standard_normal((t1.n, offdiag_rank)),
                           g12.standard_normal((offdiag_rank, t2.n)))
        a22 = build(t2)
        return HodlrMatrix(a11=a11, a22=a22, a12=a12, a21=a21)

    return build(tree)


def _dense_norm_estimate(a: np.ndarray) -> float:
    return spectral_norm_estimate(lambda x: a @ x, lambda x: a.T @ x, a.shape[1])


def gen_random_rect_dense(m: int, n: int, n_min: int = 250, offdiag_rank: int = 1,
                          seed: int = 0):
    """Random rectangular block matrix with the same recipe as
    gen_random_hodlr: dense standard normal diagonal blocks, rank-1 (by
    default) off-diagonal blocks.  Returns (dense, tree_rows, tree_cols);
    the row tree divides the m rows evenly at the level of the column
    tree.
    """
    tree_cols = build_partition(n, n_min)
    leaves = 2 ** tree_cols.level
    base, rem = divmod(m, leaves)
    row_sizes = tuple(base + 1 if j < rem else base for j in range(leaves))
    tree_rows = PartitionTree(tree_cols.level, row_sizes)
    root = np.random.SeedSequence(seed)

    def next_rng():
        return np.random.Generator(np.random.PCG64(root.spawn(1)[0]))

    out = np.zeros((m, n))

    def fill(rlo, rhi, clo, chi, tr, tcs):
        if tr.level == 0:
            out[rlo:rhi, clo:chi] = next_rng().standard_normal((rhi - rlo, chi - clo))
            return
        tr1, tr2 = tr.split()
        tc1, tc2 = tcs.split()
        rmid, cmid = rlo + tr1.n, clo + tc1.n
        fill(rlo, rmid, clo, cmid, tr1, tc1)
        g21 = next_rng()
        out[rmid:rhi, clo:cmid] = g21.standard_normal((rhi - rmid, offdiag_rank)) @ \
            g21.standard_normal((offdiag_rank, cmid - clo))
        g12 = next_rng()
        out[rlo:rmid, cmid:chi] = g12.standard_normal((rmid - rlo, offdiag_rank)) @ \
            g12.standard_normal((offdiag_rank, chi - cmid))
        fill(rmid, rhi, cmid, chi, tr2, tc2)
    fill(0, m, 0, n, tree_rows, tree_cols)
    return out, tree_rows, tree_cols


def gen_cauchy(n: int, ix_lo: float, ix_hi: float, iy_lo: float, iy_hi: float,
               perturb: float = 2e-2, seed: int = 0, eps: float = 1e-10,
               n_min: int = 250, absolute_eps: bool = False) -> HodlrMatrix:
    """Cauchy matrix 1/(x_i - y_j) on perturbed equispaced points,
    compressed into HODLR form.

    The points are n equispaced samples of the two intervals, each moved
    by +-perturb with a random sign.  With absolute_eps=False the
    compression threshold is eps * ||A||_2 (power-iteration estimate).
    """
    root = np.random.SeedSequence(seed)
    sx, sy = root.spawn(2)
    gx = np.random.Generator(np.random.PCG64(sx))
    gy = np.random.Generator(np.random.PCG64(sy))
    x = np.linspace(ix_lo, ix_hi, n) + perturb * gx.choice([-1.0, 1.0], size=n)
    y = np.linspace(iy_lo, iy_hi, n) + perturb * gy.choice([-1.0, 1.0], size=n)
    diff = x[:, None] - y[None, :]
    if np.min(np.abs(diff)) < 1e-12:
        raise ZeroDivisionError("a pair of points nearly coincides; pick other intervals")
    a = 1.0 / diff
    thresh = eps if absolute_eps else eps * _dense_norm_estimate(a)
    return from_dense(a, build_partition(n, n_min), TruncationControl(thresh))


def gen_cauchy_config(name: str, n: int = 2000, **kwargs) -> HodlrMatrix:
    """Cauchy matrix for one of the named interval configurations."""
    ix_lo, ix_hi, iy_lo, iy_hi = CAUCHY_CONFIGS[name]
    return gen_cauchy(n, ix_lo, ix_hi, iy_lo, iy_hi, **kwargs)


_TIGHT = dict(max_iter=300, tol=1e-6)


def metrics(a, f: HodlrQRFactors, eps: float = 1e-10, estimate: bool = False,
            dense_limit: int = 4096, compute_kappa: bool = True,
            compute_ranks: bool = True) -> dict:
    """Accuracy, rank and memory metrics of a WY-form QR decomposition.

    Without ``estimate`` the matrix is densified (allowed up to
    dense_limit) and the norms are exact; with it, e_orth and e_acc come
    from power iteration on the implicitly applied operators and kappa2
    is reported as nan.  ``eps`` is only used to materialize Q for its
    rank statistics.
    """
    n = f.y.n
    out = {"kappa2": math.nan, "e_orth": math.nan, "e_acc": math.nan}
    if estimate:
        def q_tq_minus_i(v):
            return apply_q_transpose(f, apply_q(f, v)) - v

        out["e_orth"] = spectral_norm_estimate(q_tq_minus_i, q_tq_minus_i, n, **_TIGHT)
        a_h = a if isinstance(a, HodlrMatrix) else None
        if a_h is None:
            raise ValueError("estimate mode needs the HODLR input matrix")

        def resid(v):
            return apply_q(f, apply_dense(f.r, v[:, None])[:, 0]) - \
                apply_dense(a_h, v[:, None])[:, 0]

        def resid_t(v):
            return apply_transpose_dense(f.r, apply_q_transpose(f, v)[:, None])[:, 0] - \
                apply_transpose_dense(a_h, v[:, None])[:, 0]

        out["e_acc"] = spectral_norm_estimate(resid, resid_t, n, **_TIGHT)
    else:
        if n > dense_limit:
            raise ValueError(
                f"n = {n} exceeds the densification limit {dense_limit}; "
                "pass --estimate to use power-iteration metrics")
        a_d = to_dense(a) if isinstance(a, HodlrMatrix) else np.asarray(a, dtype=float)
        y_d, t_d, r_d = to_dense(f.y), to_dense(f.t), to_dense(f.r)
        q = np.eye(n) - y_d @ t_d @ y_d.T
        out["e_orth"] = float(np.linalg.norm(q.T @ q - np.eye(n), 2))
        out["e_acc"] = float(np.linalg.norm(q @ r_d - a_d, 2))
        if compute_kappa:
            out["kappa2"] = float(np.linalg.cond(a_d, 2))
    if compute_ranks:
        s_y, s_t, s_r = stats(f.y), stats(f.t), stats(f.r)
        q_h = q_to_hodlr(f, eps)
        s_q = stats(q_h)
        out["rank_y"] = s_y["max_offdiag_rank"]
        out["rank_t"] = s_t["max_offdiag_rank"]
        out["rank_q"] = s_q["max_offdiag_rank"]
        out["rank_r"] = s_r["max_offdiag_rank"]
        if isinstance(a, HodlrMatrix):
            mem_a = stats(a)["memory_scalars"]
            out["mem_yt_rel"] = (s_y["memory_scalars"] + s_t["memory_scalars"]) / mem_a
            out["mem_q_rel"] = s_q["memory_scalars"] / mem_a
            out["mem_r_rel"] = s_r["memory_scalars"] / mem_a
    return out


def metrics_explicit(a, q: HodlrMatrix, r: HodlrMatrix, estimate: bool = False,
                     dense_limit: int = 4096) -> dict:
    """e_orth and e_acc for a QR decomposition with Q given explicitly
    (the Cholesky-based baselines)."""
    n = q.n
    out = {"e_orth": math.nan, "e_acc": math.nan}
    if estimate:
        def q_tq_minus_i(v):
            col = v[:, None]
            return apply_transpose_dense(q, apply_dense(q, col))[:, 0] - v

        out["e_orth"] = spectral_norm_estimate(q_tq_minus_i, q_tq_minus_i, n, **_TIGHT)
        a_h = a if isinstance(a, HodlrMatrix) else None
        if a_h is None:
            raise ValueError("estimate mode needs the HODLR input matrix")

        def resid(v):
            col = v[:, None]
            return (apply_dense(q, apply_dense(r, col)) - apply_dense(a_h, col))[:, 0]

        def resid_t(v):
            col = v[:, None]
            return (apply_transpose_dense(r, apply_transpose_dense(q, col))
                    - apply_transpose_dense(a_h, col))[:, 0]

        out["e_acc"] = spectral_norm_estimate(resid, resid_t, n, **_TIGHT)
    else:
        if n > dense_limit:
            raise ValueError(
                f"n = {n} exceeds the densification limit {dense_limit}; "
                "pass --estimate to use power-iteration metrics")
        a_d = to_dense(a) if isinstance(a, HodlrMatrix) else np.asarray(a, dtype=float)
        q_d, r_d = to_dense(q), to_dense(r)
        out["e_orth"] = float(np.linalg.norm(q_d.T @ q_d - np.eye(n), 2))
        out["e_acc"] = float(np.linalg.norm(q_d @ r_d - a_d, 2))
    return out


@dataclass
class BenchConfig:
    methods: tuple = ("hqr", "cholqr", "cholqr2")
    sizes: tuple = (1000, 2000, 4000)
    seeds: tuple = (0,)
    eps: float = 1e-10
    n_min: int = 250
    offdiag_rank: int = 1
    matrix: str = "random"  # or cauchy:a1|a2|a3
    absolute_eps: bool = False
    estimate: bool = False
    dense_limit: int = 4096

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if self.matrix != "random":
            kind, _, cfg = self.matrix.partition(":")
            if kind != "cauchy" or cfg not in CAUCHY_CONFIGS:
                raise ValueError(f"unknown matrix kind {self.matrix!r}")


def _generate(config: BenchConfig, n: int, seed: int) -> HodlrMatrix:
    if config.matrix == "random":
        return gen_random_hodlr(n, config.n_min, config.offdiag_rank, seed)
    cfg = config.matrix.partition(":")[2]
    return gen_cauchy_config(cfg, n=n, seed=seed, eps=config.eps,
                             n_min=config.n_min, absolute_eps=config.absolute_eps)


def _run_cell(config: BenchConfig, a: HodlrMatrix, method: str, n: int,
              seed: int) -> BenchRecord:
    rec = BenchRecord(method=method, n=n, seed=seed, eps=config.eps)
    tc_eps = config.eps if config.absolute_eps else config.eps * hodlr_spectral_norm(a)
    estimate = config.estimate or n > config.dense_limit
    start = time.perf_counter()
    try:
        if method == "hqr":
            f = hqr(a, config.eps, absolute=config.absolute_eps)
            rec.time_s = time.perf_counter() - start
            m = metrics(a, f, eps=config.eps, estimate=estimate,
                        dense_limit=config.dense_limit)
            for key, val in m.items():
                setattr(rec, key, val)
        elif method in ("cholqr", "cholqr2"):
            fn = cholqr if method == "cholqr" else cholqr2
            q, r = fn(a, TruncationControl(tc_eps))
            rec.time_s = time.perf_counter() - start
            m = metrics_explicit(a, q, r, estimate=estimate,
                                 dense_limit=config.dense_limit)
            rec.e_orth, rec.e_acc = m["e_orth"], m["e_acc"]
            s_q, s_r = stats(q), stats(r)
            mem_a = stats(a)["memory_scalars"]
            rec.rank_q = s_q["max_offdiag_rank"]
            rec.rank_r = s_r["max_offdiag_rank"]
            rec.mem_q_rel = s_q["memory_scalars"] / mem_a
            rec.mem_r_rel = s_r["memory_scalars"] / mem_a
            if not estimate:
                rec.kappa2 = float(np.linalg.cond(to_dense(a), 2))
        elif method == "dense":
            a_d = to_dense(a)
            q, r = np.linalg.qr(a_d)
            rec.time_s = time.perf_counter() - start
            rec.e_orth = float(np.linalg.norm(q.T @ q - np.eye(n), 2))
            rec.e_acc = float(np.linalg.norm(q @ r - a_d, 2))
            rec.kappa2 = float(np.linalg.cond(a_d, 2))
    except (CholeskyBreakdownError, np.linalg.LinAlgError):
        rec.time_s = time.perf_counter() - start
        rec.failed = 1
    return rec


def run_bench(config: BenchConfig) -> list[BenchRecord]:
    """One record per (size, seed, method) cell, in config order.

    Breakdown failures are recorded as rows with nan metrics and the
    failed flag set rather than skipped.
    """
    records = []
    for n in config.sizes:
        for seed in config.seeds:
            a = _generate(config, n, seed)
            for method in config.methods:
                records.append(_run_cell(config, a, method, n, seed))
    return records


def tolerance_sweep(matrix: str, eps_list, n: int = 2000, n_min: int = 250,
                    seed: int = 0, offdiag_rank: int = 1,
                    absolute_eps: bool = False, estimate: bool = False,
                    dense_limit: int = 4096) -> list[BenchRecord]:
    """Run hqr over a list of truncation tolerances on the same matrix
    configuration, recording e_orth and e_acc per tolerance."""
    if not len(eps_list):
        raise ValueError("eps_list must be nonempty")
    records = []
    for eps in eps_list:
        if matrix == "random":
            a = gen_random_hodlr(n, n_min, offdiag_rank, seed)
        else:
            kind, _, cfg = matrix.partition(":")
            if kind != "cauchy" or cfg not in CAUCHY_CONFIGS:
                raise ValueError(f"unknown matrix kind {matrix!r}")
            a = gen_cauchy_config(cfg, n=n, seed=seed, eps=eps, n_min=n_min,
                                  absolute_eps=absolute_eps)
        rec = BenchRecord(method="hqr", n=n, seed=seed, eps=eps)
        start = time.perf_counter()
        f = hqr(a, eps, absolute=absolute_eps)
        rec.time_s = time.perf_counter() - start
        m = metrics(a, f, eps=eps, estimate=estimate or n > dense_limit,
                    dense_limit=dense_limit, compute_kappa=False)
        for key, val in m.items():
            setattr(rec, key, val)
        records.append(rec)
    return records


def records_to_csv(records) -> str:
    return "\n".join([CSV_HEADER] + [r.to_csv_row() for r in records]) + "\n"


def write_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(records_to_csv(records))
