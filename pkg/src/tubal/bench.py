"""Experiment runners behind ``tubal bench`` and ``tubal approx``.

Every run goes through a :class:`~tubal.core.CountedTensor`, so the records
carry the number of data passes next to time and accuracy.
"""
from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .completion import rel_err
from .core import CountedTensor
from .errors import RankCapExceeded
from .fixed_precision import (FixedPrecisionConfig, alg9_fixed_precision, alg10_fixed_precision,
                              alg11_fixed_precision, truncate_qb)
from .io import RunRecord
from .linalg import t_svd_truncated, tubal_rank
from .single_pass import (SketchParams, alg4_tcur, alg5_qb, alg6_single_pass, alg7_single_pass,
                          alg8_two_sided)
from .synthetic import SyntheticSpec, generate

log = logging.getLogger(__name__)

FIXED = {"alg9": alg9_fixed_precision, "alg10": alg10_fixed_precision,
         "alg11": alg11_fixed_precision}
SKETCHED = {"alg6": alg6_single_pass, "alg7": alg7_single_pass, "alg8": alg8_two_sided}
ALGORITHMS = ("alg4", "alg5", *SKETCHED, *FIXED, "tsvd")

TABLE1_SIZES = (200, 300, 400, 500)
TABLE1_DESK_SIZES = (100, 150, 200)
TABLE23_SIZE = 300
TABLE23_DESK_SIZE = 150
TRUE_RANK = 50


def true_rank(n):
    """Rank of the synthetic data; halved for sizes too small to hold rank 50."""
    return TRUE_RANK if n >= 2 * TRUE_RANK else max(n // 2, 1)


@dataclass
class Settings:
    """Parameters for one run; which ones matter depends on the algorithm."""

    L: int = 50
    K: int = 50
    H: int = 45
    rank: int = 40
    eps: float = 1e-5
    block: int = 25
    passes: int = 1
    relative: bool = True
    seed: int = 0


def run(name, x, s):
    """Run algorithm ``name`` on ``x``; return ``(factors, approximation, record)``."""
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
    src = CountedTensor(x)
    rec = RunRecord(name, x.shape[0], seed=s.seed)
    t0 = time.perf_counter()
    if name == "alg4":
        f = alg4_tcur(src, s.L, s.K, s.seed)
        rec.L, rec.K = s.L, s.K
    elif name == "alg5":
        f = alg5_qb(src, s.L, s.K, s.seed)
        rec.L, rec.K = s.L, s.K
    elif name in SKETCHED:
        f = SKETCHED[name](src, SketchParams(s.L, s.K, s.H, s.rank, s.seed))
        rec.L, rec.K, rec.H, rec.rank = s.L, s.K, s.H, s.rank
    elif name in FIXED:
        cfg = FixedPrecisionConfig(s.eps, s.block, s.passes, seed=s.seed, relative=s.relative)
        try:
            f = FIXED[name](src, cfg)
        except RankCapExceeded as exc:
            log.warning("%s", exc)
            f = exc.factors
        rec.eps, rec.block, rec.passes = s.eps, s.block, s.passes
    else:
        f = t_svd_truncated(src.materialize(), s.rank)
        rec.rank = s.rank
    rec.time_s = time.perf_counter() - t0
    approx = f.reconstruct()
    rec.rel_err = rel_err(x, approx)
    rec.pass_count = src.passes
    if name in FIXED:
        scale = np.sqrt(np.sum(x ** 2)) if s.relative else 1.0
        rec.est_rank = truncate_qb(f, s.eps * scale).k
    elif name in ("alg4", "alg5"):
        rec.est_rank = tubal_rank(approx, 1e-8)
    else:
        rec.est_rank = f.k
    return f, approx, rec


def table1(sizes, trials=1, seed=0, block=25, eps=1e-5):
    """Fixed-precision algorithms plus the truncated T-SVD at the rank they find."""
    out = []
    for n in sizes:
        for t in range(trials):
            spec = SyntheticSpec("lowrank", n, true_rank(n), 1e-3, seed + t, noise_ref="unit")
            x = generate(spec)
            est = None
            for name, q in (("alg9", 1), ("alg10", 4), ("alg11", 1)):
                s = Settings(eps=eps, block=block, passes=q, seed=seed + t)
                _, _, rec = run(name, x, s)
                out.append(rec)
                log.info("n=%d %s rank=%s err=%.3e %.2fs", n, name, rec.est_rank, rec.rel_err,
                         rec.time_s)
                est = est or rec.est_rank
            _, _, rec = run("tsvd", x, Settings(rank=max(est, 1), seed=seed + t))
            out.append(rec)
    return out


def grid_settings(name, n, seed):
    """Sketch sizes for the single-pass tables, scaled down with the rank on tiny tensors."""
    rho = true_rank(n) / TRUE_RANK
    size = lambda v: max(int(round(v * rho)), 1)  # noqa: E731
    if name in ("alg4", "alg5"):
        return Settings(L=size(40), K=size(40), seed=seed)
    return Settings(L=size(50), K=size(50), H=size(45), rank=size(40), seed=seed)


def _single_pass_grid(x, seed, label=""):
    out = []
    for name in ("alg4", "alg5", "alg6", "alg7", "alg8"):
        s = grid_settings(name, x.shape[0], seed)
        _, _, rec = run(name, x, s)
        rec.algorithm = f"{name}{label}"
        out.append(rec)
        log.info("n=%d %s err=%.3e %.2fs", rec.n, rec.algorithm, rec.rel_err, rec.time_s)
    return out


def table2(n, trials=1, seed=0):
    """Single-pass algorithms on noisy rank-50 data: 6-8 at L=K=50, H=45, R=40; 4-5 at L=K=40."""
    out = []
    for t in range(trials):
        x = generate(SyntheticSpec("lowrank", n, true_rank(n), 1e-3, seed + t))
        out += _single_pass_grid(x, seed + t)
    return out


def table3(n, trials=1, seed=0):
    """Single-pass algorithms on the three closed-form tensors; rows tagged ``[caseN]``."""
    out = []
    for kind in ("case1", "case2", "case3"):
        x = generate(SyntheticSpec(kind, n))
        for t in range(trials):
            out += _single_pass_grid(x, seed + t, f"[{kind}]")
    return out


def summarize(records):
    """Median relative error and time per algorithm label."""
    groups = {}
    for r in records:
        groups.setdefault(r.algorithm, []).append(r)
    return {k: (statistics.median(r.rel_err for r in v), statistics.median(r.time_s for r in v),
                len(v)) for k, v in groups.items()}
