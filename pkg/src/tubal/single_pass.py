"""Single-pass low tubal rank approximation.

Each algorithm touches the data tensor exactly once, through one call on a
:class:`~tubal.core.CountedTensor`; everything afterwards works on the
sketches alone.  alg6, alg7 and alg8 can equally be fed from a stream of additive
updates via :class:`SketchState`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (CountedTensor, as_source, as_tensor, ctranspose, gauss_tensor, hat,
                   t_product, t_transpose, unhat)
from .errors import DimMismatch, SingularTriangular
from .linalg import EPS, QbFactors, TsvdFactors, t_pinv, t_qr, t_svd_truncated

ALGORITHMS = ("alg6", "alg7", "alg8")


@dataclass(frozen=True)
class SketchParams:
    """Sketch sizes for alg6, alg7 and alg8.

    ``L`` co-range width, ``K`` range width, ``H`` truncation surplus and
    ``R`` target tubal rank, with ``L >= K >= H >= 0``.
    """

    L: int
    K: int
    H: int
    R: int
    seed: int = 0
    kind: str = "full"

    def __post_init__(self):
        if not self.L >= self.K >= self.H >= 0:
            raise ValueError(f"need L >= K >= H >= 0, got L={self.L} K={self.K} H={self.H}")
        if self.K < 1 or self.R < 1:
            raise ValueError("K and R must be positive")


@dataclass
class CurFactors:
    C: np.ndarray
    U: np.ndarray
    R: np.ndarray
    lateral_idx: np.ndarray
    horizontal_idx: np.ndarray

    def reconstruct(self):
        return unhat(hat(self.C) @ hat(self.U) @ hat(self.R), self.C.shape[2])


def refinement_rank(p, width):
    """Columns kept when the T-QR basis of a ``width``-column sketch is refined.

    ``R + H``, capped at the sketch width: alg7 and alg8 sketch with
    only ``K`` (or ``L``) columns, so settings such as ``K=50, H=45, R=40``
    keep the whole basis.
    """
    return min(p.R + p.H, width)


def draw_test_tensors(dims, p, which):
    n1, n2, n3 = dims
    extra = p.R if which == "alg6" else 0
    rng = np.random.default_rng(p.seed)
    omega1 = gauss_tensor(n2, p.K + extra, n3, p.kind, rng)
    omega2 = gauss_tensor(n1, p.L + extra, n3, p.kind, rng)
    return omega1, omega2


def _refined_basis(y, p):
    qr = t_qr(y)
    t = min(refinement_rank(p, y.shape[1]), *qr.R.shape[:2])
    return t_product(qr.Q, t_svd_truncated(qr.R, t).U)


def _lift(inner, left, right, rank):
    rank = min(rank, *inner.shape[:2])
    f = t_svd_truncated(inner, rank)
    u = t_product(left, f.U)
    v = f.V if right is None else t_product(right, f.V)
    return TsvdFactors(u, f.S, v, f.spectrum)


def _finish_alg6(yc, yr, omega2, p):
    if p.H < p.K:
        qc = _refined_basis(yc, p)
    else:
        qc = t_qr(yc).Q
    qr = t_qr(t_product(t_transpose(omega2), qc))
    n3 = yc.shape[2]
    rh = hat(qr.R)
    cond = np.linalg.cond(rh)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1.0 / (100 * EPS)):
        raise SingularTriangular(f"triangular factor has condition number {np.max(cond):.3e}")
    # Z = R^-1 * Q^T * Yr^T
    z = unhat(np.linalg.solve(rh, ctranspose(hat(qr.Q)) @ ctranspose(hat(yr))), n3)
    return _lift(z, qc, None, p.R)


def _finish_alg7(yc, yr, omega2, p):
    qc, qr = _refined_basis(yc, p), _refined_basis(yr, p)
    coef = t_pinv(t_product(t_transpose(omega2), qc))
    z = t_product(coef, t_product(t_transpose(yr), qr))
    return _lift(z, qc, qr, p.R)


def _finish_alg8(yc, yr, omega1, p):
    qc, qr = _refined_basis(yc, p), _refined_basis(yr, p)
    core = t_product(t_transpose(qc), yc)
    b = t_product(core, t_pinv(t_product(t_transpose(qr), omega1)))
    return _lift(b, qc, qr, p.R)


def _run(x, p, which):
    src = as_source(x)
    omega1, omega2 = draw_test_tensors(src.shape, p, which)
    yc, yr = src.sketch(omega1, omega2)
    return _finish(yc, yr, omega1, omega2, p, which)


def _finish(yc, yr, omega1, omega2, p, which):
    if which == "alg6":
        return _finish_alg6(yc, yr, omega2, p)
    if which == "alg7":
        return _finish_alg7(yc, yr, omega2, p)
    if which == "alg8":
        return _finish_alg8(yc, yr, omega1, p)
    raise ValueError(f"unknown algorithm {which!r}; expected one of {ALGORITHMS}")


def alg4_tcur(x, L, K, seed=0):
    """Cross (CUR) approximation from ``L`` lateral and ``K`` horizontal slices.

    Slices are sampled uniformly without replacement and the middle tensor is
    the pseudoinverse of their intersection, which is badly conditioned when
    ``L == K``; that failure is intentionally left visible.
    """
    src = as_source(x)
    n1, n2, _ = src.shape
    if not (1 <= L <= n2 and 1 <= K <= n1):
        raise ValueError(f"need 1 <= L <= {n2} and 1 <= K <= {n1}")
    rng = np.random.default_rng(seed)
    cols = np.sort(rng.choice(n2, size=L, replace=False))
    rows = np.sort(rng.choice(n1, size=K, replace=False))
    r, c = src.cross(rows, cols)
    w = c[rows, :, :]
    return CurFactors(c, t_pinv(w), r, cols, rows)


def alg5_qb(x, L, K, seed=0, kind="full"):
    """Range/co-range sketch approximation ``X ~= Q * (Omega2 * Q)^+ * (Omega2 * X)``."""
    src = as_source(x)
    n1, n2, n3 = src.shape
    rng = np.random.default_rng(seed)
    omega1 = gauss_tensor(n2, K, n3, kind, rng)
    omega2 = gauss_tensor(L, n1, n3, kind, rng)
    y, wt = src.sketch(omega1, t_transpose(omega2))
    q = t_qr(y).Q
    b = t_product(t_pinv(t_product(omega2, q)), t_transpose(wt))
    return QbFactors(q, b)


def alg6_single_pass(x, p):
    return _run(x, p, "alg6")


def alg7_single_pass(x, p):
    return _run(x, p, "alg7")


def alg8_two_sided(x, p):
    return _run(x, p, "alg8")


@dataclass(frozen=True)
class SketchState:
    """Accumulated sketches ``Yc = X * omega1`` and ``Yr = X^T * omega2``.

    States are immutable; :func:`sketch_ingest` and :meth:`merge` return new
    ones.  Test tensors are shared between derived states.
    """

    which: str
    omega1: np.ndarray
    omega2: np.ndarray
    yc: np.ndarray
    yr: np.ndarray

    @classmethod
    def start(cls, dims, p, which):
        if which not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {which!r}; expected one of {ALGORITHMS}")
        n1, n2, n3 = dims
        omega1, omega2 = draw_test_tensors(dims, p, which)
        return cls(which, omega1, omega2,
                   np.zeros((n1, omega1.shape[1], n3)), np.zeros((n2, omega2.shape[1], n3)))

    @property
    def dims(self):
        return (self.yc.shape[0], self.yr.shape[0], self.yc.shape[2])

    def merge(self, other):
        """Combine two states built from disjoint parts of the same stream."""
        if other.which != self.which or other.dims != self.dims:
            raise DimMismatch("states were started for different problems")
        if not (np.array_equal(self.omega1, other.omega1)
                and np.array_equal(self.omega2, other.omega2)):
            raise ValueError("states use different test tensors")
        return replace(self, yc=self.yc + other.yc, yr=self.yr + other.yr)


def sketch_ingest(state, update):
    update = as_tensor(update)
    if update.shape != state.dims:
        raise DimMismatch(f"update has shape {update.shape}, state expects {state.dims}")
    dyc, dyr = CountedTensor(update).sketch(state.omega1, state.omega2)
    return replace(state, yc=state.yc + dyc, yr=state.yr + dyr)


def sketch_finalize(state, p, which=None):
    which = which or state.which
    if which != state.which:
        raise ValueError(f"state was sketched for {state.which}, not {which}")
    return _finish(state.yc, state.yr, state.omega1, state.omega2, p, which)
