"""Rank-adaptive (fixed-precision) randomized QB approximation.

All three drivers grow ``Q`` and ``B`` block by block until the residual
energy ``||X||_F^2 - ||B||_F^2`` drops below ``eps^2``:

* :func:`alg9_fixed_precision` -- blocked QB with ``q`` power iterations,
  ``2q + 2`` data passes per block.
* :func:`alg10_fixed_precision` -- ``q`` counts total passes per block; LU
  replaces QR inside the power rounds and odd ``q`` is allowed.
* :func:`alg11_fixed_precision` -- keeps only the sketches ``Y = X*Omega``
  and ``W = X^T*Y`` and estimates the residual from ``trace((T*Z^-1)_1)``
  without ever forming ``Q`` inside the loop.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .core import (as_source, concat, ctranspose, gauss_tensor, hat, spectral_weights,
                   t_product, t_transpose, unhat)
from .errors import IllConditionedGram, RankCapExceeded
from .linalg import (EPS, QbFactors, TsvdFactors, fdiag_sqrt, orth, t_eig, t_inv, t_lu, t_svd,
                     tail_energy)

log = logging.getLogger(__name__)

GRAM_RCOND = 100 * EPS
# ||X||^2 - sum ||B_i||^2 cannot resolve energies below a few ulps of ||X||^2;
# asking for less would only add blocks of rounding noise.
ENERGY_FLOOR = 32 * EPS


@dataclass(frozen=True)
class FixedPrecisionConfig:
    """Settings shared by the three fixed-precision drivers.

    ``power_or_passes`` is the number of power iterations for alg9 and
    alg11, and the total number of data passes per block (> 2) for
    alg10.  With ``relative=True`` the bound is ``eps * ||X||_F``
    instead of ``eps``.  ``max_rank`` defaults to ``min(I1, I2)``.
    """

    eps: float
    block: int = 10
    power_or_passes: int = 1
    max_rank: int | None = None
    seed: int = 0
    relative: bool = False
    kind: str = "full"

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.block < 1:
            raise ValueError("block size must be at least 1")
        if self.power_or_passes < 0:
            raise ValueError("power_or_passes must be nonnegative")


def _setup(x, cfg):
    src = as_source(x)
    n1, n2, _ = src.shape
    cap = min(n1, n2) if cfg.max_rank is None else cfg.max_rank
    if not 0 <= cap <= min(n1, n2):
        raise ValueError(f"max_rank must not exceed min(I1, I2) = {min(n1, n2)}")
    normx2 = src.norm2()
    tol2 = cfg.eps ** 2 * (normx2 if cfg.relative else 1.0)
    if 0 < tol2 < ENERGY_FLOOR * normx2:
        log.info("eps^2 = %.3e is below the energy resolution; stopping at %.3e instead",
                 tol2, ENERGY_FLOOR * normx2)
        tol2 = ENERGY_FLOOR * normx2
    return src, cap, normx2, tol2


def _empty(src):
    n1, n2, n3 = src.shape
    return np.zeros((n1, 0, n3)), np.zeros((0, n2, n3))


def _project_out(v, q, b, omega):
    """``v - Q * (B * omega)``; a no-op while nothing has been accumulated."""
    if q.shape[1] == 0:
        return v
    return v - t_product(q, t_product(b, omega))


def _reorthogonalize(ql, q):
    if q.shape[1] == 0:
        return orth(ql)
    return orth(ql - t_product(q, t_product(t_transpose(q), ql)))


def _qb_loop(src, cap, normx2, tol2, cfg, range_finder, name):
    q, b = _empty(src)
    result = QbFactors(q, b, converged=normx2 < tol2)
    if result.converged:
        return result
    energy = normx2
    rng = np.random.default_rng(cfg.seed)
    while True:
        width = min(cfg.block, cap - q.shape[1])
        if width <= 0:
            result.Q, result.B = q, b
            raise RankCapExceeded(
                f"{name}: reached rank {q.shape[1]} with residual energy {energy:.3e} "
                f"above {tol2:.3e}", result)
        start = src.passes
        ql = _reorthogonalize(range_finder(width, q, b, rng), q)
        if ql.shape[1] == 0:
            log.info("%s: residual range exhausted at rank %d", name, q.shape[1])
            result.converged = energy < tol2
            break
        bl = t_transpose(src.tdot(ql))
        q, b = concat(q, ql, 2), concat(b, bl, 1)
        energy -= float(np.sum(bl ** 2))
        result.block_passes.append(src.passes - start)
        result.energies.append(energy)
        log.debug("%s: rank %d, residual energy %.3e", name, q.shape[1], energy)
        if energy < tol2:
            result.converged = True
            break
    result.Q, result.B = q, b
    return result


def alg9_fixed_precision(x, cfg):
    """Blocked randomized QB with power iterations."""
    src, cap, normx2, tol2 = _setup(x, cfg)
    n1, n2, n3 = src.shape

    def range_finder(width, q, b, rng):
        omega = gauss_tensor(n2, width, n3, cfg.kind, rng)
        ql = orth(_project_out(src.dot(omega), q, b, omega))
        for _ in range(cfg.power_or_passes):
            # X^T * Ql - B^T * (Q^T * Ql)
            r = src.tdot(ql)
            if q.shape[1]:
                r = r - t_product(t_transpose(b), t_product(t_transpose(q), ql))
            ql = orth(r)
            ql = orth(_project_out(src.dot(ql), q, b, ql))
        return ql

    return _qb_loop(src, cap, normx2, tol2, cfg, range_finder, "alg9")


def alg10_fixed_precision(x, cfg):
    """Pass-efficient blocked QB spending exactly ``q`` data passes per block.

    Even ``q`` starts from a deflated Gaussian sketch; odd ``q`` starts from
    a random ``I1 x b`` basis and spends no pass on it.  ``(q - 1) // 2``
    power rounds follow, each ``X * (X^T * Ql)`` re-based with T-LU except the
    last, which deflates and orthonormalizes.
    """
    q_passes = cfg.power_or_passes
    if q_passes <= 2:
        raise ValueError(f"alg10 needs more than 2 passes, got {q_passes}")
    src, cap, normx2, tol2 = _setup(x, cfg)
    n1, n2, n3 = src.shape
    rounds = (q_passes - 1) // 2

    def range_finder(width, q, b, rng):
        if q_passes % 2 == 0:
            omega = gauss_tensor(n2, width, n3, cfg.kind, rng)
            ql, _ = t_lu(_project_out(src.dot(omega), q, b, omega))
        else:
            ql = gauss_tensor(n1, width, n3, cfg.kind, rng)
        for t in range(1, rounds + 1):
            if t == rounds:
                r = src.tdot(ql)
                ql = orth(_project_out(src.dot(r), q, b, r))
            else:
                ql, _ = t_lu(src.dot(src.tdot(ql)))
        return ql

    return _qb_loop(src, cap, normx2, tol2, cfg, range_finder, "alg10")


def _gram(y):
    """Fourier slices of ``Z = Y^T * Y``, rejecting near-singular ones."""
    yh = hat(y)
    zh = ctranspose(yh) @ yh
    lam = np.linalg.eigvalsh(zh)
    top = lam[:, -1] if lam.size else np.zeros(0)
    if lam.size == 0 or np.any(top <= 0) or np.any(lam[:, 0] < GRAM_RCOND * top):
        raise IllConditionedGram(
            "Y^T*Y is numerically singular; the sketch has outgrown the numerical rank")
    return zh


def residual_estimate(y, w, normx2):
    """``||X||^2 - trace((W^T*W * (Y^T*Y)^-1)_1)``.

    Equals ``||X - Q*B||_F^2`` for ``Q = orth(Y)`` and ``B = Q^T*X`` whenever
    ``W = X^T*Y``, without forming either factor.
    """
    n3 = y.shape[2]
    zh = _gram(y)
    wh = hat(w)
    th = ctranspose(wh) @ wh
    tr = np.trace(np.linalg.solve(zh, th), axis1=1, axis2=2).real
    return float(normx2 - spectral_weights(n3) @ tr / n3)


def _deflate_gram(w, zh, omega):
    """``W * Z^-1 * W^T * omega`` evaluated slice-wise."""
    wh = hat(w)
    return unhat(wh @ np.linalg.solve(zh, ctranspose(wh) @ hat(omega)), w.shape[2])


def qb_from_sketches(y, w):
    """Orthonormal ``Q`` and ``B = Q^T * X`` from ``Y = X*Omega`` and ``W = X^T*Y``.

    Uses ``Z = Y^T*Y = V*D*V^T``: ``Q = Y*V*D^-1/2`` and ``B = (W*V*D^-1/2)^T``.
    Eigen-directions whose Fourier eigenvalue falls below ``100 * eps`` of the
    slice maximum are dropped, reading the kept ones from the ascending tail.
    """
    n3 = y.shape[2]
    eig = t_eig(t_product(t_transpose(y), y))
    lam = np.diagonal(hat(eig.D), axis1=1, axis2=2).real
    thresh = GRAM_RCOND * lam[:, -1:]
    drop = int(np.max(np.sum(lam < thresh, axis=1)))
    v = eig.V[:, drop:, :]
    d = eig.D[drop:, drop:, :]
    scale = t_inv(fdiag_sqrt(d))
    q = t_product(y, t_product(v, scale))
    b = t_transpose(t_product(w, t_product(v, scale)))
    return q, b


def alg11_fixed_precision(x, cfg):
    """Sketch-only fixed-precision QB with the trace residual estimator."""
    src, cap, normx2, tol2 = _setup(x, cfg)
    n1, n2, n3 = src.shape
    y, w = np.zeros((n1, 0, n3)), np.zeros((n2, 0, n3))
    result = QbFactors(*_empty(src), converged=normx2 < tol2)
    if result.converged:
        return result
    rng = np.random.default_rng(cfg.seed)
    zh = None
    energy = normx2
    while True:
        width = min(cfg.block, cap - y.shape[1])
        if width <= 0:
            result.Q, result.B = qb_from_sketches(y, w)
            raise RankCapExceeded(
                f"alg11: reached rank {y.shape[1]} with residual energy {energy:.3e} "
                f"above {tol2:.3e}", result)
        start = src.passes
        omega = gauss_tensor(n2, width, n3, cfg.kind, rng)
        for _ in range(cfg.power_or_passes):
            wi = src.tdot(src.dot(omega))
            if zh is not None:
                wi = wi - _deflate_gram(w, zh, omega)
            # deflation leaves rounding of order eps * I3 * ||X||^2 in exhausted directions
            omega = orth(wi, ENERGY_FLOOR * n3 * normx2)
        if omega.shape[1] == 0:
            log.info("alg11: residual range exhausted at rank %d", y.shape[1])
            result.converged = energy < tol2
            break
        yi = src.dot(omega)
        wi = src.tdot(yi)
        y, w = concat(y, yi, 2), concat(w, wi, 2)
        zh = _gram(y)
        energy = residual_estimate(y, w, normx2)
        result.block_passes.append(src.passes - start)
        result.energies.append(energy)
        log.debug("alg11: rank %d, residual energy %.3e", y.shape[1], energy)
        if energy < tol2:
            result.converged = True
            break
    if y.shape[1]:
        result.Q, result.B = qb_from_sketches(y, w)
    return result


def truncate_qb(f, eps):
    """Lift ``Q * B`` to a T-SVD and keep the smallest rank with tail energy ``<= eps^2``."""
    q, b = f.Q, f.B
    n1, _, n3 = q.shape
    n2 = b.shape[1]
    if f.k == 0 or not np.any(b):
        return TsvdFactors(np.zeros((n1, 0, n3)), np.zeros((0, 0, n3)), np.zeros((n2, 0, n3)),
                           np.zeros((n3 // 2 + 1, 0)))
    s = t_svd(b)
    k = s.k
    rank = next(r for r in range(k + 1) if tail_energy(s.spectrum, n3, r) <= eps ** 2)
    if rank == 0:
        return TsvdFactors(np.zeros((n1, 0, n3)), np.zeros((0, 0, n3)), np.zeros((n2, 0, n3)),
                           s.spectrum[:, :0])
    return TsvdFactors(t_product(q, s.U[:, :rank, :]), s.S[:rank, :rank, :],
                       s.V[:, :rank, :], s.spectrum[:, :rank])


def residual_norm(x, f):
    """Explicit ``||X - Q*B||_F``, recomputed from the data."""
    return float(np.linalg.norm((np.asarray(x) - f.reconstruct()).ravel()))


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
