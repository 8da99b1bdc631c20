"""Matrix factorizations lifted to third-order tensors through the T-product.

Every routine factors the stored half spectrum slice by slice (batched LAPACK
calls) and folds the factors back with an inverse FFT; the conjugate half of
the spectrum is never touched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import as_tensor, ctranspose, hat, spectral_weights, t_transpose, unhat
from .errors import (DimMismatch, NegativeSpectrum, NotSymmetric, RankOutOfRange,
                     SingularSlice, SingularTensor)

EPS = np.finfo(np.float64).eps


@dataclass
class TsvdFactors:
    """``X ~= U * S * V^T`` with orthonormal ``U``, ``V`` and f-diagonal ``S``.

    ``spectrum`` holds the Fourier-domain singular values, shape ``(h, k)``.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    spectrum: np.ndarray | None = None

    @property
    def k(self):
        return self.S.shape[0]

    def reconstruct(self):
        return unhat(hat(self.U) @ hat(self.S) @ ctranspose(hat(self.V)), self.U.shape[2])


@dataclass
class QrFactors:
    Q: np.ndarray
    R: np.ndarray


@dataclass
class QbFactors:
    """``X ~= Q * B`` with orthonormal ``Q``.

    The bookkeeping fields are filled by the fixed-precision drivers:
    ``block_passes`` records data passes spent on each block and ``energies``
    the residual-energy estimate after each block.
    """

    Q: np.ndarray
    B: np.ndarray
    converged: bool = True
    block_passes: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    @property
    def k(self):
        return self.Q.shape[1]

    def reconstruct(self):
        return unhat(hat(self.Q) @ hat(self.B), self.Q.shape[2])


@dataclass
class EigFactors:
    V: np.ndarray
    D: np.ndarray


def fdiag_from_spectrum(vals, n3, shape=None):
    """f-diagonal tensor whose Fourier slices are ``diag(vals[i])``."""
    h, k = vals.shape
    n1, n2 = shape if shape is not None else (k, k)
    dh = np.zeros((h, n1, n2), dtype=complex)
    idx = np.arange(k)
    dh[:, idx, idx] = vals
    return unhat(dh, n3)


def is_fdiagonal(x, tol=0.0):
    x = as_tensor(x)
    off = x.copy()
    m = min(x.shape[0], x.shape[1])
    off[np.arange(m), np.arange(m), :] = 0
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def t_qr(x):
    """Economic T-QR: ``Q`` has ``min(I1, I2)`` orthonormal lateral slices."""
    x = as_tensor(x)
    q, r = np.linalg.qr(hat(x))
    n3 = x.shape[2]
    return QrFactors(unhat(q, n3), unhat(r, n3))


def orth(x, atol=0.0):
    """Orthonormal basis for the T-range of ``x``.

    Columns whose Fourier-domain ``R`` diagonal is negligible in every slice
    (below ``max(I1, I2) * eps`` times the largest diagonal, or below
    ``atol``) are dropped, so a zero tensor yields an ``I1 x 0 x I3`` basis.
    """
    x = as_tensor(x)
    n1, n2, n3 = x.shape
    q, r = np.linalg.qr(hat(x))
    diag = np.abs(np.diagonal(r, axis1=1, axis2=2))
    if diag.size == 0:
        return np.zeros((n1, 0, n3))
    cutoff = max(max(n1, n2) * EPS * diag.max(), atol)
    keep = np.any(diag > cutoff, axis=0) if diag.max() > 0 else np.zeros(diag.shape[1], bool)
    return unhat(q[:, :, keep], n3)


def t_svd(x):
    """Economic T-SVD with ``k = min(I1, I2)`` singular tubes."""
    x = as_tensor(x)
    n3 = x.shape[2]
    u, s, vh = np.linalg.svd(hat(x), full_matrices=False)
    return TsvdFactors(unhat(u, n3), fdiag_from_spectrum(s.astype(complex), n3),
                       unhat(ctranspose(vh), n3), s)


def t_svd_truncated(x, rank):
    x = as_tensor(x)
    kmax = min(x.shape[0], x.shape[1])
    if not 1 <= rank <= kmax:
        raise RankOutOfRange(f"rank {rank} outside [1, {kmax}]")
    n3 = x.shape[2]
    u, s, vh = np.linalg.svd(hat(x), full_matrices=False)
    u, s, vh = u[:, :, :rank], s[:, :rank], vh[:, :rank, :]
    return TsvdFactors(unhat(u, n3), fdiag_from_spectrum(s.astype(complex), n3),
                       unhat(ctranspose(vh), n3), s)


def tail_energy(spectrum, n3, rank):
    """Squared Frobenius error of truncating a T-SVD with this spectrum at ``rank``."""
    w = spectral_weights(n3)
    return float(np.sum(w[:, None] * spectrum[:, rank:] ** 2) / n3)


def t_lu(x):
    """Slice-wise pivoted T-LU, ``X = L * U`` with the row permutation folded into ``L``."""
    x = as_tensor(x)
    n3 = x.shape[2]
    pl, u = scipy.linalg.lu(hat(x), permute_l=True)
    pivots = np.diagonal(u, axis1=-2, axis2=-1)
    if np.any(pivots == 0):
        raise SingularSlice("zero pivot in a Fourier slice")
    return unhat(pl, n3), unhat(u, n3)


def check_symmetric(x, tol=1e-10):
    x = as_tensor(x)
    if x.shape[0] != x.shape[1]:
        raise NotSymmetric(f"tensor of shape {x.shape} is not square")
    scale = max(np.linalg.norm(x.ravel()), 1.0)
    if np.linalg.norm((t_transpose(x) - x).ravel()) > tol * scale:
        raise NotSymmetric("X^T differs from X")


def t_eig(x):
    """T-EIG of a symmetric tensor; eigenvalues ascend within each Fourier slice."""
    x = as_tensor(x)
    check_symmetric(x)
    n3 = x.shape[2]
    xh = hat(x)
    w, v = np.linalg.eigh(0.5 * (xh + ctranspose(xh)))
    return EigFactors(unhat(v, n3), fdiag_from_spectrum(w.astype(complex), n3))


def fdiag_sqrt(d):
    """Square root of an f-diagonal tensor, tube by tube in the Fourier domain."""
    d = as_tensor(d)
    if not is_fdiagonal(d):
        raise ValueError("input is not f-diagonal")
    n1, n2, n3 = d.shape
    k = min(n1, n2)
    vals = np.diagonal(hat(d), axis1=1, axis2=2)
    if vals.size == 0:
        return d.copy()
    top = np.abs(vals).max()
    realish = np.abs(vals.imag) <= 1e-10 * max(top, 1.0)
    if np.any(realish & (vals.real < -1e-6 * top)):
        raise NegativeSpectrum("negative Fourier eigenvalue below -1e-6 * max")
    vals = np.where(realish & (vals.real < 0), 0.0, vals)
    return fdiag_from_spectrum(np.sqrt(vals[:, :k]), n3, (n1, n2))


def t_pinv(x):
    """Moore-Penrose pseudoinverse, slice-wise with cutoff ``max(I1, I2) * eps * smax``."""
    x = as_tensor(x)
    n1, n2, n3 = x.shape
    if n1 == 0 or n2 == 0:
        return np.zeros((n2, n1, n3))
    return unhat(np.linalg.pinv(hat(x), rcond=max(n1, n2) * EPS), n3)


def t_inv(x):
    x = as_tensor(x)
    if x.shape[0] != x.shape[1]:
        raise DimMismatch(f"cannot invert non-square tensor {x.shape}")
    xh = hat(x)
    cond = np.linalg.cond(xh)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1.0 / (100 * EPS)):
        raise SingularTensor(f"Fourier slice condition number {np.max(cond):.3e}")
    return unhat(np.linalg.inv(xh), x.shape[2])


def tubal_rank(x, tol=1e-10):
    """Number of singular tubes whose norm exceeds ``tol`` times the largest one."""
    x = as_tensor(x)
    n3 = x.shape[2]
    s = np.linalg.svd(hat(x), compute_uv=False)
    if s.size == 0:
        return 0
    tube = np.sqrt(spectral_weights(n3) @ s ** 2 / n3)
    if tube.max() == 0:
        return 0
    return int(np.sum(tube > tol * tube.max()))


def trace_first_slice(x):
    x = as_tensor(x)
    if x.shape[0] != x.shape[1]:
        raise DimMismatch(f"trace needs square frontal slices, got {x.shape}")
    return float(np.trace(x[:, :, 0]))
