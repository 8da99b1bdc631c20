"""Dense third-order tensors and the T-product algebra.

Tensors are plain ``float64`` numpy arrays of shape ``(I1, I2, I3)``.  All
T-operations are evaluated in the Fourier domain along mode 3, where the
T-product becomes an independent matrix product per frontal slice.  Only the
first ``I3 // 2 + 1`` (= ceil((I3 + 1) / 2)) Fourier slices are ever formed;
the remaining ones are their complex conjugates, so ``numpy.fft.rfft`` /
``irfft`` give exactly the half spectrum we need.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, SymmetryViolation

SYMMETRY_TOL = 1e-6


def as_tensor(x, copy=False):
    """Validate ``x`` as a real third-order tensor.

    Matrices are promoted to tensors with a single frontal slice.
    """
    arr = np.array(x, dtype=np.float64) if copy else np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimMismatch(f"expected a third-order tensor, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


def half_length(n3):
    """Number of explicitly stored Fourier slices for depth ``n3``."""
    return n3 // 2 + 1


def spectral_weights(n3):
    """Multiplicity of each stored Fourier slice in the full spectrum."""
    w = np.full(half_length(n3), 2.0)
    w[0] = 1.0
    if n3 % 2 == 0:
        w[-1] = 1.0
    return w


@dataclass(frozen=True)
class FourierTensor:
    """Half spectrum of a real tensor along mode 3.

    ``slices[i]`` is the complex ``I1 x I2`` Fourier slice ``i`` (0-based);
    slices past ``half_length(I3)`` are implied by conjugate symmetry.
    """

    dims: tuple
    slices: np.ndarray

    def __post_init__(self):
        n1, n2, n3 = self.dims
        if self.slices.shape != (half_length(n3), n1, n2):
            raise DimMismatch(
                f"expected {half_length(n3)} slices of {n1}x{n2}, got {self.slices.shape}")

    def full(self):
        """All ``I3`` Fourier slices, shape ``(I3, I1, I2)``."""
        n3 = self.dims[2]
        h = half_length(n3)
        tail = np.conj(self.slices[1:n3 - h + 1][::-1])
        return np.concatenate([self.slices, tail], axis=0)


def hat(x):
    """Half spectrum of ``x`` as a batched ``(h, I1, I2)`` complex array."""
    # contiguous slices keep batched matmul on the BLAS path
    return np.ascontiguousarray(np.moveaxis(np.fft.rfft(x, axis=2), 2, 0))


def unhat(xh, n3, tol=SYMMETRY_TOL):
    """Inverse of :func:`hat`.

    Self-conjugate slices (index 0, and ``n3 / 2`` for even ``n3``) must be
    real; their imaginary residue is dropped if below ``tol * ||X||_F`` and
    rejected otherwise.
    """
    selfconj = [0] + ([n3 // 2] if n3 % 2 == 0 else [])
    residue = np.sqrt(sum(np.sum(xh[i].imag ** 2) for i in selfconj) / n3)
    if residue > 0:
        w = spectral_weights(n3)
        total = np.sqrt(np.einsum("i,ijk->", w, np.abs(xh) ** 2) / n3)
        if residue > tol * total:
            raise SymmetryViolation(
                f"imaginary residue {residue:.3e} exceeds {tol:g} * {total:.3e}")
    return np.fft.irfft(np.moveaxis(xh, 0, 2), n=n3, axis=2)


def fft_mode3(x):
    x = as_tensor(x)
    return FourierTensor(x.shape, hat(x))


def ifft_mode3(xf):
    return unhat(xf.slices, xf.dims[2])


def _check_depth(a, b):
    if a.shape[2] != b.shape[2]:
        raise DimMismatch(f"mode-3 sizes differ: {a.shape[2]} vs {b.shape[2]}")


def t_product(a, b):
    """T-product ``a * b`` of ``(I1, I2, I3)`` and ``(I2, I4, I3)`` tensors."""
    a, b = as_tensor(a), as_tensor(b)
    _check_depth(a, b)
    if a.shape[1] != b.shape[0]:
        raise DimMismatch(f"inner sizes differ: {a.shape} * {b.shape}")
    return unhat(hat(a) @ hat(b), a.shape[2])


def t_transpose(x):
    """Transpose every frontal slice and reverse the order of slices 2..I3."""
    x = as_tensor(x)
    xt = np.transpose(x, (1, 0, 2))
    return np.concatenate([xt[:, :, :1], xt[:, :, :0:-1]], axis=2)


def identity_tensor(n1, n3):
    e = np.zeros((n1, n1, n3))
    e[:, :, 0] = np.eye(n1)
    return e


def concat(a, b, mode):
    """Concatenate along mode 1 (stack horizontal slices) or 2 (lateral)."""
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    a, b = as_tensor(a), as_tensor(b)
    if a.size == 0:
        return b.copy()
    if b.size == 0:
        return a.copy()
    other = 0 if mode == 2 else 1
    if a.shape[other] != b.shape[other] or a.shape[2] != b.shape[2]:
        raise DimMismatch(f"cannot concatenate {a.shape} and {b.shape} along mode {mode}")
    return np.concatenate([a, b], axis=mode - 1)


def fro_norm(x):
    return float(np.linalg.norm(as_tensor(x).ravel()))


def fro_norm_fourier(x):
    """Frobenius norm evaluated from the half spectrum (Parseval)."""
    x = as_tensor(x)
    n3 = x.shape[2]
    e = np.einsum("i,ijk->", spectral_weights(n3), np.abs(hat(x)) ** 2)
    return float(np.sqrt(e / n3))


def hadamard(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a * b


def gauss_tensor(n1, n2, n3, kind="full", seed=None):
    """Random test tensor.

    ``kind="full"`` draws every entry i.i.d. standard normal; ``"first_slice"``
    fills only the first frontal slice and leaves the others zero.  ``seed``
    may be an int or a ``numpy.random.Generator`` (which is advanced).
    """
    rng = np.random.default_rng(seed)
    if kind == "full":
        return rng.standard_normal((n1, n2, n3))
    if kind == "first_slice":
        out = np.zeros((n1, n2, n3))
        out[:, :, 0] = rng.standard_normal((n1, n2))
        return out
    raise ValueError(f"unknown kind {kind!r}")


class CountedTensor:
    """Read-only view of a data tensor that counts full sweeps over it.

    Every method that touches the data increments :attr:`passes` exactly once,
    so a single-pass algorithm must finish with ``passes == 1``.  Combined
    products such as :meth:`sketch` read the data once for both outputs.
    """

    def __init__(self, x):
        self._x = as_tensor(x)
        self._xh = None
        self._lock = threading.Lock()
        self._passes = 0

    @property
    def shape(self):
        return self._x.shape

    @property
    def passes(self):
        return self._passes

    def reset(self):
        with self._lock:
            self._passes = 0

    def _sweep(self):
        with self._lock:
            self._passes += 1
            if self._xh is None:
                self._xh = hat(self._x)
            return self._xh

    def dot(self, b):
        """``X * b``."""
        b = as_tensor(b)
        _check_depth(self._x, b)
        if b.shape[0] != self.shape[1]:
            raise DimMismatch(f"inner sizes differ: {self.shape} * {b.shape}")
        return unhat(self._sweep() @ hat(b), self.shape[2])

    def tdot(self, b):
        """``X^T * b``."""
        b = as_tensor(b)
        _check_depth(self._x, b)
        if b.shape[0] != self.shape[0]:
            raise DimMismatch(f"inner sizes differ: {self.shape}^T * {b.shape}")
        return unhat(ctranspose(self._sweep()) @ hat(b), self.shape[2])

    def sketch(self, omega1, omega2):
        """Range and co-range sketches ``(X * omega1, X^T * omega2)`` in one pass."""
        omega1, omega2 = as_tensor(omega1), as_tensor(omega2)
        _check_depth(self._x, omega1)
        _check_depth(self._x, omega2)
        if omega1.shape[0] != self.shape[1] or omega2.shape[0] != self.shape[0]:
            raise DimMismatch("test tensors do not conform to the data")
        xh = self._sweep()
        n3 = self.shape[2]
        return (unhat(xh @ hat(omega1), n3),
                unhat(ctranspose(xh) @ hat(omega2), n3))

    def cross(self, rows, cols):
        """Horizontal slices ``X(rows, :, :)`` and lateral slices ``X(:, cols, :)``."""
        self._sweep()
        return self._x[np.asarray(rows), :, :].copy(), self._x[:, np.asarray(cols), :].copy()

    def norm2(self):
        self._sweep()
        return float(np.sum(self._x ** 2))

    def materialize(self):
        """The wrapped tensor itself, counted as a pass."""
        self._sweep()
        return self._x


def counted_source(x):
    return CountedTensor(x)


def as_source(x):
    return x if isinstance(x, CountedTensor) else CountedTensor(x)


def ctranspose(ah):
    return np.conj(np.swapaxes(ah, -1, -2))
