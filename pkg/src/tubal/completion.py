"""Low tubal rank completion for image super-resolution, plus image metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from .core import as_tensor
from .errors import DimMismatch, IdenticalInputs, ZeroReference
from .linalg import t_svd_truncated

log = logging.getLogger(__name__)

PEAK = 255.0
INITS = ("zero", "smooth")


@dataclass(frozen=True)
class MaskedTensor:
    """Partially observed tensor; ``mask`` is 1 on known entries and 0 elsewhere."""

    data: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        data, mask = as_tensor(self.data), as_tensor(self.mask)
        if data.shape != mask.shape:
            raise DimMismatch(f"data {data.shape} and mask {mask.shape} differ")
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask entries must be 0 or 1")
        object.__setattr__(self, "data", np.where(mask == 1, data, 0.0))
        object.__setattr__(self, "mask", mask)

    @property
    def density(self):
        return float(self.mask.mean()) if self.mask.size else 0.0


def tsvd_operator(rank):
    """Truncated T-SVD at ``rank`` (clipped to the tensor) as a completion operator."""
    def op(x):
        r = min(rank, x.shape[0], x.shape[1])
        return t_svd_truncated(x, r).reconstruct()
    op.__name__ = f"tsvd{rank}"
    return op


@dataclass(frozen=True)
class CompletionConfig:
    """``operator`` maps a full tensor to a low tubal rank approximation of it.

    Any of the approximation algorithms can be wrapped, e.g.
    ``lambda x: alg7_single_pass(x, p).reconstruct()``.

    ``init="zero"`` starts from the observed data with zeros in the holes.
    On a regular grid mask that start is already a fixed point: the range of
    a grid-supported tensor is grid-supported, so every low-rank operator
    returns zeros in the holes again.  ``init="smooth"`` fills the holes by
    normalized Gaussian convolution (std ``init_sigma``) first.
    """

    operator: Callable[[np.ndarray], np.ndarray]
    max_iters: int = 80
    tol: float = 1e-4
    filter_sigma: float = 0.5
    init: str = "zero"
    init_sigma: float = 2.0

    def __post_init__(self):
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.init_sigma <= 0:
            raise ValueError("init_sigma must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.filter_sigma < 0:
            raise ValueError("filter_sigma must be nonnegative")


def complete_iterations(m, cfg):
    """Run the fill-in iteration; return the unfiltered estimate and the iteration count.

    Each step replaces the missing entries by those of ``operator(C)`` while the
    known entries keep their observed values bit for bit.
    """
    known = m.mask == 1
    c = initial_fill(m, cfg.init_sigma) if cfg.init == "smooth" else m.data.copy()
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x = np.asarray(cfg.operator(c))
        nxt = np.where(known, m.data, x)
        base = np.linalg.norm(c.ravel())
        change = np.linalg.norm((nxt - c).ravel())
        c = nxt
        if change <= cfg.tol * base or (base == 0 and change == 0):
            break
    log.debug("completion stopped after %d iterations", it)
    return c, it


def initial_fill(m, sigma):
    """Known entries kept, holes set to the Gaussian-weighted mean of nearby known entries."""
    weight = gaussian_blur(m.mask, sigma)
    smooth = gaussian_blur(m.data, sigma)
    filled = np.divide(smooth, weight, out=np.zeros_like(smooth), where=weight > 0)
    return np.where(m.mask == 1, m.data, filled)


def complete(m, cfg):
    """Completed tensor, smoothed by :func:`gaussian_blur` when ``filter_sigma > 0``.

    Filtering touches the known entries too, so they are only preserved
    exactly with ``filter_sigma=0``.
    """
    c, _ = complete_iterations(m, cfg)
    return gaussian_blur(c, cfg.filter_sigma) if cfg.filter_sigma > 0 else c


def upsample_mask(img, factor):
    """Spread ``img`` on a grid ``factor`` times finer in modes 1 and 2.

    Original pixels land on rows and columns ``0, factor, 2*factor, ...``;
    everything else is unknown.
    """
    img = as_tensor(img)
    if factor < 1:
        raise ValueError("factor must be at least 1")
    n1, n2, n3 = img.shape
    data = np.zeros((factor * n1, factor * n2, n3))
    mask = np.zeros_like(data)
    data[::factor, ::factor, :] = img
    mask[::factor, ::factor, :] = 1.0
    return MaskedTensor(data, mask)


def gaussian_kernel(sigma):
    radius = math.ceil(2 * sigma)
    t = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img, sigma):
    """Separable Gaussian smoothing of every frontal slice.

    Kernel half-width ``ceil(2 * sigma)``, normalized to unit sum, with
    replicated borders.  ``sigma == 0`` returns a copy of the input.
    """
    img = as_tensor(img)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return img.copy()
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(img, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def _same_shape(x, y):
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise DimMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    return x, y


def psnr(x, y):
    """Peak signal-to-noise ratio in dB for a peak value of 255."""
    x, y = _same_shape(x, y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0:
        raise IdenticalInputs("inputs are identical; PSNR is infinite")
    return 10 * math.log10(PEAK ** 2 / mse)


def rel_err(x, x_approx):
    x, x_approx = _same_shape(x, x_approx)
    ref = np.linalg.norm(x.ravel())
    if ref == 0:
        raise ZeroReference("reference tensor has zero norm")
    return float(np.linalg.norm((x - x_approx).ravel()) / ref)
