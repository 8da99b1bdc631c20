"""Synthetic test tensors: noisy low tubal rank products and three smooth cases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import t_product

KINDS = ("lowrank", "case1", "case2", "case3")
NOISE_REFS = ("clean", "unit")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "lowrank"
    n: int = 100
    rank: int = 50
    delta: float = 1e-3
    seed: int = 0
    noise_ref: str = "clean"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.kind == "lowrank":
            if not 1 <= self.rank <= self.n:
                raise ValueError("rank must lie in [1, n]")
            if self.delta < 0:
                raise ValueError("delta must be nonnegative")
            if self.noise_ref not in NOISE_REFS:
                raise ValueError(f"noise_ref must be one of {NOISE_REFS}")


def gen_lowrank(spec):
    """``randn(n, R, n) * randn(R, n, n)`` plus Gaussian noise.

    The noise is ``delta * Y / ||Y||_F * scale`` with ``scale = ||X_clean||_F``
    for ``noise_ref="clean"`` (so the relative perturbation is exactly
    ``delta``) or ``scale = 1`` for ``noise_ref="unit"`` (noise of absolute
    Frobenius norm ``delta``).
    """
    rng = np.random.default_rng(spec.seed)
    n, r = spec.n, spec.rank
    clean = t_product(rng.standard_normal((n, r, n)), rng.standard_normal((r, n, n)))
    if spec.delta == 0:
        return clean
    noise = rng.standard_normal((n, n, n))
    scale = np.linalg.norm(clean.ravel()) if spec.noise_ref == "clean" else 1.0
    return clean + spec.delta * noise / np.linalg.norm(noise.ravel()) * scale


def gen_case(spec):
    n = spec.n
    i, j, k = np.meshgrid(*(np.arange(1, n + 1, dtype=float),) * 3, indexing="ij")
    if spec.kind == "case1":
        return 1.0 / np.sqrt(i ** 2 + j ** 2 + k ** 2)
    if spec.kind == "case2":
        return 1.0 / np.cbrt(i ** 3 + j ** 3 + k ** 3)
    if spec.kind == "case3":
        return 1.0 / (np.sin(i) + np.tanh(j + k))
    raise ValueError(f"{spec.kind!r} is not a closed-form case")


def generate(spec):
    return gen_lowrank(spec) if spec.kind == "lowrank" else gen_case(spec)
