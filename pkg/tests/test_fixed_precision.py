import numpy as np
import pytest

from oracles import rel
from tubal.core import CountedTensor, identity_tensor, t_product, t_transpose
from tubal.errors import IllConditionedGram, RankCapExceeded
from tubal.fixed_precision import (FixedPrecisionConfig, alg9_fixed_precision,
                                   alg10_fixed_precision, alg11_fixed_precision,
                                   qb_from_sketches, residual_estimate, residual_norm,
                                   truncate_qb)
from tubal.linalg import QbFactors, t_inv

RUNS = [("alg9", alg9_fixed_precision, 1), ("alg10", alg10_fixed_precision, 3),
        ("alg10", alg10_fixed_precision, 4), ("alg11", alg11_fixed_precision, 1)]
IDS = [f"{name}-q{q}" for name, _, q in RUNS]


def lowrank(seed, n1, n2, n3, r):
    rng = np.random.default_rng(seed)
    return t_product(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))


def orthonormal(q, tol=1e-9):
    gap = t_product(t_transpose(q), q) - identity_tensor(q.shape[1], q.shape[2])
    return np.abs(gap).max() < tol


@pytest.fixture(scope="module")
def rank5():
    return lowrank(0, 40, 40, 8, 5)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(eps=0), dict(eps=-1), dict(eps=1, block=0),
                                    dict(eps=1, power_or_passes=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            FixedPrecisionConfig(**kw)

    @pytest.mark.parametrize("q", [0, 1, 2])
    def test_alg10_needs_three_passes(self, rank5, q):
        with pytest.raises(ValueError):
            alg10_fixed_precision(rank5, FixedPrecisionConfig(1e-6, 5, q))

    def test_max_rank_bound(self, rank5):
        with pytest.raises(ValueError):
            alg9_fixed_precision(rank5, FixedPrecisionConfig(1e-6, 5, max_rank=41))


@pytest.mark.parametrize("name, fn, q", RUNS, ids=IDS)
class TestAlgorithms:
    def test_zero_tensor(self, name, fn, q):
        f = fn(np.zeros((10, 8, 3)), FixedPrecisionConfig(1e-6, 4, q))
        assert f.k == 0 and f.converged
        assert f.reconstruct().shape == (10, 8, 3)

    def test_exact_recovery(self, name, fn, q, rank5):
        f = fn(rank5, FixedPrecisionConfig(1e-6, 5, q, seed=1))
        assert f.converged and f.k == 5
        assert len(f.block_passes) == 1
        assert residual_norm(rank5, f) <= 1e-6
        assert orthonormal(f.Q)

    def test_relative_tolerance(self, name, fn, q):
        x = lowrank(1, 30, 26, 4, 7) * 1e3
        f = fn(x, FixedPrecisionConfig(1e-6, 3, q, relative=True, seed=2))
        assert f.converged
        assert residual_norm(x, f) <= 1e-6 * np.linalg.norm(x)

    def test_energies_decrease(self, name, fn, q):
        x = lowrank(2, 30, 30, 4, 12) + 1e-2 * np.random.default_rng(0).standard_normal((30, 30, 4))
        f = fn(x, FixedPrecisionConfig(0.5, 3, q, seed=3))
        assert f.converged
        assert np.all(np.diff(f.energies) <= 1e-9 * np.sum(x ** 2))

    def test_rank_cap(self, name, fn, q):
        x = np.random.default_rng(4).standard_normal((20, 18, 3))
        with pytest.raises(RankCapExceeded) as info:
            fn(x, FixedPrecisionConfig(1e-8, 4, q, max_rank=8, seed=0))
        f = info.value.factors
        assert f.k == 8 and not f.converged
        assert orthonormal(f.Q)

    def test_deterministic(self, name, fn, q, rank5):
        cfg = FixedPrecisionConfig(1e-6, 2, q, seed=9)
        np.testing.assert_array_equal(fn(rank5, cfg).reconstruct(), fn(rank5, cfg).reconstruct())


class TestEnergy:
    def test_alg9_tracks_true_residual(self):
        x = lowrank(5, 24, 20, 5, 9) + 1e-2 * np.random.default_rng(1).standard_normal((24, 20, 5))
        f = alg9_fixed_precision(x, FixedPrecisionConfig(0.3, 3, 1, seed=0))
        assert f.energies[-1] == pytest.approx(residual_norm(x, f) ** 2, rel=1e-6)

    def test_alg11_tracks_true_residual(self):
        x = lowrank(6, 24, 20, 5, 9) + 1e-2 * np.random.default_rng(2).standard_normal((24, 20, 5))
        f = alg11_fixed_precision(x, FixedPrecisionConfig(0.3, 3, 1, seed=0))
        assert f.energies[-1] == pytest.approx(residual_norm(x, f) ** 2, rel=1e-6)


class TestPasses:
    @pytest.mark.parametrize("q", [0, 1, 2])
    def test_alg9(self, rank5, q):
        src = CountedTensor(rank5)
        f = alg9_fixed_precision(src, FixedPrecisionConfig(1e-6, 5, q))
        assert f.block_passes == [2 * q + 2]
        assert src.passes == 1 + 2 * q + 2

    @pytest.mark.parametrize("q", [3, 4, 5, 6])
    def test_alg10(self, rank5, q):
        src = CountedTensor(rank5)
        f = alg10_fixed_precision(src, FixedPrecisionConfig(1e-6, 5, q))
        assert f.block_passes == [q]

    @pytest.mark.parametrize("q", [0, 1, 2])
    def test_alg11(self, rank5, q):
        f = alg11_fixed_precision(CountedTensor(rank5), FixedPrecisionConfig(1e-6, 5, q))
        assert f.block_passes == [2 * q + 2]


class TestSketchIdentities:
    def test_estimate_matches_explicit_residual(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((20, 16, 5))
        y = t_product(x, rng.standard_normal((16, 6, 5)))
        w = t_product(t_transpose(x), y)
        q, b = qb_from_sketches(y, w)
        explicit = residual_norm(x, QbFactors(q, b)) ** 2
        assert residual_estimate(y, w, np.sum(x ** 2)) == pytest.approx(explicit, rel=1e-7)

    def test_qb_equals_gram_formula(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((18, 15, 4))
        y = t_product(x, rng.standard_normal((15, 5, 4)))
        w = t_product(t_transpose(x), y)
        q, b = qb_from_sketches(y, w)
        z_inv = t_inv(t_product(t_transpose(y), y))
        ref = t_product(y, t_product(z_inv, t_transpose(w)))
        assert rel(t_product(q, b), ref) < 1e-8
        assert orthonormal(q)

    def test_full_range(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((10, 10, 3))
        y = t_product(x, rng.standard_normal((10, 10, 3)))
        w = t_product(t_transpose(x), y)
        normx2 = np.sum(x ** 2)
        assert abs(residual_estimate(y, w, normx2)) <= 1e-8 * normx2

    def test_zero_w(self):
        y = np.random.default_rng(1).standard_normal((8, 3, 4))
        assert residual_estimate(y, np.zeros((6, 3, 4)), 42.0) == 42.0

    def test_singular_gram(self):
        y = np.random.default_rng(2).standard_normal((8, 3, 4))
        y[:, 2] = y[:, 1]
        with pytest.raises(IllConditionedGram):
            residual_estimate(y, np.zeros((6, 3, 4)), 1.0)


class TestTruncate:
    def test_recovers_rank(self):
        x = lowrank(10, 30, 30, 4, 6) + 1e-6 * np.random.default_rng(3).standard_normal((30, 30, 4))
        f = alg9_fixed_precision(x, FixedPrecisionConfig(1e-3, 10, 1, seed=0))
        assert f.k == 10
        t = truncate_qb(f, 1e-3)
        assert t.k == 6
        assert rel(t.reconstruct(), x) < 1e-3 / np.linalg.norm(x) + 1e-12

    def test_eps_zero_keeps_all(self, rank5):
        f = alg9_fixed_precision(rank5, FixedPrecisionConfig(1e-6, 5, 1))
        assert truncate_qb(f, 0).k == f.k

    def test_zero_b(self):
        f = QbFactors(np.eye(5)[:, :2, None] * np.ones((1, 1, 3)) / np.sqrt(3), np.zeros((2, 4, 3)))
        t = truncate_qb(f, 1e-3)
        assert t.k == 0 and t.reconstruct().shape == (5, 4, 3)


class TestAlg11Overshoot:
    def test_power_step_drops_exhausted_directions(self):
        x = lowrank(1, 30, 26, 4, 7) * 1e3
        f = alg11_fixed_precision(x, FixedPrecisionConfig(1e-6, 3, 1, relative=True, seed=2))
        assert f.k == 7 and f.block_passes[-1] == 4

    def test_plain_block_past_rank_is_reported(self):
        # without power steps nothing filters the block, so Z turns singular
        x = lowrank(1, 30, 26, 4, 7) * 1e3
        with pytest.raises(IllConditionedGram):
            alg11_fixed_precision(x, FixedPrecisionConfig(1e-6, 3, 0, relative=True, seed=2))
