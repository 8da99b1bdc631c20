import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tubal.completion import (CompletionConfig, MaskedTensor, complete, complete_iterations,
                              gaussian_blur, gaussian_kernel, initial_fill, psnr, rel_err,
                              tsvd_operator, upsample_mask)
from tubal.core import t_product
from tubal.errors import DimMismatch, IdenticalInputs, ZeroReference


def lowrank(seed, n1, n2, n3, r):
    rng = np.random.default_rng(seed)
    return t_product(rng.standard_normal((n1, r, n3)), rng.standard_normal((r, n2, n3)))


def smooth_image(n, channels=3):
    t = np.linspace(0, 1, n)
    base = 128 + 60 * np.sin(3 * t)[:, None] * np.cos(2 * t)[None, :]
    return np.stack([base + 10 * c for c in range(channels)], axis=2)


class TestMaskedTensor:
    def test_zeroes_missing_entries(self):
        m = MaskedTensor(np.full((3, 3, 2), 7.0), np.eye(3)[:, :, None] * np.ones((1, 1, 2)))
        assert np.all(m.data[m.mask == 0] == 0) and np.all(m.data[m.mask == 1] == 7)
        assert m.density == pytest.approx(1 / 3)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            MaskedTensor(np.zeros((2, 2, 1)), np.full((2, 2, 1), 0.5))

    def test_shape_mismatch(self):
        with pytest.raises(DimMismatch):
            MaskedTensor(np.zeros((2, 2, 1)), np.zeros((2, 3, 1)))


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(init="linear"), dict(init_sigma=0), dict(max_iters=0),
                                    dict(tol=-1), dict(filter_sigma=-0.1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            CompletionConfig(tsvd_operator(2), **kw)


class TestIteration:
    def test_known_entries_exact(self):
        x = lowrank(0, 20, 20, 3, 3)
        mask = (np.random.default_rng(1).random(x.shape) < 0.5).astype(float)
        m = MaskedTensor(x, mask)
        c, _ = complete_iterations(m, CompletionConfig(tsvd_operator(3), max_iters=10))
        np.testing.assert_array_equal(c[mask == 1], x[mask == 1])

    def test_random_mask_beats_zero_fill(self):
        x = lowrank(2, 32, 32, 3, 3)
        mask = (np.random.default_rng(3).random(x.shape) < 0.5).astype(float)
        m = MaskedTensor(x, mask)
        c, iters = complete_iterations(m, CompletionConfig(tsvd_operator(3), max_iters=80))
        hole = mask == 0
        err = np.linalg.norm(c[hole] - x[hole]) / np.linalg.norm(x[hole])
        assert err < 1.0
        assert err < 0.1
        assert 1 <= iters <= 80

    def test_full_mask(self):
        x = np.random.default_rng(4).standard_normal((6, 5, 2))
        out = complete(MaskedTensor(x, np.ones_like(x)),
                       CompletionConfig(tsvd_operator(1), filter_sigma=0))
        np.testing.assert_array_equal(out, x)

    def test_empty_mask(self):
        z = np.zeros((6, 5, 2))
        c, iters = complete_iterations(MaskedTensor(z, z), CompletionConfig(tsvd_operator(2)))
        assert iters == 1 and np.all(c == 0)

    def test_grid_mask_zero_start_is_fixed_point(self):
        m = upsample_mask(smooth_image(12), 2)
        c, iters = complete_iterations(m, CompletionConfig(tsvd_operator(6)))
        assert iters == 1
        assert np.abs(c[m.mask == 0]).max() < 1e-9

    def test_smooth_start_fills_grid(self):
        img = smooth_image(48)
        m = upsample_mask(img[::2, ::2], 2)
        cfg = CompletionConfig(tsvd_operator(10), max_iters=10, filter_sigma=0, init="smooth")
        c, _ = complete_iterations(m, cfg)
        assert psnr(img, c) > psnr(img, m.data) + 10

    def test_initial_fill_keeps_known(self):
        m = upsample_mask(smooth_image(6), 3)
        f = initial_fill(m, 3.0)
        np.testing.assert_array_equal(f[m.mask == 1], m.data[m.mask == 1])
        assert np.all(f > 0)


class TestUpsample:
    def test_factor_one(self):
        img = smooth_image(4)
        m = upsample_mask(img, 1)
        np.testing.assert_array_equal(m.data, img)
        assert np.all(m.mask == 1)

    def test_shape_law(self):
        m = upsample_mask(np.arange(4.0).reshape(2, 2, 1) + 1, 4)
        assert m.data.shape == (8, 8, 1) and m.mask.sum() == 4
        assert m.data[4, 4, 0] == 4

    @pytest.mark.parametrize("factor", [2, 3, 4, 5])
    def test_density(self, factor):
        assert upsample_mask(np.ones((7, 5, 3)), factor).density == 1 / factor ** 2

    def test_bad_factor(self):
        with pytest.raises(ValueError):
            upsample_mask(np.ones((2, 2, 1)), 0)


class TestBlur:
    def test_sigma_zero(self):
        img = smooth_image(5)
        out = gaussian_blur(img, 0)
        np.testing.assert_array_equal(out, img)
        assert out is not img

    @given(st.floats(0.1, 4.0), st.floats(-300, 300))
    def test_constant_image(self, sigma, value):
        np.testing.assert_allclose(gaussian_blur(np.full((9, 7, 2), value), sigma), value,
                                   atol=1e-12 * max(abs(value), 1))

    def test_impulse_center(self):
        img = np.zeros((9, 9, 1))
        img[4, 4] = 1
        k = gaussian_kernel(0.5)
        assert k.size == 3
        assert gaussian_blur(img, 0.5)[4, 4, 0] == pytest.approx(k[1] ** 2, rel=1e-14)
        assert k[1] == pytest.approx(1 / (1 + 2 * math.exp(-2)), rel=1e-14)

    def test_interior_mass(self):
        img = np.zeros((15, 15, 3))
        img[6:9, 6:9] = np.random.default_rng(0).random((3, 3, 3))
        np.testing.assert_allclose(gaussian_blur(img, 1.0).sum(axis=(0, 1)), img.sum(axis=(0, 1)))

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            gaussian_blur(np.ones((3, 3, 1)), -1)


class TestMetrics:
    def test_psnr_hand_value(self):
        assert psnr(np.full((4, 4, 3), 255.0), np.full((4, 4, 3), 250.0)) == pytest.approx(
            10 * math.log10(2601), abs=1e-12)
        assert 10 * math.log10(2601) == pytest.approx(34.151, abs=5e-4)

    def test_psnr_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((5, 4, 3)) * 255, rng.random((5, 4, 3)) * 255
        assert psnr(a, b) == psnr(b, a)

    def test_psnr_identical(self):
        with pytest.raises(IdenticalInputs):
            psnr(np.ones((2, 2, 1)), np.ones((2, 2, 1)))

    def test_psnr_shapes(self):
        with pytest.raises(DimMismatch):
            psnr(np.ones((2, 2, 1)), np.ones((2, 3, 1)))

    def test_rel_err(self):
        x = np.random.default_rng(2).standard_normal((4, 3, 2))
        assert rel_err(x, x) == 0
        assert rel_err(x, np.zeros_like(x)) == pytest.approx(1)
        assert rel_err(x, 2 * x) == pytest.approx(1)
        with pytest.raises(ZeroReference):
            rel_err(np.zeros_like(x), x)
