import math

import numpy as np
import pytest

from tilesr import data, metrics, ops
from tilesr.tensor import Tensor

from oracles import ssim_direct


def rand_img(seed, h=32, w=32, c=3):
    return np.random.default_rng(seed).uniform(size=(h, w, c)).astype(np.float32)


class TestPsnr:
    def test_identical_is_infinite(self):
        a = rand_img(0)
        assert metrics.psnr(a, a) == math.inf

    def test_zero_vs_one_is_zero_db(self):
        a = np.zeros((8, 8, 3))
        b = np.ones((8, 8, 3))
        assert metrics.psnr(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self):
        a, b = rand_img(1), rand_img(2)
        assert metrics.psnr(a, b) == pytest.approx(metrics.psnr(b, a), rel=1e-12)

    def test_monotone_in_noise_amplitude(self):
        a = rand_img(3)
        rng = np.random.default_rng(4)
        noise = rng.normal(size=a.shape)
        values = [
            metrics.psnr(a, np.clip(a + amp * noise, 0, 1))
            for amp in (0.01, 0.02, 0.05, 0.1, 0.2)
        ]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_peak_255_mode(self):
        a = np.zeros((8, 8, 1))
        b = np.full((8, 8, 1), 255.0)
        # mse = 255^2 -> 0 dB at 8-bit peak
        assert metrics.psnr(a, b, peak=255.0) == pytest.approx(0.0, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            metrics.psnr(np.zeros((4, 4, 3)), np.zeros((5, 4, 3)))


class TestSsim:
    def test_identity_is_one(self):
        a = rand_img(5)
        assert metrics.ssim(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_inverted_binary_negative(self):
        rng = np.random.default_rng(6)
        a = (rng.uniform(size=(32, 32, 1)) > 0.5).astype(np.float32)
        assert metrics.ssim(a, 1.0 - a) < 0.0

    def test_bounded(self):
        for seed in range(5):
            v = metrics.ssim(rand_img(seed), rand_img(seed + 100))
            assert -1.0 <= v <= 1.0

    def test_matches_direct_window_oracle(self):
        rng = np.random.default_rng(7)
        a = rng.uniform(size=(20, 20)).astype(np.float64)
        b = np.clip(a + rng.normal(scale=0.1, size=(20, 20)), 0, 1)
        got = metrics.ssim(a, b)
        want = ssim_direct(a, b)
        assert got == pytest.approx(want, abs=1e-9)

    def test_offset_invariance(self):
        # the mean-based luminance term cancels a shared offset up to terms
        # second-order in the image difference, so keep the distortion small
        a = rand_img(8) * 0.5
        b = np.clip(a + 3e-4 * np.random.default_rng(9).normal(size=a.shape), 0, 0.5)
        base = metrics.ssim(a, b)
        shifted = metrics.ssim(a + 0.3, b + 0.3)
        assert shifted == pytest.approx(base, abs=1e-6)

    def test_window_size_floor(self):
        with pytest.raises(ValueError, match="window"):
            metrics.ssim(np.zeros((8, 8, 1)), np.zeros((8, 8, 1)))


class TestCheckerboardIndex:
    def test_constant_zero_any_period(self):
        img = np.full((16, 16, 3), 0.37, dtype=np.float32)
        for period in (1, 2, 4, 8):
            assert metrics.checkerboard_index(img, period) == 0.0

    def test_alternating_columns(self):
        img = np.zeros((8, 8, 1))
        img[:, 1::2] = 1.0
        # class means {0, 1, 0, 1} -> variance 0.25
        assert metrics.checkerboard_index(img, 2) == pytest.approx(0.25, abs=1e-12)

    def test_transposed_conv_overlap_positive_k3(self):
        x = Tensor(np.ones((1, 1, 8, 8)))
        p = ops.ConvParams(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.zeros(1)), stride=2)
        out = ops.conv_transpose2d(x, p).data[0, 0]
        interior = out[3:-3, 3:-3]
        interior = interior[: interior.shape[0] // 2 * 2, : interior.shape[1] // 2 * 2]
        assert metrics.checkerboard_index(interior, 2) > 0.0

    def test_transposed_conv_k4_interior_zero(self):
        x = Tensor(np.ones((1, 1, 8, 8)))
        p = ops.ConvParams(Tensor(np.ones((1, 1, 4, 4))), Tensor(np.zeros(1)), stride=2)
        out = ops.conv_transpose2d(x, p).data[0, 0]
        interior = out[4:-4, 4:-4]
        interior = interior[: interior.shape[0] // 2 * 2, : interior.shape[1] // 2 * 2]
        assert metrics.checkerboard_index(interior, 2) == 0.0

    def test_nearest_resize_exact_zero(self):
        for r in (2, 3, 4):
            img = rand_img(10, 12, 12)
            up = data.nearest_upsample(data.ImageBuffer(img), r)
            assert metrics.checkerboard_index(up, r) == 0.0

    def test_translation_covariance(self):
        rng = np.random.default_rng(11)
        img = rng.uniform(size=(40, 40, 1))
        period = 4
        a = metrics.checkerboard_index(img[: 32, : 32], period)
        b = metrics.checkerboard_index(img[period : 32 + period, period : 32 + period], period)
        # same phase classes, different pixel sets: indices close but not
        # required equal; shifting the SAME window must be exact
        c = metrics.checkerboard_index(np.roll(img[:32, :32], (period, period), (0, 1)), period)
        assert c == a

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            metrics.checkerboard_index(np.zeros((9, 8, 1)), 2)


class TestQualityReport:
    def test_json_roundtrip_finite(self):
        r = metrics.QualityReport(psnr=31.7, ssim=0.91, checkerboard_index=0.002)
        back = metrics.QualityReport.from_json(r.to_json())
        assert back == r

    def test_json_roundtrip_infinite(self):
        r = metrics.QualityReport(psnr=math.inf, ssim=1.0, checkerboard_index=0.0)
        back = metrics.QualityReport.from_json(r.to_json())
        assert math.isinf(back.psnr)

    def test_bundle(self):
        a = rand_img(12, 16, 16)
        rep = metrics.quality_report(a, a)
        assert math.isinf(rep.psnr)
        assert rep.ssim == pytest.approx(1.0, abs=1e-9)
