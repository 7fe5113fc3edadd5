import math

import numpy as np
import pytest

from thumbcodec import metrics

from oracles import ssim_loop


class TestPsnr:
    def test_identical_images_hit_the_sentinel(self, rng):
        img = rng.uniform(0, 1, (8, 8, 3))
        assert metrics.psnr(img, img) == math.inf

    def test_known_mse(self):
        # MSE 0.01 at peak 1 -> 20 dB
        a = np.zeros((10, 10))
        b = np.full((10, 10), 0.1)
        assert metrics.psnr(a, b) == pytest.approx(20.0)

    def test_constant_half_offset(self):
        # hand evaluation: MSE 0.25 -> 10*log10(4) = 6.0206 dB
        a = np.zeros((4, 4, 3))
        b = np.full((4, 4, 3), 0.5)
        assert metrics.psnr(a, b) == pytest.approx(6.02059991, abs=1e-6)

    def test_strictly_decreasing_in_mse(self, rng):
        a = rng.uniform(0, 1, (8, 8))
        values = [metrics.psnr(a, a + eps) for eps in (0.01, 0.02, 0.05, 0.1)]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_peak_parameter(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 0.5)
        assert metrics.psnr(a, b, peak=2.0) == pytest.approx(
            metrics.psnr(a, b) + 20 * math.log10(2.0))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            metrics.psnr(np.zeros((4, 4)), np.zeros((5, 4)))


class TestSsim:
    def test_identity_is_exactly_one(self, rng):
        img = rng.uniform(0, 1, (16, 16, 3))
        assert metrics.ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(5):
            a = rng.uniform(0, 1, (12, 12, 3))
            b = rng.uniform(0, 1, (12, 12, 3))
            assert metrics.ssim(a, b) == pytest.approx(metrics.ssim(b, a),
                                                       abs=1e-12)

    def test_matches_loop_oracle(self, rng):
        for _ in range(5):
            a = rng.uniform(0, 1, (16, 16, 3))
            b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
            assert metrics.ssim(a, b) == pytest.approx(ssim_loop(a, b),
                                                       abs=1e-8)

    def test_bounded(self, rng):
        for _ in range(10):
            a = rng.uniform(0, 1, (10, 10, 3))
            b = rng.uniform(0, 1, (10, 10, 3))
            assert -1.0 <= metrics.ssim(a, b) <= 1.0

    def test_channel_permutation_invariance(self, rng):
        a = rng.uniform(0, 1, (12, 12, 3))
        b = rng.uniform(0, 1, (12, 12, 3))
        perm = [2, 0, 1]
        assert metrics.ssim(a, b) == pytest.approx(
            metrics.ssim(a[:, :, perm], b[:, :, perm]), abs=1e-12)
        assert metrics.psnr(a, b) == pytest.approx(
            metrics.psnr(a[:, :, perm], b[:, :, perm]), abs=1e-12)

    def test_gaussian_variant_identity(self, rng):
        img = rng.uniform(0, 1, (16, 16, 3))
        assert metrics.ssim(img, img, gaussian=True) == pytest.approx(
            1.0, abs=1e-12)

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            metrics.ssim(np.zeros((4, 4)), np.zeros((4, 4)))


class TestEvaluateDataset:
    def test_identical_sets(self, rng):
        imgs = rng.uniform(0, 1, (4, 8, 8, 3))
        report = metrics.evaluate_dataset(imgs, imgs.copy(), "identity")
        assert report.mean_ssim == pytest.approx(1.0)
        assert report.mean_psnr == pytest.approx(metrics.PSNR_CAP)
        assert all(math.isinf(p) for p, _ in report.per_image)

    def test_single_image_means(self, rng):
        a = rng.uniform(0, 1, (1, 10, 10, 3))
        b = np.clip(a + 0.05, 0, 1)
        report = metrics.evaluate_dataset(a, b, "one")
        assert report.mean_psnr == pytest.approx(report.per_image[0][0])
        assert report.mean_ssim == pytest.approx(report.per_image[0][1])

    def test_clamps_reconstructions(self, rng):
        a = rng.uniform(0, 1, (1, 10, 10, 3))
        hot = a + 0.0
        hot[0, 0, 0, 0] = 3.0  # clamped to 1.0 before scoring
        report = metrics.evaluate_dataset(a, hot, "hot")
        manual = metrics.psnr(a[0], np.clip(hot[0], 0, 1))
        assert report.per_image[0][0] == pytest.approx(manual)

    def test_length_mismatch(self, rng):
        a = rng.uniform(0, 1, (2, 8, 8, 3))
        with pytest.raises(ValueError):
            metrics.evaluate_dataset(a, a[:1], "bad")

    def test_csv_roundtrip(self, tmp_path, rng):
        import csv

        a = rng.uniform(0, 1, (3, 8, 8, 3))
        b = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
        report = metrics.evaluate_dataset(a, b, "noisy")
        path = tmp_path / "report.csv"
        report.to_csv(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["index", "psnr_db", "ssim"]
        assert len(rows) == 5  # header + 3 images + mean
        assert float(rows[-1][1]) == pytest.approx(report.mean_psnr)

    def test_table_formatting(self, rng):
        a = rng.uniform(0, 1, (2, 8, 8, 3))
        rep = metrics.evaluate_dataset(a, a, "perfect")
        table = metrics.format_report_table([rep])
        assert "perfect" in table and "100.000" in table
