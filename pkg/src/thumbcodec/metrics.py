"""Pixel-wise reconstruction quality: PSNR and windowed SSIM.

Both metrics are computed on [0, 1] intensities with peak 1 by default;
reconstructions are clamped to [0, 1] before scoring so reported numbers are
reproducible from the stored reals, pre-quantization.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PSNR_CAP = 100.0  # aggregate stand-in for the +inf identical-image sentinel

SSIM_WINDOW = 8
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_GAUSSIAN_WINDOW = 11
_GAUSSIAN_SIGMA = 1.5


def psnr(a, b, peak=1.0):
    """10*log10(peak^2 / MSE) in dB over all values; +inf when identical."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_weights():
    half = (_GAUSSIAN_WINDOW - 1) / 2.0
    ax = np.arange(_GAUSSIAN_WINDOW) - half
    g = np.exp(-(ax ** 2) / (2.0 * _GAUSSIAN_SIGMA ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, peak=1.0, gaussian=False):
    """Mean local SSIM over all stride-1 windows and channels, in [-1, 1].

    Uniform 8x8 windows by default; gaussian=True switches to the 11x11
    sigma-1.5 weighted variant. Local statistics use the mean-normalized
    (biased) variance/covariance. Symmetric in (a, b); exactly 1 iff a == b.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    win = _GAUSSIAN_WINDOW if gaussian else SSIM_WINDOW
    if a.shape[0] < win or a.shape[1] < win:
        raise ValueError(
            f"image {a.shape[0]}x{a.shape[1]} smaller than the {win}x{win} "
            "SSIM window")
    c1 = (_SSIM_K1 * peak) ** 2
    c2 = (_SSIM_K2 * peak) ** 2
    if gaussian:
        weights = _gaussian_weights()

        def local_mean(x):
            w = sliding_window_view(x, (win, win), axis=(0, 1))
            return np.tensordot(w, weights, axes=([-2, -1], [0, 1]))
    else:
        def local_mean(x):
            w = sliding_window_view(x, (win, win), axis=(0, 1))
            return w.mean(axis=(-2, -1))

    total = 0.0
    count = 0
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mu_x = local_mean(x)
        mu_y = local_mean(y)
        var_x = local_mean(x * x) - mu_x ** 2
        var_y = local_mean(y * y) - mu_y ** 2
        cov = local_mean(x * y) - mu_x * mu_y
        score = (((2 * mu_x * mu_y + c1) * (2 * cov + c2))
                 / ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)))
        total += float(score.sum())
        count += score.size
    return total / count


@dataclass
class QualityReport:
    """Per-image (psnr, ssim) pairs plus arithmetic means; PSNR means cap the
    +inf sentinel at 100 dB so aggregates stay finite."""

    per_image: list
    mean_psnr: float
    mean_ssim: float
    method_tag: str

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "psnr_db", "ssim"])
            for i, (p, s) in enumerate(self.per_image):
                writer.writerow([i, repr(p), repr(s)])
            writer.writerow(["mean", repr(self.mean_psnr),
                             repr(self.mean_ssim)])


def evaluate_dataset(originals, reconstructions, tag):
    """Score aligned original/reconstruction stacks; returns a QualityReport.

    Accepts Datasets or (n, h, w, c) arrays. Reconstructions are clamped to
    [0, 1] before scoring.
    """
    orig = getattr(originals, "images", originals)
    recs = getattr(reconstructions, "images", reconstructions)
    if len(orig) != len(recs):
        raise ValueError(f"length mismatch: {len(orig)} originals vs "
                         f"{len(recs)} reconstructions")
    per_image = []
    for o, r in zip(orig, recs):
        if o.shape != r.shape:
            raise ValueError(f"shape mismatch: {o.shape} vs {r.shape}")
        r = np.clip(r, 0.0, 1.0)
        per_image.append((psnr(o, r), ssim(o, r)))
    mean_psnr = float(np.mean([min(p, PSNR_CAP) for p, _ in per_image]))
    mean_ssim = float(np.mean([s for _, s in per_image]))
    return QualityReport(per_image, mean_psnr, mean_ssim, tag)


def format_report_table(reports):
    """Fixed-width comparison table, one row per method."""
    lines = [f"{'method':<32}  {'PSNR (dB)':>10}  {'SSIM':>7}  {'images':>6}",
             "-" * 61]
    for r in reports:
        lines.append(f"{r.method_tag:<32}  {r.mean_psnr:>10.3f}  "
                     f"{r.mean_ssim:>7.3f}  {len(r.per_image):>6d}")
    return "\n".join(lines)
