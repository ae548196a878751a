"""Full-reference image quality metrics: MSE, PSNR and SSIM."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import signal

from .errors import ShapeError
from .image import as_image

__all__ = ["MetricReport", "mse", "psnr", "gaussian_window", "ssim_map", "ssim", "report"]

PSNR_MSE_FLOOR = 1e-15


def _pair(a, b):
    a = as_image(a, name="a")
    b = as_image(b, name="b")
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b):
    """Mean squared error over all elements."""
    a, b = _pair(a, b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b, peak=255.0):
    """Peak signal-to-noise ratio in dB, ``inf`` when the MSE is below 1e-15."""
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = mse(a, b)
    if err < PSNR_MSE_FLOOR:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def gaussian_window(size=11, sigma=1.5):
    """Normalized 2-D Gaussian window."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def ssim_map(a, b, data_range=255.0, k1=0.01, k2=0.03, win_size=11, sigma=1.5):
    """Local SSIM over every fully contained window (``valid`` placement)."""
    a, b = _pair(a, b)
    if a.ndim == 3:
        if a.shape[2] != 1:
            raise ShapeError("ssim expects single-channel images")
        a, b = a[:, :, 0], b[:, :, 0]
    if min(a.shape) < win_size:
        raise ShapeError(f"image {a.shape} is smaller than the {win_size}x{win_size} window")
    w = gaussian_window(win_size, sigma)

    def filt(x):
        return signal.correlate2d(x, w, mode="valid")

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range=255.0):
    """Mean SSIM with an 11x11, sigma 1.5 Gaussian window and K1=0.01, K2=0.03."""
    return float(np.mean(ssim_map(a, b, data_range)))


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    mse: float
    ssim: float

    def to_json(self):
        """JSON object with 17 significant digits; infinite PSNR becomes ``"inf"``."""
        p = '"inf"' if math.isinf(self.psnr) else "%.17g" % self.psnr
        return '{"psnr": %s, "mse": %.17g, "ssim": %.17g}' % (p, self.mse, self.ssim)


def report(ref, test, peak=255.0):
    """All three metrics; `peak` affects PSNR only, SSIM keeps its 255 range."""
    return MetricReport(psnr(ref, test, peak), mse(ref, test), ssim(ref, test))
