"""Structural similarity and peak signal-to-noise ratio."""

from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from shoewear.errors import ShapeError
from shoewear.imaging.image import Image, to_uint8

K1 = 0.01
K2 = 0.03
DATA_RANGE = 1.0
C1 = (K1 * DATA_RANGE) ** 2
C2 = (K2 * DATA_RANGE) ** 2
C3 = C2 / 2
DEFAULT_WINDOW = 8
PEAK = 255.0


def _pair(f: Image, g: Image) -> Tuple[np.ndarray, np.ndarray]:
    if f.shape != g.shape:
        raise ShapeError("metric operand", f.shape, g.shape)
    return np.asarray(f.pixels, dtype=np.float64), np.asarray(g.pixels, dtype=np.float64)


def _global_moments(a: np.ndarray, b: np.ndarray):
    mu_a, mu_b = a.mean(), b.mean()
    da, db = a - mu_a, b - mu_b
    return mu_a, mu_b, (da * da).mean(), (db * db).mean(), (da * db).mean()


def ssim_components(f: Image, g: Image) -> Tuple[float, float, float]:
    """Global luminance, contrast and structure terms."""
    a, b = _pair(f, g)
    mu_a, mu_b, var_a, var_b, cov = _global_moments(a, b)
    sd_a, sd_b = np.sqrt(var_a), np.sqrt(var_b)
    luminance = (2 * mu_a * mu_b + C1) / (mu_a * mu_a + mu_b * mu_b + C1)
    contrast = (2 * sd_a * sd_b + C2) / (var_a + var_b + C2)
    structure = (cov + C3) / (sd_a * sd_b + C3)
    return float(luminance), float(contrast), float(structure)


def _ssim_map(mu_a, mu_b, var_a, var_b, cov):
    # with C3 = C2 / 2 the contrast and structure terms collapse into one factor
    luminance = (2 * mu_a * mu_b + C1) / (mu_a * mu_a + mu_b * mu_b + C1)
    return luminance * (2 * cov + C2) / (var_a + var_b + C2)


def ssim(f: Image, g: Image, window: Optional[int] = DEFAULT_WINDOW) -> float:
    """Mean SSIM over every ``window`` x ``window`` patch (stride 1), or the global
    statistic when ``window`` is None. Clamped to [0, 1]."""
    a, b = _pair(f, g)
    if window is None:
        value = _ssim_map(*_global_moments(a, b))
    else:
        if window < 1 or window > min(a.shape):
            raise ShapeError("ssim window", (min(a.shape), min(a.shape)), (window, window))

        def local_mean(x):
            return sliding_window_view(x, (window, window)).mean(axis=(-2, -1))

        mu_a, mu_b = local_mean(a), local_mean(b)
        var_a = local_mean(a * a) - mu_a * mu_a
        var_b = local_mean(b * b) - mu_b * mu_b
        cov = local_mean(a * b) - mu_a * mu_b
        value = _ssim_map(mu_a, mu_b, var_a, var_b, cov).mean()
    return float(min(max(value, 0.0), 1.0))


def psnr(f: Image, g: Image) -> float:
    """PSNR in dB on the 8-bit grid; ``inf`` when the images are identical there."""
    _pair(f, g)
    diff = to_uint8(f.pixels).astype(np.float64) - to_uint8(g.pixels).astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0:
        return float('inf')
    return float(10.0 * np.log10(PEAK * PEAK / mse))
