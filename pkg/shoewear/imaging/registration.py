"""Translation-only alignment of impressions.

Plumbing for the data preparation stage: the shift maximising the circular
cross-correlation is found with an FFT and the moving image is shifted by it,
filling exposed borders with the moving image's background (its median).
"""

import logging
from typing import Tuple

import numpy as np

from shoewear.imaging.image import Image

logger = logging.getLogger(__name__)


def align_translation(reference: Image, moving: Image,
                      max_shift: int = 16) -> Tuple[int, int, Image]:
    if reference.shape != moving.shape:
        raise ValueError(f"Cannot align images of shapes {reference.shape} and {moving.shape}")

    ref = reference.pixels - reference.pixels.mean()
    mov = moving.pixels - moving.pixels.mean()
    corr = np.real(np.fft.ifft2(np.fft.fft2(ref) * np.conj(np.fft.fft2(mov))))

    h, w = corr.shape
    dys = np.fft.fftfreq(h, 1.0 / h).astype(int)
    dxs = np.fft.fftfreq(w, 1.0 / w).astype(int)
    allowed = (np.abs(dys)[:, None] <= max_shift) & (np.abs(dxs)[None, :] <= max_shift)
    corr = np.where(allowed, corr, -np.inf)
    iy, ix = np.unravel_index(np.argmax(corr), corr.shape)
    dy, dx = int(dys[iy]), int(dxs[ix])

    fill = float(np.median(moving.pixels))
    shifted = np.full_like(moving.pixels, fill)
    src_y = slice(max(0, -dy), h - max(0, dy))
    dst_y = slice(max(0, dy), h - max(0, -dy))
    src_x = slice(max(0, -dx), w - max(0, dx))
    dst_x = slice(max(0, dx), w - max(0, -dx))
    shifted[dst_y, dst_x] = moving.pixels[src_y, src_x]
    logger.debug("Aligned impression by (%d, %d)", dy, dx)
    return dy, dx, moving.with_pixels(shifted)
