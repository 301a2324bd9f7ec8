"""Noise-map construction and block-wise repair of impressions."""

from .noise_map import (BinaryMask, DenoiseParams, DenoiseResult, NoiseMap, adaptive_threshold,
                        as_mask, build_noise_map, denoise, denoise_impression, dilate, erode,
                        fill_holes, noise_coverage, noise_recall, opening, roi_filter)

__all__ = [
    'BinaryMask', 'DenoiseParams', 'DenoiseResult', 'NoiseMap', 'adaptive_threshold', 'as_mask',
    'build_noise_map', 'denoise', 'denoise_impression', 'dilate', 'erode', 'fill_holes',
    'noise_coverage', 'noise_recall', 'opening', 'roi_filter',
]
