"""Impression denoising: adaptive threshold, mask clean-up, noise map and block-wise repair.

The pipeline is

1. local adaptive threshold -> ``threshold_mask``
2. hole filling -> ``foreground``
3. opening + ROI (area) filter of the raw mask -> seeds of the outsole blocks
4. every foreground component touching a seed -> ``block_mask``
5. noise candidates: raw foreground outside the blocks, plus in-block pixels
   markedly darker (or brighter) than their block's low percentile
6. dilation of the candidates, clipped to the foreground -> noise map
7. block labels from the non-noise block pixels; noise pixels take the label of the
   nearest block within reach, otherwise the background label 0
8. every noise pixel is replaced by the mean of the non-noise pixels of its own
   label inside an averaging kernel
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from shoewear.errors import ConfigError, ShapeError
from shoewear.imaging.image import Image

logger = logging.getLogger(__name__)

REFERENCE_SHAPE = (640, 256)
POLARITIES = ('dark', 'bright')
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# 0/1 raster with the dimensions of its source image
BinaryMask = np.ndarray


def as_mask(values, shape=None) -> BinaryMask:
    array = np.asarray(values)
    if array.dtype != bool:
        if not np.all((array == 0) | (array == 1)):
            raise ValueError("Binary masks may only hold 0 and 1")
        array = array.astype(bool)
    if shape is not None and array.shape != tuple(shape):
        raise ShapeError("binary mask", shape, array.shape)
    return array


def _odd(value: float, lower: int = 3) -> int:
    value = max(lower, int(round(value)))
    return value if value % 2 else value + 1


@dataclass(frozen=True)
class DenoiseParams:
    window: int = 35
    offset: float = 0.02
    min_area: int = 30
    dilation_radius: int = 1
    kernel: int = 5
    polarity: str = 'dark'
    open_radius: int = 1
    block_percentile: float = 10.0
    block_margin: float = 0.06

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ConfigError(f"Threshold window must be odd and >= 3, got {self.window}")
        if self.kernel < 3 or self.kernel % 2 == 0:
            raise ConfigError(f"Averaging kernel must be odd and >= 3, got {self.kernel}")
        if self.min_area < 1:
            raise ConfigError(f"min_area must be >= 1, got {self.min_area}")
        if self.dilation_radius < 0 or self.open_radius < 0:
            raise ConfigError("Structuring element radii must be >= 0")
        if self.polarity not in POLARITIES:
            raise ConfigError(f"Polarity must be one of {POLARITIES}, got '{self.polarity}'")
        if not 0 <= self.block_percentile <= 100:
            raise ConfigError("block_percentile must lie in [0, 100]")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'DenoiseParams':
        known = {k: v for k, v in values.items()
                 if k in cls.__dataclass_fields__ and v is not None}
        return cls(**known)

    def scaled_to(self, shape: Tuple[int, int]) -> 'DenoiseParams':
        """Rescale the area and window defaults (given at 640x256) to another resolution."""
        area_ratio = (shape[0] * shape[1]) / (REFERENCE_SHAPE[0] * REFERENCE_SHAPE[1])
        window = min(_odd(self.window * np.sqrt(area_ratio)), _odd(min(shape)) - 2)
        return replace(self, min_area=max(1, int(round(self.min_area * area_ratio))),
                       window=max(3, window))


@dataclass
class NoiseMap:
    mask: BinaryMask
    block_labels: np.ndarray
    threshold_mask: BinaryMask = field(repr=False)
    block_mask: BinaryMask = field(repr=False)
    foreground: BinaryMask = field(repr=False)

    @property
    def block_count(self) -> int:
        return int(self.block_labels.max())


@dataclass
class DenoiseResult:
    image: Image
    noise_map: NoiseMap
    unrepaired_blocks: List[int]


def _square(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def adaptive_threshold(img: Image, window: int, offset: float,
                       polarity: str = 'bright') -> BinaryMask:
    """Foreground where a pixel departs from its window mean by more than ``offset``.

    ``bright``: value - mean > offset. ``dark``: mean - value > offset.
    Borders replicate the edge pixels.
    """
    if window < 3 or window % 2 == 0:
        raise ConfigError(f"Threshold window must be odd and >= 3, got {window}")
    if window > min(img.shape):
        raise ConfigError(f"Threshold window {window} exceeds image dims {img.shape}")
    if polarity not in POLARITIES:
        raise ConfigError(f"Polarity must be one of {POLARITIES}, got '{polarity}'")
    pixels = np.asarray(img.pixels, dtype=np.float64)
    local_mean = ndimage.uniform_filter(pixels, size=window, mode='nearest')
    if polarity == 'bright':
        return pixels - local_mean > offset
    return local_mean - pixels > offset


def roi_filter(mask: BinaryMask, min_area: int) -> BinaryMask:
    """Drop 8-connected components smaller than ``min_area`` pixels."""
    if min_area < 1:
        raise ConfigError(f"min_area must be >= 1, got {min_area}")
    mask = as_mask(mask)
    if min_area == 1:
        return mask.copy()
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    if count == 0:
        return mask.copy()
    areas = np.bincount(labels.ravel())
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]


def dilate(mask: BinaryMask, se_radius: int) -> BinaryMask:
    mask = as_mask(mask)
    if se_radius == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_square(se_radius))


def erode(mask: BinaryMask, se_radius: int) -> BinaryMask:
    # the outside counts as set, so erosion never eats in from the image border
    mask = as_mask(mask)
    if se_radius == 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=_square(se_radius), border_value=1)


def opening(mask: BinaryMask, se_radius: int) -> BinaryMask:
    return dilate(erode(mask, se_radius), se_radius)


def fill_holes(mask: BinaryMask) -> BinaryMask:
    return ndimage.binary_fill_holes(as_mask(mask))


def _reconstruct(mask: BinaryMask, seeds: BinaryMask) -> BinaryMask:
    """Components of ``mask`` that contain at least one seed pixel."""
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    if count == 0:
        return np.zeros_like(mask)
    hit = np.zeros(count + 1, dtype=bool)
    hit[np.unique(labels[seeds & mask])] = True
    hit[0] = False
    return hit[labels]


def _off_tone(pixels: np.ndarray, block_mask: BinaryMask, params: DenoiseParams) -> BinaryMask:
    """In-block pixels further than ``block_margin`` past the block's typical extreme tone."""
    labels, count = ndimage.label(block_mask, structure=EIGHT_CONNECTED)
    if count == 0:
        return np.zeros_like(block_mask)
    q = params.block_percentile if params.polarity == 'dark' else 100.0 - params.block_percentile
    reference = ndimage.labeled_comprehension(pixels, labels, np.arange(1, count + 1),
                                              lambda v: np.percentile(v, q), np.float64, 0.0)
    reference = np.concatenate([[0.0], reference])[labels]
    if params.polarity == 'dark':
        return block_mask & (pixels < reference - params.block_margin)
    return block_mask & (pixels > reference + params.block_margin)


def _label_blocks(block_mask: BinaryMask, noise: BinaryMask, reach: float) -> np.ndarray:
    labels, count = ndimage.label(block_mask & ~noise, structure=EIGHT_CONNECTED)
    if count == 0 or not noise.any():
        return labels
    distance, (iy, ix) = ndimage.distance_transform_edt(labels == 0, return_indices=True)
    claim = noise & block_mask & (distance <= reach)
    labels[claim] = labels[iy[claim], ix[claim]]
    return labels


def build_noise_map(img: Image, params: DenoiseParams) -> NoiseMap:
    pixels = np.asarray(img.pixels, dtype=np.float64)
    threshold_mask = adaptive_threshold(img, params.window, params.offset, params.polarity)
    foreground = fill_holes(threshold_mask)
    seeds = roi_filter(opening(threshold_mask, params.open_radius), params.min_area)
    block_mask = _reconstruct(foreground, seeds)

    candidates = (threshold_mask & ~block_mask) | _off_tone(pixels, block_mask, params)
    mask = dilate(candidates, params.dilation_radius) & foreground
    labels = _label_blocks(block_mask, mask, reach=params.kernel // 2 + params.dilation_radius)
    logger.debug("Noise map: %d blocks, %d noise pixels (%.2f%% of foreground)", labels.max(),
                 mask.sum(), 100.0 * mask.sum() / max(foreground.sum(), 1))
    return NoiseMap(mask, labels, threshold_mask, block_mask, foreground)


def _pad_slice(region: Tuple[slice, slice], pad: int, shape: Tuple[int, int]):
    return tuple(slice(max(s.start - pad, 0), min(s.stop + pad, n)) for s, n in zip(region, shape))


def _repair(pixels: np.ndarray, noise: BinaryMask, labels: np.ndarray,
            kernel: int) -> Tuple[np.ndarray, List[int]]:
    out = pixels.copy()
    unrepaired = []
    regions = [(0, (slice(0, pixels.shape[0]), slice(0, pixels.shape[1])))]
    regions += [(i + 1, s) for i, s in enumerate(ndimage.find_objects(labels)) if s is not None]
    for label, region in regions:
        region = _pad_slice(region, kernel // 2, pixels.shape)
        inside = labels[region] == label
        holes = inside & noise[region]
        if not holes.any():
            continue
        donors = inside & ~noise[region]
        if not donors.any():
            unrepaired.append(label)
            continue
        values = pixels[region]
        weight = ndimage.uniform_filter(donors.astype(np.float64), kernel, mode='constant')
        total = ndimage.uniform_filter(np.where(donors, values, 0.0), kernel, mode='constant')
        has_donor = np.rint(weight * kernel * kernel) > 0
        patch = out[region]
        averaged = holes & has_donor
        patch[averaged] = total[averaged] / weight[averaged]
        stranded = holes & ~has_donor
        if stranded.any():
            _, (iy, ix) = ndimage.distance_transform_edt(~donors, return_indices=True)
            patch[stranded] = values[iy[stranded], ix[stranded]]
    return out, unrepaired


def denoise(img: Image, noise_map: NoiseMap, kernel: int) -> Image:
    """Replace noise pixels by the block-restricted local mean; other pixels pass through."""
    return _denoise(img, noise_map, kernel)[0]


def _denoise(img: Image, noise_map: NoiseMap, kernel: int) -> Tuple[Image, List[int]]:
    if kernel < 3 or kernel % 2 == 0:
        raise ConfigError(f"Averaging kernel must be odd and >= 3, got {kernel}")
    mask = as_mask(noise_map.mask, img.shape)
    if noise_map.block_labels.shape != img.shape:
        raise ShapeError("block labels", img.shape, noise_map.block_labels.shape)
    pixels = np.asarray(img.pixels, dtype=np.float64)
    repaired, unrepaired = _repair(pixels, mask, noise_map.block_labels, kernel)
    if unrepaired:
        logger.warning("Left %d fully noisy block(s) unrepaired: %s", len(unrepaired), unrepaired)
    return img.with_pixels(repaired), unrepaired


def denoise_impression(img: Image, params: Optional[DenoiseParams] = None) -> DenoiseResult:
    params = params or DenoiseParams().scaled_to(img.shape)
    noise_map = build_noise_map(img, params)
    image, unrepaired = _denoise(img, noise_map, params.kernel)
    return DenoiseResult(image, noise_map, unrepaired)


def noise_recall(noise_map: NoiseMap, truth: BinaryMask) -> float:
    """Share of ground-truth noise pixels the map flags; 1.0 when there is none."""
    truth = as_mask(truth, noise_map.mask.shape)
    total = int(truth.sum())
    if total == 0:
        return 1.0
    return float((noise_map.mask & truth).sum()) / total


def noise_coverage(noise_map: NoiseMap) -> float:
    """Flagged pixels as a share of the foreground."""
    foreground = int(noise_map.foreground.sum())
    if foreground == 0:
        return 0.0
    return float(noise_map.mask.sum()) / foreground
