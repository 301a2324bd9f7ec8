"""Synthetic lift debris: fibres, blobs and bubble rings with a ground-truth mask."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from shoewear.errors import ConfigError
from shoewear.imaging.image import Image

logger = logging.getLogger(__name__)

REFERENCE_AREA = 640 * 256


@dataclass(frozen=True)
class NoiseSpec:
    """Counts are per 100k pixels and sizes are given at 640x256; both scale with the image."""

    fibres_per_100k: float = 20.0
    blobs_per_100k: float = 30.0
    bubbles_per_100k: float = 4.0
    intensity: float = 1.0
    dark_range: Tuple[float, float] = (0.03, 0.10)
    fibre_length: Tuple[float, float] = (20.0, 80.0)
    max_blob_radius: float = 3.0
    bubble_radius: Tuple[float, float] = (5.0, 9.0)

    def __post_init__(self):
        object.__setattr__(self, 'dark_range', tuple(self.dark_range))
        object.__setattr__(self, 'fibre_length', tuple(self.fibre_length))
        object.__setattr__(self, 'bubble_radius', tuple(self.bubble_radius))
        if self.intensity < 0:
            raise ConfigError(f"Noise intensity must be >= 0, got {self.intensity}")
        if min(self.fibres_per_100k, self.blobs_per_100k, self.bubbles_per_100k) < 0:
            raise ConfigError("Noise counts must be >= 0")
        low, high = self.dark_range
        if not 0 <= low <= high <= 1:
            raise ConfigError(f"dark_range must satisfy 0 <= low <= high <= 1, got {self.dark_range}")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'NoiseSpec':
        known = {k: v for k, v in values.items()
                 if k in cls.__dataclass_fields__ and v is not None}
        return cls(**known)


def _count(per_100k: float, area: int, intensity: float) -> int:
    return int(round(per_100k * area / 1e5 * intensity))


def _fibre(shape, scale: float, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    stroke = np.zeros(shape, dtype=bool)
    y, x = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
    heading = rng.uniform(0, 2 * np.pi)
    length = rng.uniform(*spec.fibre_length) * scale
    segments = int(rng.integers(2, 5))
    thick = bool(rng.integers(2))
    for _ in range(segments):
        heading += rng.normal(0.0, 0.5)
        steps = max(2, int(np.ceil(2 * length / segments)))
        t = np.linspace(0.0, length / segments, steps)
        ys, xs = y + t * np.sin(heading), x + t * np.cos(heading)
        rows, cols = np.rint(ys).astype(int), np.rint(xs).astype(int)
        if thick:
            if abs(np.cos(heading)) > abs(np.sin(heading)):
                rows, cols = np.concatenate([rows, rows + 1]), np.concatenate([cols, cols])
            else:
                rows, cols = np.concatenate([rows, rows]), np.concatenate([cols, cols + 1])
        keep = (rows >= 0) & (rows < shape[0]) & (cols >= 0) & (cols < shape[1])
        stroke[rows[keep], cols[keep]] = True
        y, x = ys[-1], xs[-1]
    return stroke


def _blob(shape, scale: float, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    radius = int(rng.integers(1, max(1, int(round(spec.max_blob_radius * scale))) + 1))
    cy, cx = rng.integers(shape[0]), rng.integers(shape[1])
    rows, cols = np.ogrid[:shape[0], :shape[1]]
    return (rows - cy) ** 2 + (cols - cx) ** 2 <= radius * radius


def _bubble(shape, scale: float, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    radius = max(2.0, rng.uniform(*spec.bubble_radius) * scale)
    cy, cx = rng.uniform(0, shape[0]), rng.uniform(0, shape[1])
    rows, cols = np.ogrid[:shape[0], :shape[1]]
    distance = np.sqrt((rows - cy) ** 2 + (cols - cx) ** 2)
    return np.abs(distance - radius) <= 0.5


def add_noise(img: Image, noise_spec: NoiseSpec, seed: int) -> Tuple[Image, np.ndarray]:
    """Returns the corrupted image and the mask of every pixel the noise changed."""
    rng = np.random.default_rng(seed)
    shape = img.shape
    area = shape[0] * shape[1]
    scale = float(np.sqrt(area / REFERENCE_AREA))
    pixels = np.array(img.pixels, dtype=np.float64)

    makers = ([_fibre] * _count(noise_spec.fibres_per_100k, area, noise_spec.intensity)
              + [_blob] * _count(noise_spec.blobs_per_100k, area, noise_spec.intensity)
              + [_bubble] * _count(noise_spec.bubbles_per_100k, area, noise_spec.intensity))
    for make in makers:
        region = make(shape, scale, noise_spec, rng)
        # debris tones sit on the 256-level grid like the rest of the impression
        pixels[region] = np.rint(rng.uniform(*noise_spec.dark_range) * 255.0) / 255.0

    noisy = img.with_pixels(pixels)
    truth = noisy.pixels != img.pixels
    logger.debug("Injected %d noise items covering %d pixels", len(makers), truth.sum())
    return noisy, truth
