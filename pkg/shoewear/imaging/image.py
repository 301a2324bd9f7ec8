from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np


class Side(str, Enum):
    LEFT = 'left'
    RIGHT = 'right'

    @classmethod
    def parse(cls, value) -> 'Side':
        if isinstance(value, Side):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"Invalid side '{value}', expected 'left' or 'right'")


@dataclass(frozen=True)
class Image:
    """Single-channel grayscale raster with values in [0, 1]."""

    pixels: np.ndarray
    week: Optional[int] = None
    side: Optional[Side] = None

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise ValueError(f"Image pixels must be 2-D, got shape {self.pixels.shape}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    def with_pixels(self, pixels: np.ndarray) -> 'Image':
        return replace(self, pixels=pixels)

    def quantized(self) -> 'Image':
        """Snap to the 256-level grayscale grid."""
        return self.with_pixels(to_uint8(self.pixels).astype(np.float64) / 255.0)


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def downsample(image: Image, factor: int) -> Image:
    """Block-mean resampling by an integer factor."""
    if factor < 1:
        raise ValueError("Downsample factor must be >= 1")
    if factor == 1:
        return image
    h, w = image.shape
    if h % factor or w % factor:
        raise ValueError(f"Image shape {image.shape} is not divisible by factor {factor}")
    blocks = image.pixels.reshape(h // factor, factor, w // factor, factor)
    return image.with_pixels(blocks.mean(axis=(1, 3)))
