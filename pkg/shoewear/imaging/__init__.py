"""Image container, PGM I/O and alignment."""

from .image import Image, Side, downsample, to_uint8
from .pgm import read_pgm, write_pgm
from .registration import align_translation

__all__ = ['Image', 'Side', 'downsample', 'to_uint8', 'read_pgm', 'write_pgm',
           'align_translation']
