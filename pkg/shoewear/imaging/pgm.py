"""Binary PGM (P5) reader and writer."""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from shoewear.imaging.image import Image, Side, to_uint8


def _header_tokens(data: bytes, count: int):
    """Yield the first ``count`` whitespace-separated header tokens and the payload offset."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("Truncated PGM header")
        if data[pos:pos + 1] == b'#':
            end = data.find(b'\n', pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path: Union[str, Path], week: Optional[int] = None,
             side: Optional[Side] = None) -> Image:
    with open(path, 'rb') as f:
        data = f.read()
    tokens, offset = _header_tokens(data, 4)
    if tokens[0] != b'P5':
        raise ValueError(f"Unsupported PGM magic {tokens[0]!r} in {path}")
    try:
        width, height, max_value = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValueError(f"Malformed PGM header in {path}")
    if not 0 < max_value < 65536:
        raise ValueError(f"Invalid PGM maxval {max_value} in {path}")

    dtype = np.dtype('u1') if max_value < 256 else np.dtype('>u2')
    expected = width * height * dtype.itemsize
    raster = data[offset:offset + expected]
    if len(raster) != expected:
        raise ValueError(f"Truncated PGM raster in {path}: {len(raster)} of {expected} bytes")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return Image(pixels.astype(np.float64) / max_value, week=week, side=side)


def write_pgm(path: Union[str, Path], image: Image) -> None:
    raster = to_uint8(image.pixels)
    height, width = raster.shape
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(f"P5\n{width} {height}\n255\n".encode('ascii'))
        f.write(raster.tobytes())
