import numpy as np
import pytest

from shoewear.imaging import Image, Side, align_translation, downsample, read_pgm, write_pgm


@pytest.fixture
def quantized_image():
    """Random 12x8 image already on the 256-level grid."""
    levels = np.random.default_rng(0).integers(0, 256, size=(12, 8))
    return Image(levels / 255.0, week=4, side=Side.LEFT)


def test_pgm_round_trip(tmp_path, quantized_image):
    """Test that a quantized image survives a P5 write and read exactly."""
    path = tmp_path / 'nested' / 'week_04_left.pgm'
    write_pgm(path, quantized_image)
    assert path.read_bytes().startswith(b'P5\n8 12\n255\n')
    loaded = read_pgm(path, week=4, side=Side.LEFT)
    np.testing.assert_array_equal(loaded.pixels, quantized_image.pixels)
    assert loaded.week == 4 and loaded.side is Side.LEFT


def test_pgm_header_comments(tmp_path):
    """Test that comment lines in the header are skipped."""
    path = tmp_path / 'c.pgm'
    path.write_bytes(b'P5\n# made by hand\n2 1\n255\n\x00\xff')
    np.testing.assert_array_equal(read_pgm(path).pixels, [[0.0, 1.0]])


@pytest.mark.parametrize('data', [b'P2\n2 1\n255\n\x00\xff', b'P5\n2 x\n255\n\x00\xff',
                                  b'P5\n2 2\n255\n\x00\xff', b'P5\n2', b'P5\n2 1\n0\n\x00\x00'])
def test_malformed_pgm(tmp_path, data):
    """Test that wrong magic, bad numbers and truncated rasters are rejected."""
    path = tmp_path / 'bad.pgm'
    path.write_bytes(data)
    with pytest.raises(ValueError):
        read_pgm(path)


def test_quantized_snaps_to_grid():
    """Test that quantization rounds to the nearest of 256 levels."""
    image = Image(np.array([[0.0, 0.5, 1.2]]))
    np.testing.assert_array_equal(image.quantized().pixels, [[0.0, 128 / 255.0, 1.0]])


def test_downsample_block_mean():
    """Test 2x block-mean resampling."""
    image = Image(np.arange(16, dtype=float).reshape(4, 4))
    np.testing.assert_array_equal(downsample(image, 2).pixels, [[2.5, 4.5], [10.5, 12.5]])
    assert downsample(image, 1) is image
    with pytest.raises(ValueError):
        downsample(image, 3)


def test_side_parse():
    """Test side names in any case and the error for unknown ones."""
    assert Side.parse(' Left ') is Side.LEFT
    with pytest.raises(ValueError):
        Side.parse('middle')


def test_registration_recovers_shift():
    """Test that a rolled copy is aligned back onto its reference."""
    reference = Image(np.random.default_rng(2).uniform(size=(48, 40)))
    moving = reference.with_pixels(np.roll(reference.pixels, (3, -2), axis=(0, 1)))
    dy, dx, aligned = align_translation(reference, moving, max_shift=8)
    assert (dy, dx) == (-3, 2)
    np.testing.assert_array_equal(aligned.pixels[:-3, 2:], reference.pixels[:-3, 2:])


def test_registration_shape_mismatch():
    """Test that only equally sized images can be aligned."""
    with pytest.raises(ValueError):
        align_translation(Image(np.zeros((4, 4))), Image(np.zeros((4, 6))))
