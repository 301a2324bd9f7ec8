import numpy as np
import pytest

from shoewear.errors import ConfigError
from shoewear.synth.noise import NoiseSpec, add_noise
from shoewear.synth.outsole import OutsoleSpec, advance_wear, generate_outsole, render_impression


@pytest.fixture(scope='module')
def clean_print():
    """Default right impression at week 12."""
    return render_impression(advance_wear(generate_outsole(OutsoleSpec(seed=1)), 12))


def test_zero_intensity_is_identity(clean_print):
    """Test that a zero-intensity noise spec changes nothing."""
    noisy, truth = add_noise(clean_print, NoiseSpec(intensity=0.0), seed=3)
    np.testing.assert_array_equal(noisy.pixels, clean_print.pixels)
    assert not truth.any()


def test_truth_covers_exactly_the_changed_pixels(clean_print):
    """Test that the truth mask is the set of modified pixels."""
    noisy, truth = add_noise(clean_print, NoiseSpec(), seed=3)
    assert truth.any()
    np.testing.assert_array_equal(noisy.pixels[~truth], clean_print.pixels[~truth])
    assert np.all(noisy.pixels[truth] != clean_print.pixels[truth])
    assert noisy.week == clean_print.week and noisy.side is clean_print.side


def test_noise_tones_are_quantized(clean_print):
    """Test that debris lands on the 256-level grid and is darker than any ink."""
    noisy, truth = add_noise(clean_print, NoiseSpec(), seed=4)
    levels = noisy.pixels[truth] * 255.0
    np.testing.assert_allclose(levels, np.rint(levels), atol=1e-9)
    assert noisy.pixels[truth].max() <= 26 / 255.0 + 1e-9


def test_same_seed_same_noise(clean_print):
    """Test that noise is reproducible per seed."""
    first, _ = add_noise(clean_print, NoiseSpec(), seed=9)
    second, _ = add_noise(clean_print, NoiseSpec(), seed=9)
    np.testing.assert_array_equal(first.pixels, second.pixels)


def test_default_noise_fraction(clean_print):
    """Test that the default noise spec corrupts 2-8% of the foreground over 20 seeds."""
    foreground = clean_print.pixels < 1.0
    fractions = [add_noise(clean_print, NoiseSpec(), seed)[1].sum() / foreground.sum()
                 for seed in range(20)]
    assert 0.02 <= np.mean(fractions) <= 0.08


@pytest.mark.parametrize('values', [{'intensity': -1}, {'blobs_per_100k': -2},
                                    {'dark_range': (0.5, 0.2)}])
def test_invalid_noise_spec(values):
    """Test that malformed noise specs are config errors."""
    with pytest.raises(ConfigError):
        NoiseSpec.from_dict(values)
