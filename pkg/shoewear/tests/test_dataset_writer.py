import numpy as np
import pytest

from shoewear.imaging.image import Side
from shoewear.imaging.pgm import read_pgm
from shoewear.synth.dataset_writer import (DEFAULT_WEEKS, MANIFEST_NAME, NOISY_MANIFEST_NAME,
                                           emit_dataset, impression_series, noise_seed)
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.dataset import load_manifest


@pytest.fixture(scope='module')
def small_spec():
    """160x64 outsole that renders quickly."""
    return OutsoleSpec(seed=5, height=160, width=64, block_count=12, hole_count=2,
                       merge_pairs=1)


@pytest.fixture(scope='module')
def emitted(tmp_path_factory, small_spec):
    """Dataset directory written once for the module, with its clean records."""
    root = tmp_path_factory.mktemp('series')
    return root, emit_dataset(small_spec, root)


def test_default_run_writes_52_clean_files(emitted):
    """Test 26 weeks times two sides, week 6 absent."""
    root, records = emitted
    clean = sorted((root / 'clean').glob('*.pgm'))
    assert len(clean) == len(records) == 52
    assert len(list((root / 'noisy').glob('*.pgm'))) == 52
    assert not list((root / 'clean').glob('week_06_*'))
    assert (root / 'clean' / 'week_52_left.pgm').exists()


def test_manifest_parses_back(emitted):
    """Test that both manifests read back into the emitted records."""
    root, records = emitted
    loaded = load_manifest(root / MANIFEST_NAME)
    assert [(r.week, r.side, r.file, r.denoised) for r in loaded] == \
        [(r.week, r.side, r.file, r.denoised) for r in records]
    noisy = load_manifest(root / NOISY_MANIFEST_NAME)
    assert all(not r.denoised and r.file.startswith('noisy/') for r in noisy)


def test_files_match_renders(emitted, small_spec):
    """Test that the clean files hold the rendered series."""
    root, _ = emitted
    side, week, image = next(iter(impression_series(small_spec, weeks=(0,))))
    assert side is Side.LEFT
    loaded = read_pgm(root / 'clean' / 'week_00_left.pgm')
    np.testing.assert_array_equal(loaded.pixels, image.pixels)


def test_noisy_files_differ_from_clean(emitted):
    """Test that the noisy copy of an impression carries debris."""
    root, _ = emitted
    clean = read_pgm(root / 'clean' / 'week_20_right.pgm')
    noisy = read_pgm(root / 'noisy' / 'week_20_right.pgm')
    assert (clean.pixels != noisy.pixels).any()


def test_two_runs_are_byte_identical(tmp_path, emitted, small_spec):
    """Test that the same seed reproduces every file byte for byte."""
    root, _ = emitted
    emit_dataset(small_spec, tmp_path)
    for path in sorted(root.rglob('*')):
        if path.is_file():
            assert (tmp_path / path.relative_to(root)).read_bytes() == path.read_bytes()


def test_series_order_and_factor(small_spec):
    """Test left-first ordering and downsampled renders."""
    series = list(impression_series(small_spec, weeks=(4, 0), factor=2))
    assert [(side, week) for side, week, _ in series] == \
        [(Side.LEFT, 0), (Side.LEFT, 4), (Side.RIGHT, 0), (Side.RIGHT, 4)]
    assert series[0][2].shape == (80, 32)


def test_noise_seeds_are_distinct(small_spec):
    """Test one noise seed per (week, side)."""
    seeds = {noise_seed(small_spec, week, side) for week in DEFAULT_WEEKS for side in Side}
    assert len(seeds) == 52


@pytest.mark.slow
def test_full_resolution_dataset(tmp_path):
    """Test the default 640x256 dataset end to end."""
    records = emit_dataset(OutsoleSpec(), tmp_path)
    assert len(records) == 52
    image = read_pgm(tmp_path / 'clean' / 'week_00_right.pgm')
    assert image.shape == (640, 256)
