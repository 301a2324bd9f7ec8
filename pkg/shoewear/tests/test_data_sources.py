from unittest.mock import Mock

import numpy as np
import pytest

from shoewear.data_sources import ManifestSource, SyntheticSource
from shoewear.denoise.noise_map import DenoiseParams
from shoewear.imaging.image import Image, Side
from shoewear.imaging.pgm import write_pgm
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.dataset import ImpressionRecord, write_manifest


@pytest.fixture
def mock_cache_manager():
    """Create a mock cache manager that always misses."""
    cache_manager = Mock()
    cache_manager.get.return_value = None
    return cache_manager


@pytest.fixture
def manifest(tmp_path):
    """Two-week manifest: week 0 clean, week 2 raw (needs denoising)."""
    rng = np.random.default_rng(0)
    records = []
    for week, denoised in ((0, True), (2, False)):
        name = f'week_{week:02d}_right.pgm'
        write_pgm(tmp_path / 'img' / name, Image(rng.integers(0, 256, (64, 32)) / 255.0))
        records.append(ImpressionRecord(week, Side.RIGHT, denoised=denoised, file=f'img/{name}'))
    path = tmp_path / 'manifest.jsonl'
    write_manifest(records, path)
    return path


def test_manifest_source_loads_sorted_images(manifest, mock_cache_manager):
    """Test that records come back with pixels, weeks and sides attached."""
    source = ManifestSource(manifest, cache_manager=mock_cache_manager)
    records = source.load_records()
    assert [r.week for r in records] == [0, 2]
    assert all(r.image.shape == (64, 32) and r.image.side is Side.RIGHT for r in records)
    assert records[1].image.week == 2


def test_raw_rows_are_denoised_and_cached(manifest, mock_cache_manager, mocker):
    """Test that only raw rows go through the denoiser and the result is cached."""
    denoise = mocker.patch('shoewear.data_sources.manifest_source.denoise_impression')
    denoise.return_value.image = Image(np.full((64, 32), 0.5))
    denoise.return_value.noise_map.mask = np.zeros((64, 32), dtype=bool)
    records = ManifestSource(manifest, cache_manager=mock_cache_manager).load_records()
    assert denoise.call_count == 1
    np.testing.assert_array_equal(records[1].image.pixels, 0.5)
    mock_cache_manager.set.assert_called_once()
    _, params = denoise.call_args[0]
    assert params == DenoiseParams().scaled_to((64, 32))


def test_cache_hit_skips_denoising(manifest, mock_cache_manager, mocker):
    """Test that a cached raster is used instead of denoising again."""
    mock_cache_manager.get.return_value = np.full((64, 32), 0.25)
    denoise = mocker.patch('shoewear.data_sources.manifest_source.denoise_impression')
    records = ManifestSource(manifest, cache_manager=mock_cache_manager).load_records()
    denoise.assert_not_called()
    np.testing.assert_array_equal(records[1].image.pixels, 0.25)
    assert records[1].image.week == 2


def test_raw_rows_kept_when_not_denoising(manifest, mocker):
    """Test that denoise_raw=False leaves raw impressions as read."""
    denoise = mocker.patch('shoewear.data_sources.manifest_source.denoise_impression')
    ManifestSource(manifest, denoise_raw=False).load_records()
    denoise.assert_not_called()


def test_missing_manifest(tmp_path):
    """Test that a missing manifest raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        ManifestSource(tmp_path / 'absent.jsonl').load_records()


def test_synthetic_source():
    """Test in-memory renders for both sides, sorted by week then side."""
    spec = OutsoleSpec(seed=1, height=128, width=64, block_count=10, hole_count=2,
                       merge_pairs=1)
    records = SyntheticSource(spec, weeks=(0, 2, 4), factor=2).load_records()
    assert [(r.week, r.side) for r in records] == \
        [(w, s) for w in (0, 2, 4) for s in (Side.LEFT, Side.RIGHT)]
    assert all(r.denoised and r.image.shape == (64, 32) for r in records)
