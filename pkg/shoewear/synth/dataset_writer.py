"""Writes a fortnightly impression series to disk in the layout the loaders expect.

::

    <out>/clean/week_00_left.pgm ...
    <out>/noisy/week_00_left.pgm ...
    <out>/manifest.jsonl         clean impressions (denoised = true)
    <out>/noisy_manifest.jsonl   noisy impressions (denoised = false)
"""

import logging
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from shoewear.imaging.image import Image, Side
from shoewear.imaging.pgm import write_pgm
from shoewear.synth.noise import NoiseSpec, add_noise
from shoewear.synth.outsole import (OutsoleSpec, WearState, advance_wear, generate_outsole,
                                    render_impression)
from shoewear.training.dataset import ImpressionRecord, write_manifest

logger = logging.getLogger(__name__)

MISSING_WEEK = 6
DEFAULT_WEEKS = tuple(w for w in range(0, 53, 2) if w != MISSING_WEEK)
MANIFEST_NAME = 'manifest.jsonl'
NOISY_MANIFEST_NAME = 'noisy_manifest.jsonl'


def _side_specs(spec: OutsoleSpec) -> List[OutsoleSpec]:
    right = spec if spec.side is Side.RIGHT else spec.mirrored()
    return [right.mirrored(), right]


def impression_series(spec: OutsoleSpec, weeks: Sequence[int] = DEFAULT_WEEKS,
                      factor: int = 1) -> Iterator[Tuple[Side, int, Image]]:
    """Clean renders of both outsoles, week by week."""
    for side_spec in _side_specs(spec):
        state: WearState = generate_outsole(side_spec)
        for week in sorted(weeks):
            state = advance_wear(state, week - state.week)
            yield side_spec.side, week, render_impression(state, factor)


def noise_seed(spec: OutsoleSpec, week: int, side: Side) -> int:
    return spec.seed * 1000 + week * 2 + (1 if side is Side.LEFT else 0)


def emit_dataset(spec: OutsoleSpec, path: Union[str, Path], noise_spec: Optional[NoiseSpec] = None,
                 weeks: Sequence[int] = DEFAULT_WEEKS, factor: int = 1) -> List[ImpressionRecord]:
    """Render, corrupt and write every impression; returns the clean manifest records."""
    root = Path(path)
    (root / 'clean').mkdir(parents=True, exist_ok=True)
    (root / 'noisy').mkdir(parents=True, exist_ok=True)
    noise_spec = noise_spec or NoiseSpec()

    clean_records, noisy_records = [], []
    for side, week, image in impression_series(spec, weeks, factor):
        name = f'week_{week:02d}_{side.value}.pgm'
        noisy, _ = add_noise(image, noise_spec, noise_seed(spec, week, side))
        write_pgm(root / 'clean' / name, image)
        write_pgm(root / 'noisy' / name, noisy)
        clean_records.append(ImpressionRecord(week, side, denoised=True, file=f'clean/{name}'))
        noisy_records.append(ImpressionRecord(week, side, denoised=False, file=f'noisy/{name}'))

    write_manifest(clean_records, root / MANIFEST_NAME)
    write_manifest(noisy_records, root / NOISY_MANIFEST_NAME)
    logger.info("Wrote %d clean and %d noisy impressions to %s", len(clean_records),
                len(noisy_records), root)
    return clean_records
