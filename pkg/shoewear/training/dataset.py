"""Impression records, the JSON-lines manifest, dataset splits and training tuples."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd

from shoewear.errors import DatasetError
from shoewear.imaging.image import Image, Side
from shoewear.model.delta import MAX_WEEK, DeltaEncoding, Variant

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.8
MANIFEST_COLUMNS = ['week', 'side', 'file', 'denoised']


@dataclass(frozen=True)
class ImpressionRecord:
    week: int
    side: Side
    image: Optional[Image] = None
    denoised: bool = False
    file: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'side', Side.parse(self.side))
        if self.week < 0 or self.week % 2:
            raise DatasetError(f"Impression week must be an even integer >= 0, got {self.week}")


@dataclass(frozen=True)
class TrainingSample:
    X: Image
    delta: DeltaEncoding
    Y: Image

    @property
    def delta_weeks(self) -> int:
        return (self.Y.week or 0) - (self.X.week or 0)


def load_manifest(path: Union[str, Path]) -> List[ImpressionRecord]:
    """Records listed in a JSON-lines manifest; images are not loaded."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found at {path}")
    if path.stat().st_size == 0:
        return []
    frame = pd.read_json(path, lines=True, dtype=False)
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"Manifest {path} is missing columns {missing}")
    return [ImpressionRecord(week=int(row.week), side=row.side, file=str(row.file),
                             denoised=bool(row.denoised))
            for row in frame.itertuples(index=False)]


def write_manifest(records: Iterable[ImpressionRecord], path: Union[str, Path]) -> None:
    frame = pd.DataFrame([{'week': r.week, 'side': r.side.value, 'file': r.file,
                           'denoised': r.denoised} for r in records],
                         columns=MANIFEST_COLUMNS)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_json(path, orient='records', lines=True)


def sort_records(records: Iterable[ImpressionRecord]) -> List[ImpressionRecord]:
    return sorted(records, key=lambda r: (r.week, r.side.value))


def split_dataset(records: List[ImpressionRecord],
                  variant: Variant) -> Tuple[List[ImpressionRecord], List[ImpressionRecord]]:
    """80/20 split over weeks, both sides kept together.

    Forward trains on the earliest weeks and tests on the latest; backward is reversed.
    """
    variant = Variant.parse(variant)
    records = sort_records(records)
    weeks = sorted({r.week for r in records})
    if len(weeks) < 2:
        raise DatasetError(f"Need at least two distinct weeks to split, got {len(weeks)}")

    n_train = min(max(int(round(TRAIN_FRACTION * len(weeks))), 1), len(weeks) - 1)
    if variant is Variant.FORWARD:
        train_weeks = set(weeks[:n_train])
    else:
        train_weeks = set(weeks[-n_train:])
    train = [r for r in records if r.week in train_weeks]
    test = [r for r in records if r.week not in train_weeks]
    if not train or not test:
        raise DatasetError("Dataset split produced an empty partition")
    logger.info("%s split: %d train / %d test records", variant.value, len(train), len(test))
    return train, test


def _by_side(records: Iterable[ImpressionRecord]) -> Dict[Side, List[ImpressionRecord]]:
    groups: Dict[Side, List[ImpressionRecord]] = {}
    for record in sort_records(records):
        if record.image is None:
            raise DatasetError(f"Record for week {record.week} ({record.side.value}) has no image")
        groups.setdefault(record.side, []).append(record)
    return groups


def _with_provenance(record: ImpressionRecord) -> Image:
    return Image(record.image.pixels, week=record.week, side=record.side)


def make_samples(train_records: List[ImpressionRecord], variant: Variant) -> List[TrainingSample]:
    """Same-side training tuples.

    Forward: every ordered pair with ``week_x <= week_y`` (identity pairs included),
    Delta t = week_y - week_x. Backward: every pair, one-hot target week_y.
    """
    variant = Variant.parse(variant)
    if not train_records:
        raise DatasetError("Cannot build samples from an empty record list")
    samples = []
    for side_records in _by_side(train_records).values():
        for i, source in enumerate(side_records):
            targets = side_records[i:] if variant is Variant.FORWARD else side_records
            for target in targets:
                samples.append(TrainingSample(
                    _with_provenance(source),
                    DeltaEncoding.for_variant(variant, source.week, target.week),
                    _with_provenance(target)))
    return samples


def make_test_samples(train_records: List[ImpressionRecord], test_records: List[ImpressionRecord],
                      variant: Variant, min_delta: int = 0) -> List[TrainingSample]:
    """Held-out tuples: a training impression as input, a test impression as target."""
    variant = Variant.parse(variant)
    train_by_side = _by_side(train_records)
    samples = []
    for side, targets in _by_side(test_records).items():
        for source in train_by_side.get(side, []):
            for target in targets:
                gap = target.week - source.week
                if variant is Variant.FORWARD and gap < 0:
                    continue
                if abs(gap) < min_delta:
                    continue
                samples.append(TrainingSample(
                    _with_provenance(source),
                    DeltaEncoding.for_variant(variant, source.week, target.week),
                    _with_provenance(target)))
    if not samples:
        raise DatasetError("No held-out samples could be formed from the test split")
    return samples


def is_verifiable(input_week: Optional[int], delta_weeks: int) -> bool:
    """Predictions past the last recorded week have no ground truth."""
    return input_week is None or input_week + delta_weeks <= MAX_WEEK
