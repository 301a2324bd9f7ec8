"""Temporal conditioning inputs for the delta branch."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from shoewear.errors import DeltaEncodingError

MAX_WEEK = 52
WEEK_STEP = 2
ONEHOT_SIZE = 52
SCALAR_SCALE = float(MAX_WEEK)


class Variant(str, Enum):
    FORWARD = 'forward'
    BACKWARD = 'backward'

    @classmethod
    def parse(cls, value) -> 'Variant':
        if isinstance(value, Variant):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DeltaEncodingError(f"Invalid variant '{value}', expected 'forward' or 'backward'")

    @property
    def delta_mode(self) -> 'DeltaMode':
        return DeltaMode.SCALAR if self is Variant.FORWARD else DeltaMode.ONEHOT52


class DeltaMode(str, Enum):
    SCALAR = 'scalar'
    ONEHOT52 = 'onehot52'

    @property
    def width(self) -> int:
        return 1 if self is DeltaMode.SCALAR else ONEHOT_SIZE


def _validate_week(value, what: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise DeltaEncodingError(f"{what} must be an integer, got {value!r}")
    value = int(value)
    if not 0 <= value <= MAX_WEEK:
        raise DeltaEncodingError(f"{what} must lie in [0, {MAX_WEEK}], got {value}")
    if value % WEEK_STEP:
        raise DeltaEncodingError(f"{what} must be a multiple of {WEEK_STEP}, got {value}")
    return value


def week_to_slot(week: int) -> int:
    """Week 0 occupies slot 0, weeks 2..52 occupy slots 1..26; slots 27..51 stay unused."""
    return _validate_week(week, "One-hot week") // WEEK_STEP


def slot_to_week(slot: int) -> int:
    if not 0 <= slot <= MAX_WEEK // WEEK_STEP:
        raise DeltaEncodingError(f"One-hot slot {slot} does not map to a recorded week")
    return slot * WEEK_STEP


@dataclass(frozen=True)
class DeltaEncoding:
    mode: DeltaMode
    scalar_value: Optional[int] = None
    onehot: Optional[tuple] = None

    def __post_init__(self):
        if self.mode is DeltaMode.SCALAR:
            if self.scalar_value is None or self.onehot is not None:
                raise DeltaEncodingError("Scalar encoding needs exactly a scalar value")
            _validate_week(self.scalar_value, "Delta t")
        else:
            if self.onehot is None or self.scalar_value is not None:
                raise DeltaEncodingError("One-hot encoding needs exactly a 52-element vector")
            vector = np.asarray(self.onehot)
            if vector.shape != (ONEHOT_SIZE,):
                raise DeltaEncodingError(
                    f"One-hot vector must have {ONEHOT_SIZE} elements, got {vector.shape}")
            if not np.all((vector == 0) | (vector == 1)):
                raise DeltaEncodingError("One-hot vector must be binary")
            if int(vector.sum()) != 1:
                raise DeltaEncodingError(
                    f"One-hot vector must contain exactly one 1, got {int(vector.sum())}")

    @classmethod
    def scalar(cls, weeks: int) -> 'DeltaEncoding':
        return cls(DeltaMode.SCALAR, scalar_value=_validate_week(weeks, "Delta t"))

    @classmethod
    def onehot_week(cls, week: int) -> 'DeltaEncoding':
        vector = [0] * ONEHOT_SIZE
        vector[week_to_slot(week)] = 1
        return cls(DeltaMode.ONEHOT52, onehot=tuple(vector))

    @classmethod
    def from_vector(cls, vector: Sequence[float]) -> 'DeltaEncoding':
        return cls(DeltaMode.ONEHOT52, onehot=tuple(np.asarray(vector).tolist()))

    @classmethod
    def for_variant(cls, variant: Variant, input_week: int, target_week: int) -> 'DeltaEncoding':
        if Variant.parse(variant) is Variant.FORWARD:
            return cls.scalar(target_week - input_week)
        return cls.onehot_week(target_week)

    @property
    def target_slot(self) -> int:
        if self.mode is not DeltaMode.ONEHOT52:
            raise DeltaEncodingError("Scalar encodings have no target slot")
        return int(np.argmax(self.onehot))

    @property
    def target_week(self) -> int:
        return slot_to_week(self.target_slot)

    def features(self, dtype=np.float32) -> np.ndarray:
        """Input vector of the first delta layer; scalar Delta t is scaled to [0, 1]."""
        if self.mode is DeltaMode.SCALAR:
            return np.array([self.scalar_value / SCALAR_SCALE], dtype=dtype)
        return np.asarray(self.onehot, dtype=dtype)
