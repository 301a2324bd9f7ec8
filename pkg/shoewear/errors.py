"""Exception hierarchy for shoewear.

Every domain failure is a ``ValueError`` subclass so callers that only know about
``ValueError`` keep working.
"""

from typing import Optional, Sequence


class ShoewearError(ValueError):
    """Base class for all shoewear errors."""


class ShapeError(ShoewearError):
    def __init__(self, what: str, expected: Sequence, actual: Sequence):
        self.what = what
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{what}: expected shape {self.expected}, got {self.actual}")


class ConfigError(ShoewearError):
    pass


class DeltaEncodingError(ShoewearError):
    pass


class DatasetError(ShoewearError):
    pass


class DivergenceError(ShoewearError):
    def __init__(self, message: str, epoch: Optional[int] = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)


class CheckpointError(ShoewearError):
    pass


class ChecksumError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class VariantMismatchError(CheckpointError):
    pass
