from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from shoewear.errors import ConfigError
from shoewear.model.delta import Variant

DEFAULT_LEARNING_RATE = 1e-5
DEFAULT_EPOCHS = 2000


@dataclass(frozen=True)
class ExperimentConfig:
    variant: Variant = Variant.FORWARD
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    batch_size: Optional[int] = None  # None trains full-batch
    seed: int = 0
    checkpoint_every: int = 0
    checkpoint_path: Optional[str] = None
    loss_csv_path: Optional[str] = None
    log_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, 'variant', Variant.parse(self.variant))
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'ExperimentConfig':
        known = {k: v for k, v in values.items()
                 if k in cls.__dataclass_fields__ and v is not None}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values['variant'] = self.variant.value
        return values
