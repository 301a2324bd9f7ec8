from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Any, Dict, List, Optional

from shoewear.config.config_loader import ConfigLoader
from shoewear.imaging.image import Image
from shoewear.training.dataset import ImpressionRecord, sort_records


class BaseImpressionSource(ABC):
    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Initialize the base source.

        Args:
            config: Optional configuration dictionary
        """
        self.config = config or ConfigLoader().config

    def _get_source_config(self) -> Dict[str, Any]:
        """Get the data-source section of the configuration."""
        return self.config['data_source']

    def load_records(self) -> List[ImpressionRecord]:
        """Every impression of the series, images attached, sorted by week then side."""
        records = [replace(record, image=self.get_image(record)) for record in self.list_records()]
        return sort_records(records)

    @abstractmethod
    def list_records(self) -> List[ImpressionRecord]:
        """Records of the series, images not necessarily loaded."""
        pass

    @abstractmethod
    def get_image(self, record: ImpressionRecord) -> Image:
        """Pixels for one record, ready for training (denoised)."""
        pass
