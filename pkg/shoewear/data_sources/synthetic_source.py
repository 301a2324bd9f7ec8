from typing import Any, Dict, List, Optional, Sequence, Tuple

from shoewear.data_sources.base_source import BaseImpressionSource
from shoewear.imaging.image import Image, Side
from shoewear.synth.dataset_writer import DEFAULT_WEEKS, impression_series
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.dataset import ImpressionRecord


class SyntheticSource(BaseImpressionSource):
    """Clean generator renders held in memory; nothing touches the disk."""

    def __init__(self, spec: Optional[OutsoleSpec] = None, weeks: Sequence[int] = DEFAULT_WEEKS,
                 factor: int = 1, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.spec = spec or OutsoleSpec()
        self.weeks = tuple(weeks)
        self.factor = factor
        self._images: Optional[Dict[Tuple[int, Side], Image]] = None

    def _render(self) -> Dict[Tuple[int, Side], Image]:
        if self._images is None:
            self._images = {(week, side): image for side, week, image
                            in impression_series(self.spec, self.weeks, self.factor)}
        return self._images

    def list_records(self) -> List[ImpressionRecord]:
        return [ImpressionRecord(week, side, denoised=True) for week, side in self._render()]

    def get_image(self, record: ImpressionRecord) -> Image:
        return self._render()[(record.week, record.side)]
