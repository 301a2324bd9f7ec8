import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from shoewear.cache.cache_manager import CacheManager
from shoewear.data_sources.base_source import BaseImpressionSource
from shoewear.denoise.noise_map import DenoiseParams, denoise_impression
from shoewear.imaging.image import Image
from shoewear.imaging.pgm import read_pgm
from shoewear.training.dataset import ImpressionRecord, load_manifest

logger = logging.getLogger(__name__)


class ManifestSource(BaseImpressionSource):
    """Impressions listed in a JSON-lines manifest, PGM paths relative to the manifest.

    Rows marked ``denoised: false`` are run through the denoiser on load (when
    ``denoise_raw`` is set); results are cached by file digest and parameters.
    """

    def __init__(self, manifest_path: Union[str, Path], cache_manager: Optional[CacheManager] = None,
                 denoise_params: Optional[DenoiseParams] = None, denoise_raw: bool = True,
                 config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent
        self.cache_manager = cache_manager
        self.denoise_params = denoise_params or DenoiseParams()
        self.denoise_raw = denoise_raw

    def list_records(self) -> List[ImpressionRecord]:
        return load_manifest(self.manifest_path)

    def _path(self, record: ImpressionRecord) -> Path:
        path = Path(record.file)
        return path if path.is_absolute() else self.root / path

    def get_image(self, record: ImpressionRecord) -> Image:
        path = self._path(record)
        image = read_pgm(path, week=record.week, side=record.side)
        if record.denoised or not self.denoise_raw:
            return image

        params = self.denoise_params.scaled_to(image.shape)
        key = None
        if self.cache_manager is not None:
            key = CacheManager.make_key(path, asdict(params))
            cached = self.cache_manager.get(key)
            if cached is not None and cached.shape == image.shape:
                return image.with_pixels(cached)

        result = denoise_impression(image, params)
        logger.info("Denoised %s: %d noise pixels", path.name, result.noise_map.mask.sum())
        if key is not None:
            self.cache_manager.set(key, result.image.pixels)
        return result.image
