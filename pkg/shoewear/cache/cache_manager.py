import hashlib
import json
import logging
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)


class CacheManager:
    def __init__(self, cache_dir: Union[str, Path], expiry_days: int = 7, enabled: bool = True):
        """Initialize the cache manager with directory and expiry settings."""
        self.cache_dir = Path(cache_dir)
        self.expiry_days = expiry_days
        self.enabled = enabled
        if self.enabled:
            self._ensure_cache_dir()

    def _ensure_cache_dir(self) -> None:
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _get_cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.npy"

    def _is_expired(self, cache_path: Path) -> bool:
        if not cache_path.exists():
            return True
        mtime = datetime.fromtimestamp(cache_path.stat().st_mtime)
        return datetime.now() - mtime > timedelta(days=self.expiry_days)

    @staticmethod
    def make_key(source: Union[str, Path], params: Dict[str, Any]) -> str:
        """Digest of a source file's bytes and the parameters applied to it."""
        digest = hashlib.sha256(Path(source).read_bytes())
        digest.update(json.dumps(params, sort_keys=True, default=str).encode('utf-8'))
        return digest.hexdigest()

    def get(self, key: str) -> Optional[np.ndarray]:
        """Get a raster from the cache; expired or unreadable entries are misses."""
        if not self.enabled:
            return None
        cache_path = self._get_cache_path(key)
        if self._is_expired(cache_path):
            return None
        try:
            return np.load(cache_path, allow_pickle=False)
        except (OSError, ValueError) as e:
            logger.debug("Ignoring unreadable cache entry %s: %s", cache_path, e)
            return None

    def set(self, key: str, value: np.ndarray) -> None:
        if not self.enabled:
            return
        cache_path = self._get_cache_path(key)
        try:
            np.save(cache_path, np.asarray(value), allow_pickle=False)
        except OSError as e:
            logger.warning("Could not write cache entry %s: %s", cache_path, e)

    def clear(self) -> None:
        """Clear all cache files."""
        for cache_file in self.cache_dir.glob('*.npy'):
            try:
                cache_file.unlink()
            except OSError:
                pass
