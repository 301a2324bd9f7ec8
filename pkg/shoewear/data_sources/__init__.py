from .base_source import BaseImpressionSource
from .manifest_source import ManifestSource
from .synthetic_source import SyntheticSource

__all__ = ['BaseImpressionSource', 'ManifestSource', 'SyntheticSource']
