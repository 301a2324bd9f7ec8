"""Procedural outsole wear series used as ground truth."""

from .dataset_writer import DEFAULT_WEEKS, emit_dataset, impression_series
from .noise import NoiseSpec, add_noise
from .outsole import (OutsoleGeometry, OutsoleSpec, WearState, advance_wear, contact_ink,
                      count_visible_dots, generate_outsole, logo_contrast, merged_pairs,
                      render_impression)

__all__ = [
    'DEFAULT_WEEKS', 'emit_dataset', 'impression_series', 'NoiseSpec', 'add_noise',
    'OutsoleGeometry', 'OutsoleSpec', 'WearState', 'advance_wear', 'contact_ink',
    'count_visible_dots', 'generate_outsole', 'logo_contrast', 'merged_pairs',
    'render_impression',
]
