"""Image quality metrics and evaluation reports."""

from .evaluator import MetricReport, PersistenceModel, compare_reports, evaluate
from .quality_metrics import psnr, ssim, ssim_components

__all__ = ['MetricReport', 'PersistenceModel', 'compare_reports', 'evaluate', 'psnr', 'ssim',
           'ssim_components']
