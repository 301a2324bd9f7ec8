import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Sequence, Union

import numpy as np
import pandas as pd
from tabulate import tabulate

from shoewear.analysis.quality_metrics import DEFAULT_WINDOW, psnr, ssim
from shoewear.errors import DatasetError, DeltaEncodingError
from shoewear.imaging.image import Image
from shoewear.model.delta import DeltaEncoding, Variant
from shoewear.training.dataset import TrainingSample, is_verifiable

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['side', 'input_week', 'target_week', 'delta_weeks', 'ssim', 'ssim_global',
                  'psnr_db', 'psnr_infinite']


class Predictor(Protocol):
    def predict(self, image: Image, delta: DeltaEncoding) -> Image:
        ...


class PersistenceModel:
    """Baseline that predicts no change: the output is the input."""

    def predict(self, image: Image, delta: DeltaEncoding) -> Image:
        return image


@dataclass
class MetricReport:
    name: str
    scores: pd.DataFrame

    def _finite_psnr(self) -> pd.Series:
        return self.scores.loc[~self.scores['psnr_infinite'], 'psnr_db']

    def summary(self) -> Dict[str, Any]:
        psnr_values = self._finite_psnr()
        return {
            'name': self.name,
            'count': len(self.scores),
            'ssim_mean': float(self.scores['ssim'].mean()),
            'ssim_std': float(self.scores['ssim'].std(ddof=0)),
            'ssim_global_mean': float(self.scores['ssim_global'].mean()),
            'psnr_mean': float(psnr_values.mean()) if len(psnr_values) else float('inf'),
            'psnr_std': float(psnr_values.std(ddof=0)) if len(psnr_values) else 0.0,
            'psnr_excluded': int(self.scores['psnr_infinite'].sum()),
        }

    def table_rows(self) -> Dict[str, float]:
        s = self.summary()
        return {'SSIM Mean': s['ssim_mean'], 'SSIM STD': s['ssim_std'],
                'SSIM (global) Mean': s['ssim_global_mean'],
                'PSNR Mean (dB)': s['psnr_mean'], 'PSNR STD (dB)': s['psnr_std']}

    def to_table(self) -> str:
        rows = [[metric, value] for metric, value in self.table_rows().items()]
        return tabulate(rows, headers=['Metric', self.name], tablefmt='pipe', floatfmt='.4f')

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.scores.to_csv(path, index=False)

    def filtered(self, min_delta: int) -> 'MetricReport':
        kept = self.scores[self.scores['delta_weeks'].abs() >= min_delta].reset_index(drop=True)
        return MetricReport(self.name, kept)


def comparison_frame(reports: Sequence[MetricReport]) -> pd.DataFrame:
    """Mean/STD rows, one column per report."""
    if not reports:
        raise DatasetError("No reports to compare")
    frame = pd.DataFrame({report.name: report.table_rows() for report in reports})
    return frame.rename_axis('Metric').reset_index()


def compare_reports(reports: Sequence[MetricReport]) -> str:
    """Side-by-side Mean/STD table, one column per report."""
    return tabulate(comparison_frame(reports), headers='keys', tablefmt='pipe', floatfmt='.4f',
                    showindex=False)


def evaluate(model: Predictor, samples: List[TrainingSample], variant: Optional[Variant] = None,
             name: Optional[str] = None, window: int = DEFAULT_WINDOW) -> MetricReport:
    """Scores ``model.predict(X, delta)`` against Y for every held-out sample."""
    if not samples:
        raise DatasetError("Cannot evaluate an empty test set")
    if variant is not None:
        variant = Variant.parse(variant)
        wrong = [s for s in samples if s.delta.mode is not variant.delta_mode]
        if wrong:
            raise DeltaEncodingError(
                f"{len(wrong)} sample(s) carry {wrong[0].delta.mode.value} deltas, "
                f"{variant.value} models take {variant.delta_mode.value}")
    name = name or (variant.value if variant is not None else type(model).__name__)

    rows = []
    for sample in samples:
        if not is_verifiable(sample.X.week, sample.delta_weeks):
            logger.warning("Skipping unverifiable sample: week %s + %d", sample.X.week,
                           sample.delta_weeks)
            continue
        prediction = model.predict(sample.X, sample.delta)
        score = psnr(prediction, sample.Y)
        rows.append({
            'side': sample.X.side.value if sample.X.side else None,
            'input_week': sample.X.week,
            'target_week': sample.Y.week,
            'delta_weeks': sample.delta_weeks,
            'ssim': ssim(prediction, sample.Y, window),
            'ssim_global': ssim(prediction, sample.Y, None),
            'psnr_db': score,
            'psnr_infinite': bool(np.isinf(score)),
        })

    scores = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    excluded = int(scores['psnr_infinite'].sum())
    if excluded:
        logger.warning("%d prediction(s) match their target exactly; PSNR is infinite and "
                       "excluded from the aggregates", excluded)
    return MetricReport(name, scores)
