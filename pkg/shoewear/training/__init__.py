"""Dataset handling, the training loop and checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import (ImpressionRecord, TrainingSample, is_verifiable, load_manifest,
                      make_samples, make_test_samples, split_dataset, write_manifest)
from .experiment import ExperimentConfig
from .trainer import Trainer, TrainingResult, smoothed, train, write_loss_curve

__all__ = [
    'ImpressionRecord', 'TrainingSample', 'ExperimentConfig', 'Trainer', 'TrainingResult',
    'load_manifest', 'write_manifest', 'split_dataset', 'make_samples', 'make_test_samples',
    'is_verifiable', 'train', 'smoothed', 'write_loss_curve', 'save_checkpoint',
    'load_checkpoint',
]
