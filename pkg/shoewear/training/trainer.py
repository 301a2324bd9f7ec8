"""Training loop minimising the batch-mean squared error with Adam."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from shoewear.engine.layers import mse_loss
from shoewear.engine.optim import adam_step
from shoewear.errors import DatasetError, DeltaEncodingError, DivergenceError
from shoewear.model.wear_net import ModelParams, NetworkConfig, WearNet, build, stack_inputs
from shoewear.training.checkpoint import save_checkpoint
from shoewear.training.dataset import TrainingSample
from shoewear.training.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ['epoch', 'mean_loss']


@dataclass
class TrainingResult:
    params: ModelParams
    loss_curve: pd.DataFrame

    @property
    def final_loss(self) -> float:
        return float(self.loss_curve['mean_loss'].iloc[-1])


class Trainer:
    """Runs one experiment: seeded init, per-epoch shuffled batches, Adam on every tensor.

    Pass ``params`` to resume from a checkpoint; Adam moments and step counts carry on.
    The trainer works on its own copy, so the caller's ``params`` stay as they were.
    """

    def __init__(self, config: ExperimentConfig, network: Optional[NetworkConfig] = None,
                 params: Optional[ModelParams] = None):
        self.config = config
        if params is None:
            network = network or NetworkConfig.desk(config.variant.delta_mode)
            params = build(network, config.seed)
        else:
            params = params.copy()
        self.params = params
        self.network = params.config
        if self.network.delta_mode is not config.variant.delta_mode:
            raise DeltaEncodingError(
                f"{config.variant.value} training needs {config.variant.delta_mode.value} deltas, "
                f"the network takes {self.network.delta_mode.value}")

    def _stack(self, samples: List[TrainingSample]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not samples:
            raise DatasetError("Cannot train on an empty sample list")
        modes = {s.delta.mode for s in samples}
        if modes != {self.network.delta_mode}:
            raise DeltaEncodingError(
                f"Samples carry {sorted(m.value for m in modes)} deltas, the network takes "
                f"{self.network.delta_mode.value}")
        dtype = self.params.dtype
        x, d = stack_inputs([s.X for s in samples], [s.delta for s in samples], dtype)
        y = np.stack([s.Y.pixels for s in samples])[:, None].astype(dtype)
        return x, d, y

    def _batches(self, n: int, rng: np.random.Generator) -> List[np.ndarray]:
        order = rng.permutation(n)
        size = self.config.batch_size or n
        return [order[i:i + size] for i in range(0, n, size)]

    def train(self, samples: List[TrainingSample]) -> TrainingResult:
        x, d, y = self._stack(samples)
        n = len(x)
        net = WearNet(self.params)
        rng = np.random.default_rng(self.config.seed)
        lr = self.config.learning_rate
        logger.info("Training %s model on %d samples for %d epochs (lr %g, batch %s)",
                    self.config.variant.value, n, self.config.epochs, lr,
                    self.config.batch_size or 'full')

        curve = []
        for epoch in range(1, self.config.epochs + 1):
            total = 0.0
            for idx in self._batches(n, rng):
                out, cache = net.forward_batch(x[idx], d[idx])
                loss, grad = mse_loss(out, y[idx])
                if not np.isfinite(loss):
                    raise DivergenceError(f"Loss became {loss}", epoch=epoch)
                grads = net.backward(cache, grad)
                for name, g in grads.items():
                    if not np.all(np.isfinite(g)):
                        raise DivergenceError(f"Gradient of '{name}' is not finite", epoch=epoch)
                    self.params.tensors[name], self.params.adam_states[name] = adam_step(
                        self.params.tensors[name], g, self.params.adam_states[name], lr)
                total += loss * len(idx)
            mean_loss = total / n
            curve.append((epoch, mean_loss))

            if self.config.log_every and epoch % self.config.log_every == 0:
                logger.info("epoch %d/%d mean loss %.6g", epoch, self.config.epochs, mean_loss)
            if (self.config.checkpoint_path and self.config.checkpoint_every
                    and epoch % self.config.checkpoint_every == 0):
                save_checkpoint(self.params, self.config, self.config.checkpoint_path)

        if self.config.checkpoint_path:
            save_checkpoint(self.params, self.config, self.config.checkpoint_path)
        loss_curve = pd.DataFrame(curve, columns=LOSS_COLUMNS)
        if self.config.loss_csv_path:
            write_loss_curve(loss_curve, self.config.loss_csv_path)
        return TrainingResult(self.params, loss_curve)


def write_loss_curve(loss_curve: pd.DataFrame, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    loss_curve.to_csv(path, index=False, columns=LOSS_COLUMNS)


def smoothed(loss_curve: pd.DataFrame, window: int = 50) -> pd.Series:
    """Non-overlapping window means of the loss, the view in which it should not rise."""
    groups = (loss_curve['epoch'] - 1) // window
    return loss_curve.groupby(groups)['mean_loss'].mean()


def train(config: ExperimentConfig, samples: List[TrainingSample],
          network: Optional[NetworkConfig] = None) -> TrainingResult:
    return Trainer(config, network).train(samples)
