"""Adam optimiser state and update rule."""

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from shoewear.errors import DivergenceError, ShapeError


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, param: np.ndarray, **hyper) -> 'AdamState':
        return cls(np.zeros_like(param), np.zeros_like(param), **hyper)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState,
              lr: float) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns new arrays; inputs are left untouched."""
    if grad.shape != param.shape:
        raise ShapeError("adam gradient", param.shape, grad.shape)
    if state.first_moment.shape != param.shape:
        raise ShapeError("adam moments", param.shape, state.first_moment.shape)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("Non-finite gradient passed to Adam")

    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * (grad * grad)
    m = m.astype(param.dtype, copy=False)
    v = v.astype(param.dtype, copy=False)

    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    update = (lr / bc1) * m / (np.sqrt(v / bc2) + state.epsilon)
    new_param = (param - update).astype(param.dtype, copy=False)
    return new_param, replace(state, first_moment=m, second_moment=v, step_count=t)
