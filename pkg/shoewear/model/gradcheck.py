"""End-to-end finite-difference check of the full network on the tiny preset."""

from typing import Dict

import numpy as np

from shoewear.engine.gradcheck import max_relative_error
from shoewear.engine.layers import mse_loss
from shoewear.model.delta import DeltaMode
from shoewear.model.wear_net import NetworkConfig, WearNet, build

NETWORK_TOLERANCE = 1e-4


def check_network(seed: int = 0, per_tensor: int = 12, h: float = 1e-5,
                  delta_mode: DeltaMode = DeltaMode.SCALAR) -> Dict[str, float]:
    """Max relative error per parameter tensor, probing ``per_tensor`` random entries each."""
    config = NetworkConfig.tiny(delta_mode)
    params = build(config, seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    for name, tensor in params.tensors.items():
        if name.endswith('.bias'):
            tensor[...] = rng.uniform(0.05, 0.2, size=tensor.shape)

    net = WearNet(params)
    x = rng.uniform(0.0, 1.0, size=(2, 1, config.input_height, config.input_width))
    d = rng.uniform(0.0, 1.0, size=(2, delta_mode.width))
    target = rng.uniform(0.0, 1.0, size=x.shape)

    def loss() -> float:
        out, _ = net.forward_batch(x, d)
        return mse_loss(out, target)[0]

    out, cache = net.forward_batch(x, d)
    _, grad_out = mse_loss(out, target)
    analytic = net.backward(cache, grad_out)

    errors = {}
    for name, tensor in params.tensors.items():
        flat = tensor.reshape(-1)
        picks = rng.choice(flat.size, size=min(per_tensor, flat.size), replace=False)
        numeric = np.empty(len(picks))
        for k, index in enumerate(picks):
            original = flat[index]
            flat[index] = original + h
            plus = loss()
            flat[index] = original - h
            minus = loss()
            flat[index] = original
            numeric[k] = (plus - minus) / (2 * h)
        errors[name] = max_relative_error(analytic[name].reshape(-1)[picks], numeric)
    return errors
