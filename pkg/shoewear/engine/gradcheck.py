"""Finite-difference verification of the layer primitives (64-bit mode)."""

from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from shoewear.engine import layers
from shoewear.engine.layers import ConvSpec

LAYER_TOLERANCE = 1e-5
ADJOINT_TOLERANCE = 1e-10


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of the scalar ``f()`` with respect to ``x``, perturbed in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        original = flat_x[i]
        flat_x[i] = original + h
        plus = f()
        flat_x[i] = original - h
        minus = f()
        flat_x[i] = original
        flat_g[i] = (plus - minus) / (2 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute deviation, relative to the largest gradient magnitude."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)),
                float(np.max(np.abs(numeric), initial=0.0)), 1e-12)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def _away_from_zero(rng: np.random.Generator, shape, margin: float = 0.1) -> np.ndarray:
    x = rng.standard_normal(shape)
    return x + np.sign(x) * margin


def check_conv2d(rng: np.random.Generator) -> Dict[str, float]:
    spec = ConvSpec(2, 3, kernel=(3, 3), stride=(2, 2), padding=(1, 1))
    x = rng.standard_normal((2, 2, 5, 6))
    w = rng.standard_normal(spec.conv_weight_shape)
    b = rng.standard_normal(3)
    upstream = rng.standard_normal(layers.conv2d_forward(x, spec, w, b).shape)

    def loss() -> float:
        return float(np.sum(layers.conv2d_forward(x, spec, w, b) * upstream))

    gx, gw, gb = layers.conv2d_backward(upstream, x, spec, w)
    return {
        'input': max_relative_error(gx, numeric_gradient(loss, x)),
        'weights': max_relative_error(gw, numeric_gradient(loss, w)),
        'bias': max_relative_error(gb, numeric_gradient(loss, b)),
    }


def check_tconv2d(rng: np.random.Generator) -> Dict[str, float]:
    spec = ConvSpec(3, 2, kernel=(4, 4), stride=(2, 2), padding=(1, 1))
    x = rng.standard_normal((2, 3, 3, 4))
    w = rng.standard_normal(spec.tconv_weight_shape)
    b = rng.standard_normal(2)
    upstream = rng.standard_normal(layers.tconv2d_forward(x, spec, w, b).shape)

    def loss() -> float:
        return float(np.sum(layers.tconv2d_forward(x, spec, w, b) * upstream))

    gx, gw, gb = layers.tconv2d_backward(upstream, x, spec, w)
    return {
        'input': max_relative_error(gx, numeric_gradient(loss, x)),
        'weights': max_relative_error(gw, numeric_gradient(loss, w)),
        'bias': max_relative_error(gb, numeric_gradient(loss, b)),
    }


def check_dense(rng: np.random.Generator) -> Dict[str, float]:
    x = rng.standard_normal((3, 5))
    w = rng.standard_normal((4, 5))
    b = rng.standard_normal(4)
    upstream = rng.standard_normal((3, 4))

    def loss() -> float:
        return float(np.sum(layers.dense_forward(x, w, b) * upstream))

    gx, gw, gb = layers.dense_backward(upstream, x, w)
    return {
        'input': max_relative_error(gx, numeric_gradient(loss, x)),
        'weights': max_relative_error(gw, numeric_gradient(loss, w)),
        'bias': max_relative_error(gb, numeric_gradient(loss, b)),
    }


def check_activations(rng: np.random.Generator) -> Dict[str, float]:
    x = _away_from_zero(rng, (2, 3, 4))
    upstream = rng.standard_normal(x.shape)

    def relu_loss() -> float:
        return float(np.sum(layers.relu(x) * upstream))

    def sigmoid_loss() -> float:
        return float(np.sum(layers.sigmoid(x) * upstream))

    return {
        'relu': max_relative_error(layers.relu_backward(upstream, x),
                                   numeric_gradient(relu_loss, x)),
        'sigmoid': max_relative_error(layers.sigmoid_backward(upstream, layers.sigmoid(x)),
                                      numeric_gradient(sigmoid_loss, x)),
    }


def check_concat(rng: np.random.Generator) -> Dict[str, float]:
    a = rng.standard_normal((2, 3, 4, 2))
    b = rng.standard_normal((2, 2, 4, 2))
    upstream = rng.standard_normal((2, 5, 4, 2))

    def loss() -> float:
        return float(np.sum(layers.concat_channels(a, b) * upstream))

    ga, gb = layers.split_channels(upstream, a.shape[1])
    return {
        'a': max_relative_error(ga, numeric_gradient(loss, a)),
        'b': max_relative_error(gb, numeric_gradient(loss, b)),
    }


def check_mse(rng: np.random.Generator) -> Dict[str, float]:
    pred = rng.standard_normal((3, 1, 4, 4))
    target = rng.standard_normal((3, 1, 4, 4))
    _, grad = layers.mse_loss(pred, target)
    return {'pred': max_relative_error(grad, numeric_gradient(
        lambda: layers.mse_loss(pred, target)[0], pred))}


def adjoint_gap(rng: np.random.Generator) -> float:
    """|<conv(x;W), y> - <x, tconv(y;W)>| for one random conforming instance."""
    c_in, c_out = rng.integers(1, 4, size=2)
    k = int(rng.integers(1, 5))
    s = int(rng.integers(1, 4))
    p = int(rng.integers(0, k))
    out_h, out_w = rng.integers(1, 5, size=2)
    height, width = (out_h - 1) * s + k - 2 * p, (out_w - 1) * s + k - 2 * p
    if height < 1 or width < 1:
        p = 0
        height, width = (out_h - 1) * s + k, (out_w - 1) * s + k
    conv = ConvSpec(int(c_in), int(c_out), (k, k), (s, s), (p, p))
    tconv = ConvSpec(int(c_out), int(c_in), (k, k), (s, s), (p, p))

    w = rng.standard_normal(conv.conv_weight_shape)
    x = rng.standard_normal((int(c_in), int(height), int(width)))
    y = rng.standard_normal((int(c_out),) + conv.conv_output_size(int(height), int(width)))
    lhs = np.sum(layers.conv2d_forward(x, conv, w, np.zeros(int(c_out))) * y)
    rhs = np.sum(x * layers.tconv2d_forward(y, tconv, w, np.zeros(int(c_in))))
    return float(abs(lhs - rhs))


def run_layer_suite(seed: int = 0, adjoint_trials: int = 100) -> pd.DataFrame:
    """Run every layer check and return one row per gradient with its max relative error."""
    rng = np.random.default_rng(seed)
    rows: List[Dict] = []
    checks = [('conv2d', check_conv2d), ('tconv2d', check_tconv2d), ('dense', check_dense),
              ('activation', check_activations), ('concat', check_concat), ('mse', check_mse)]
    for layer, check in checks:
        for name, error in check(rng).items():
            rows.append({'check': f"{layer}.{name}", 'max_rel_error': error,
                         'tolerance': LAYER_TOLERANCE, 'passed': error < LAYER_TOLERANCE})
    gap = max(adjoint_gap(rng) for _ in range(adjoint_trials))
    rows.append({'check': 'adjoint.conv_tconv', 'max_rel_error': gap,
                 'tolerance': ADJOINT_TOLERANCE, 'passed': gap < ADJOINT_TOLERANCE})
    return pd.DataFrame(rows)
