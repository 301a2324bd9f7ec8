"""Layer primitives with hand-written forward and backward passes.

Tensors are plain numpy arrays. Image-like tensors are ``(C, H, W)`` for a single
sample or ``(N, C, H, W)`` for a batch; every primitive returns the same rank it
was given. Convolutions follow the cross-correlation convention (no kernel flip)
in both directions, so the forward and backward passes agree.

Convolution weights are ``(C_out, C_in, kh, kw)``. Transpose-convolution weights
are ``(C_in, C_out, kh, kw)``, i.e. the same array a conv2d mapping
``C_out -> C_in`` would use, which makes ``tconv2d_forward`` its exact adjoint.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from shoewear.errors import ShapeError


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel: Tuple[int, int] = (4, 4)
    stride: Tuple[int, int] = (2, 2)
    padding: Tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("Channel counts must be >= 1")
        if min(self.kernel) < 1:
            raise ValueError(f"Kernel must be >= 1 in both axes, got {self.kernel}")
        if min(self.stride) < 1:
            raise ValueError(f"Stride must be >= 1 in both axes, got {self.stride}")
        if min(self.padding) < 0:
            raise ValueError(f"Padding must be >= 0, got {self.padding}")

    def conv_output_size(self, height: int, width: int) -> Tuple[int, int]:
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.padding
        out = ((height + 2 * ph - kh) // sh + 1, (width + 2 * pw - kw) // sw + 1)
        if height + 2 * ph < kh or width + 2 * pw < kw or min(out) < 1:
            raise ShapeError("conv2d output", (1, 1), out)
        return out

    def tconv_output_size(self, height: int, width: int) -> Tuple[int, int]:
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.padding
        out = ((height - 1) * sh - 2 * ph + kh, (width - 1) * sw - 2 * pw + kw)
        if min(out) < 1:
            raise ShapeError("tconv2d output", (1, 1), out)
        return out

    @property
    def conv_weight_shape(self) -> Tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels) + tuple(self.kernel)

    @property
    def tconv_weight_shape(self) -> Tuple[int, int, int, int]:
        return (self.in_channels, self.out_channels) + tuple(self.kernel)


def _as_batch(x: np.ndarray, what: str) -> Tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError(what, ('C', 'H', 'W'), x.shape)


def _check(what: str, expected, actual) -> None:
    if tuple(expected) != tuple(actual):
        raise ShapeError(what, expected, actual)


def _windows(x: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Strided kernel windows of the zero-padded batch: (N, C, H', W', kh, kw)."""
    (kh, kw), (sh, sw), (ph, pw) = spec.kernel, spec.stride, spec.padding
    padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    return sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]


def _scatter_windows(cols: np.ndarray, spec: ConvSpec, height: int, width: int) -> np.ndarray:
    """Adjoint of ``_windows``: accumulate (N, C, H', W', kh, kw) into an (N, C, H, W) map."""
    (kh, kw), (sh, sw), (ph, pw) = spec.kernel, spec.stride, spec.padding
    n, c, out_h, out_w = cols.shape[:4]
    padded = np.zeros((n, c, height + 2 * ph, width + 2 * pw), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            padded[:, :, i:i + sh * out_h:sh, j:j + sw * out_w:sw] += cols[:, :, :, :, i, j]
    return padded[:, :, ph:ph + height, pw:pw + width]


def conv2d_forward(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
                   bias: np.ndarray) -> np.ndarray:
    batch, squeeze = _as_batch(x, "conv2d input")
    _check("conv2d input channels", (spec.in_channels,), (batch.shape[1],))
    _check("conv2d weights", spec.conv_weight_shape, weights.shape)
    _check("conv2d bias", (spec.out_channels,), bias.shape)
    spec.conv_output_size(*batch.shape[2:])

    cols = _windows(batch, spec)
    out = np.tensordot(cols, weights, axes=([1, 4, 5], [1, 2, 3]))  # (N, H', W', C_out)
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    out = np.ascontiguousarray(out)
    return out[0] if squeeze else out


def conv2d_backward(grad_out: np.ndarray, cached_input: np.ndarray, spec: ConvSpec,
                    weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    batch, squeeze = _as_batch(cached_input, "conv2d cached input")
    grad, _ = _as_batch(grad_out, "conv2d grad_out")
    out_h, out_w = spec.conv_output_size(*batch.shape[2:])
    _check("conv2d grad_out", (batch.shape[0], spec.out_channels, out_h, out_w), grad.shape)
    _check("conv2d weights", spec.conv_weight_shape, weights.shape)

    cols = _windows(batch, spec)
    grad_weights = np.tensordot(grad, cols, axes=([0, 2, 3], [0, 2, 3]))
    grad_bias = grad.sum(axis=(0, 2, 3))
    grad_cols = np.tensordot(grad, weights, axes=([1], [0]))  # (N, H', W', C_in, kh, kw)
    grad_input = _scatter_windows(grad_cols.transpose(0, 3, 1, 2, 4, 5), spec,
                                  *batch.shape[2:])
    grad_input = np.ascontiguousarray(grad_input)
    return (grad_input[0] if squeeze else grad_input), grad_weights, grad_bias


def tconv2d_forward(x: np.ndarray, spec: ConvSpec, weights: np.ndarray,
                    bias: np.ndarray) -> np.ndarray:
    batch, squeeze = _as_batch(x, "tconv2d input")
    _check("tconv2d input channels", (spec.in_channels,), (batch.shape[1],))
    _check("tconv2d weights", spec.tconv_weight_shape, weights.shape)
    _check("tconv2d bias", (spec.out_channels,), bias.shape)
    out_h, out_w = spec.tconv_output_size(*batch.shape[2:])

    cols = np.tensordot(batch, weights, axes=([1], [0]))  # (N, H, W, C_out, kh, kw)
    out = _scatter_windows(cols.transpose(0, 3, 1, 2, 4, 5), spec, out_h, out_w)
    out = np.ascontiguousarray(out + bias[None, :, None, None])
    return out[0] if squeeze else out


def tconv2d_backward(grad_out: np.ndarray, cached_input: np.ndarray, spec: ConvSpec,
                     weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    batch, squeeze = _as_batch(cached_input, "tconv2d cached input")
    grad, _ = _as_batch(grad_out, "tconv2d grad_out")
    out_h, out_w = spec.tconv_output_size(*batch.shape[2:])
    _check("tconv2d grad_out", (batch.shape[0], spec.out_channels, out_h, out_w), grad.shape)
    _check("tconv2d weights", spec.tconv_weight_shape, weights.shape)

    cols = _windows(grad, spec)  # (N, C_out, H, W, kh, kw)
    grad_input = np.tensordot(cols, weights, axes=([1, 4, 5], [1, 2, 3]))
    grad_input = np.ascontiguousarray(grad_input.transpose(0, 3, 1, 2))
    grad_weights = np.tensordot(batch, cols, axes=([0, 2, 3], [0, 2, 3]))
    grad_bias = grad.sum(axis=(0, 2, 3))
    return (grad_input[0] if squeeze else grad_input), grad_weights, grad_bias


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if weights.ndim != 2:
        raise ShapeError("dense weights", ('m', 'n'), weights.shape)
    _check("dense input features", (weights.shape[1],), (x.shape[-1],))
    _check("dense bias", (weights.shape[0],), bias.shape)
    return x @ weights.T + bias


def dense_backward(grad_out: np.ndarray, cached_input: np.ndarray,
                   weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    _check("dense grad_out", cached_input.shape[:-1] + (weights.shape[0],), grad_out.shape)
    grad_input = grad_out @ weights
    grad_2d = grad_out.reshape(-1, weights.shape[0])
    input_2d = cached_input.reshape(-1, weights.shape[1])
    return grad_input, grad_2d.T @ input_2d, grad_2d.sum(axis=0)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad_out: np.ndarray, cached_input: np.ndarray) -> np.ndarray:
    return grad_out * (cached_input > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # strictly inside (0, 1) even where the exponential saturates
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    tiny = np.finfo(out.dtype).tiny
    return np.clip(out, tiny, np.nextafter(out.dtype.type(1), out.dtype.type(0)))


def sigmoid_backward(grad_out: np.ndarray, cached_output: np.ndarray) -> np.ndarray:
    return grad_out * cached_output * (1 - cached_output)


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != b.ndim or a.ndim not in (3, 4):
        raise ShapeError("concat_channels operands", a.shape, b.shape)
    axis = a.ndim - 3
    if a.shape[:axis] != b.shape[:axis] or a.shape[-2:] != b.shape[-2:]:
        raise ShapeError("concat_channels spatial dims", a.shape[:axis] + a.shape[-2:],
                         b.shape[:axis] + b.shape[-2:])
    return np.concatenate([a, b], axis=axis)


def split_channels(t: np.ndarray, first: int) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of ``concat_channels``; also splits its gradient."""
    axis = t.ndim - 3
    index = [slice(None)] * t.ndim
    index[axis] = slice(None, first)
    head = t[tuple(index)]
    index[axis] = slice(first, None)
    return head, t[tuple(index)]


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Squared-error loss summed over each sample and averaged over the leading axis."""
    _check("mse_loss target", pred.shape, target.shape)
    n = pred.shape[0]
    diff = pred - target
    loss = float(np.sum(diff.astype(np.float64) ** 2) / n)
    return loss, (2.0 / n) * diff


def glorot_uniform(shape: Tuple[int, ...], fan_in: int, fan_out: int,
                   rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)
