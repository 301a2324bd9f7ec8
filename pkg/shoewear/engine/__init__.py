"""Dense-tensor numerics: layer primitives, their gradients and the Adam update."""

from .layers import (ConvSpec, concat_channels, conv2d_backward, conv2d_forward,
                     dense_backward, dense_forward, glorot_uniform, mse_loss, relu,
                     relu_backward, sigmoid, sigmoid_backward, split_channels,
                     tconv2d_backward, tconv2d_forward)
from .optim import AdamState, adam_step

__all__ = [
    'ConvSpec', 'conv2d_forward', 'conv2d_backward', 'tconv2d_forward', 'tconv2d_backward',
    'dense_forward', 'dense_backward', 'relu', 'relu_backward', 'sigmoid',
    'sigmoid_backward', 'concat_channels', 'split_channels', 'mse_loss', 'glorot_uniform',
    'AdamState', 'adam_step',
]
