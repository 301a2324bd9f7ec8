"""Three-branch conditional auto-encoder.

The encoder F (five strided convolutions), the delta branch G (two dense layers
whose output is reshaped to the encoder's spatial size) and the decoder H (five
transpose convolutions over the concatenation of both) share all code between the
forward-prediction and reconstruction variants; only the delta input width differs.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from shoewear.engine import layers
from shoewear.engine.layers import ConvSpec
from shoewear.engine.optim import AdamState
from shoewear.errors import ConfigError, DeltaEncodingError, ShapeError
from shoewear.imaging.image import Image
from shoewear.model.delta import DeltaEncoding, DeltaMode, Variant

logger = logging.getLogger(__name__)

NUM_LAYERS = 5
SPATIAL_DIVISOR = 32
INIT_SCHEME = 'glorot_uniform'


@dataclass(frozen=True)
class NetworkConfig:
    input_height: int = 160
    input_width: int = 64
    encoder_channels: Tuple[int, ...] = (8, 16, 32, 64, 128)
    delta_hidden: int = 64
    delta_channels: int = 8
    kernel: int = 4
    stride: int = 2
    padding: int = 1
    delta_mode: DeltaMode = DeltaMode.SCALAR

    def __post_init__(self):
        object.__setattr__(self, 'encoder_channels', tuple(int(c) for c in self.encoder_channels))
        object.__setattr__(self, 'delta_mode', DeltaMode(self.delta_mode))
        if self.input_height % SPATIAL_DIVISOR or self.input_width % SPATIAL_DIVISOR:
            raise ConfigError(
                f"Input dims {self.input_height}x{self.input_width} must be divisible by "
                f"{SPATIAL_DIVISOR}")
        if len(self.encoder_channels) != NUM_LAYERS:
            raise ConfigError(f"Encoder needs exactly {NUM_LAYERS} channel counts, "
                              f"got {len(self.encoder_channels)}")
        if any(b <= a for a, b in zip(self.encoder_channels, self.encoder_channels[1:])):
            raise ConfigError(f"Encoder channels must increase strictly: {self.encoder_channels}")
        if min(self.encoder_channels) < 1 or self.delta_hidden < 1 or self.delta_channels < 1:
            raise ConfigError("Channel and hidden widths must be positive")
        # the chain must halve and double cleanly for the output to match the input
        geometry = ConvSpec(1, 1, (self.kernel,) * 2, (self.stride,) * 2, (self.padding,) * 2)
        h, w = self.input_height, self.input_width
        for _ in range(NUM_LAYERS):
            h, w = geometry.conv_output_size(h, w)
        if (h, w) != self.latent_size:
            raise ConfigError(f"Kernel {self.kernel}/stride {self.stride}/padding "
                              f"{self.padding} do not reduce the input by {SPATIAL_DIVISOR}")

    @property
    def latent_size(self) -> Tuple[int, int]:
        return self.input_height // SPATIAL_DIVISOR, self.input_width // SPATIAL_DIVISOR

    @property
    def delta_output_size(self) -> int:
        h5, w5 = self.latent_size
        return self.delta_channels * h5 * w5

    def encoder_specs(self) -> List[ConvSpec]:
        ins = (1,) + self.encoder_channels[:-1]
        return [self._spec(i, o) for i, o in zip(ins, self.encoder_channels)]

    def decoder_specs(self) -> List[ConvSpec]:
        outs = self.encoder_channels[-2::-1] + (1,)
        ins = (self.encoder_channels[-1] + self.delta_channels,) + outs[:-1]
        return [self._spec(i, o) for i, o in zip(ins, outs)]

    def _spec(self, c_in: int, c_out: int) -> ConvSpec:
        return ConvSpec(c_in, c_out, (self.kernel,) * 2, (self.stride,) * 2, (self.padding,) * 2)

    @classmethod
    def desk(cls, delta_mode: DeltaMode = DeltaMode.SCALAR) -> 'NetworkConfig':
        return cls(delta_mode=delta_mode)

    @classmethod
    def full(cls, delta_mode: DeltaMode = DeltaMode.SCALAR) -> 'NetworkConfig':
        return cls(input_height=640, input_width=256, encoder_channels=(32, 64, 128, 256, 512),
                   delta_mode=delta_mode)

    @classmethod
    def tiny(cls, delta_mode: DeltaMode = DeltaMode.SCALAR) -> 'NetworkConfig':
        return cls(input_height=32, input_width=32, encoder_channels=(2, 4, 8, 16, 32),
                   delta_hidden=4, delta_channels=2, delta_mode=delta_mode)

    @classmethod
    def preset(cls, name: str, delta_mode: DeltaMode = DeltaMode.SCALAR) -> 'NetworkConfig':
        presets = {'desk': cls.desk, 'full': cls.full, 'tiny': cls.tiny}
        if name not in presets:
            raise ConfigError(f"Unknown network preset '{name}'")
        return presets[name](delta_mode)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'NetworkConfig':
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values['encoder_channels'] = list(self.encoder_channels)
        values['delta_mode'] = self.delta_mode.value
        return values


@dataclass
class ModelParams:
    """Learnable tensors of the encoder (theta), delta branch (omega) and decoder (beta)."""

    config: NetworkConfig
    tensors: Dict[str, np.ndarray]
    adam_states: Dict[str, AdamState] = field(default_factory=dict)
    seed: Optional[int] = None
    init_scheme: str = INIT_SCHEME

    def __post_init__(self):
        if not self.adam_states:
            self.adam_states = {name: AdamState.zeros_like(t) for name, t in self.tensors.items()}

    def _branch(self, prefix: str) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith(prefix + '.')}

    @property
    def encoder_weights(self) -> Dict[str, np.ndarray]:
        return self._branch('encoder')

    @property
    def delta_weights(self) -> Dict[str, np.ndarray]:
        return self._branch('delta')

    @property
    def decoder_weights(self) -> Dict[str, np.ndarray]:
        return self._branch('decoder')

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    @property
    def variant(self) -> Variant:
        return Variant.FORWARD if self.config.delta_mode is DeltaMode.SCALAR else Variant.BACKWARD

    def copy(self) -> 'ModelParams':
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()},
                           dict(self.adam_states), self.seed, self.init_scheme)


def param_shapes(config: NetworkConfig) -> Dict[str, Tuple[int, ...]]:
    """Every tensor shape, in the canonical (initialisation and serialisation) order."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    for i, spec in enumerate(config.encoder_specs()):
        shapes[f'encoder.{i}.weight'] = spec.conv_weight_shape
        shapes[f'encoder.{i}.bias'] = (spec.out_channels,)
    widths = [config.delta_mode.width, config.delta_hidden, config.delta_output_size]
    for i, (n, m) in enumerate(zip(widths, widths[1:])):
        shapes[f'delta.{i}.weight'] = (m, n)
        shapes[f'delta.{i}.bias'] = (m,)
    for i, spec in enumerate(config.decoder_specs()):
        shapes[f'decoder.{i}.weight'] = spec.tconv_weight_shape
        shapes[f'decoder.{i}.bias'] = (spec.out_channels,)
    return shapes


def build(config: NetworkConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Glorot-uniform weights, zero biases; bit-identical for equal seeds."""
    rng = np.random.default_rng(seed)
    tensors: Dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith('.bias'):
            tensors[name] = np.zeros(shape, dtype=dtype)
        elif name.startswith('delta'):
            tensors[name] = layers.glorot_uniform(shape, shape[1], shape[0], rng, dtype)
        else:
            receptive = shape[2] * shape[3]
            fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
            tensors[name] = layers.glorot_uniform(shape, fan_in, fan_out, rng, dtype)
    logger.debug("Built %s parameters (%d tensors, seed %d)", config.delta_mode.value,
                 len(tensors), seed)
    return ModelParams(config, tensors, seed=seed)


class WearNet:
    """Batched forward and backward passes over a ``ModelParams`` set."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.config = params.config
        self.encoder_specs = self.config.encoder_specs()
        self.decoder_specs = self.config.decoder_specs()

    def _t(self, name: str) -> np.ndarray:
        return self.params.tensors[name]

    def encode_delta_batch(self, deltas: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """Delta features (N, width) -> delta map (N, delta_channels, h5, w5)."""
        width = self.config.delta_mode.width
        if deltas.ndim != 2 or deltas.shape[1] != width:
            raise ShapeError("delta features", ('N', width), deltas.shape)
        d0 = deltas.astype(self.params.dtype, copy=False)
        u1 = layers.dense_forward(d0, self._t('delta.0.weight'), self._t('delta.0.bias'))
        h1 = layers.relu(u1)
        u2 = layers.dense_forward(h1, self._t('delta.1.weight'), self._t('delta.1.bias'))
        h2 = layers.relu(u2)
        h5, w5 = self.config.latent_size
        g = h2.reshape(len(d0), self.config.delta_channels, h5, w5)
        return g, {'d0': d0, 'u1': u1, 'h1': h1, 'u2': u2}

    def forward_batch(self, images: np.ndarray,
                      deltas: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
        """Images (N, 1, H, W) and delta features (N, width) -> predictions (N, 1, H, W)."""
        expected = (len(images), 1, self.config.input_height, self.config.input_width)
        if images.shape != expected:
            raise ShapeError("network input", expected, images.shape)
        if len(deltas) != len(images):
            raise ShapeError("delta batch", (len(images),), (len(deltas),))

        activations = [images.astype(self.params.dtype, copy=False)]
        encoder_pre = []
        for i, spec in enumerate(self.encoder_specs):
            z = layers.conv2d_forward(activations[-1], spec, self._t(f'encoder.{i}.weight'),
                                      self._t(f'encoder.{i}.bias'))
            encoder_pre.append(z)
            activations.append(layers.relu(z))

        g, delta_cache = self.encode_delta_batch(deltas)
        decoder_inputs = [layers.concat_channels(activations[-1], g)]
        decoder_pre = []
        for j, spec in enumerate(self.decoder_specs):
            y = layers.tconv2d_forward(decoder_inputs[-1], spec, self._t(f'decoder.{j}.weight'),
                                       self._t(f'decoder.{j}.bias'))
            decoder_pre.append(y)
            if j < NUM_LAYERS - 1:
                decoder_inputs.append(layers.relu(y))
        out = layers.sigmoid(decoder_pre[-1])

        cache = {'activations': activations, 'encoder_pre': encoder_pre, 'delta': delta_cache,
                 'decoder_inputs': decoder_inputs, 'decoder_pre': decoder_pre, 'output': out}
        return out, cache

    def backward(self, cache: Dict[str, Any], grad_out: np.ndarray) -> Dict[str, np.ndarray]:
        grads: Dict[str, np.ndarray] = {}

        grad = layers.sigmoid_backward(grad_out, cache['output'])
        for j in reversed(range(NUM_LAYERS)):
            grad, grads[f'decoder.{j}.weight'], grads[f'decoder.{j}.bias'] = \
                layers.tconv2d_backward(grad, cache['decoder_inputs'][j], self.decoder_specs[j],
                                        self._t(f'decoder.{j}.weight'))
            if j > 0:
                grad = layers.relu_backward(grad, cache['decoder_pre'][j - 1])

        grad_latent, grad_g = layers.split_channels(grad, self.config.encoder_channels[-1])

        dc = cache['delta']
        grad_h2 = grad_g.reshape(len(grad_g), -1)
        grad_u2 = layers.relu_backward(grad_h2, dc['u2'])
        grad_h1, grads['delta.1.weight'], grads['delta.1.bias'] = \
            layers.dense_backward(grad_u2, dc['h1'], self._t('delta.1.weight'))
        grad_u1 = layers.relu_backward(grad_h1, dc['u1'])
        _, grads['delta.0.weight'], grads['delta.0.bias'] = \
            layers.dense_backward(grad_u1, dc['d0'], self._t('delta.0.weight'))

        grad = grad_latent
        for i in reversed(range(NUM_LAYERS)):
            grad = layers.relu_backward(grad, cache['encoder_pre'][i])
            grad, grads[f'encoder.{i}.weight'], grads[f'encoder.{i}.bias'] = \
                layers.conv2d_backward(grad, cache['activations'][i], self.encoder_specs[i],
                                       self._t(f'encoder.{i}.weight'))
        return {name: grads[name] for name in self.params.tensors}

    def predict(self, image: Image, delta: DeltaEncoding) -> Image:
        if delta.mode is not self.config.delta_mode:
            raise DeltaEncodingError(
                f"Model expects {self.config.delta_mode.value} deltas, got {delta.mode.value}")
        expected = (self.config.input_height, self.config.input_width)
        if image.shape != expected:
            raise ShapeError("input image", expected, image.shape)
        x = image.pixels[None, None]
        d = delta.features(self.params.dtype)[None]
        out, _ = self.forward_batch(x, d)
        return Image(out[0, 0].astype(np.float64), week=_output_week(image, delta),
                     side=image.side)


def _output_week(image: Image, delta: DeltaEncoding) -> Optional[int]:
    if delta.mode is DeltaMode.ONEHOT52:
        return delta.target_week
    if image.week is None:
        return None
    return image.week + delta.scalar_value


def forward(params: ModelParams, image: Image, delta: DeltaEncoding) -> Image:
    return WearNet(params).predict(image, delta)


def encode_delta(delta: DeltaEncoding, params: ModelParams) -> np.ndarray:
    """Delta map (delta_channels, h5, w5) for a single encoding."""
    if delta.mode is not params.config.delta_mode:
        raise DeltaEncodingError(
            f"Model expects {params.config.delta_mode.value} deltas, got {delta.mode.value}")
    g, _ = WearNet(params).encode_delta_batch(delta.features(params.dtype)[None])
    return g[0]


def stack_inputs(images: Sequence[Image], deltas: Sequence[DeltaEncoding],
                 dtype=np.float32) -> Tuple[np.ndarray, np.ndarray]:
    x = np.stack([img.pixels for img in images])[:, None].astype(dtype)
    d = np.stack([delta.features(dtype) for delta in deltas])
    return x, d
