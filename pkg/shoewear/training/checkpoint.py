"""Binary checkpoint format.

Layout (all integers little-endian)::

    magic  b'SHWR'
    u16    format version
    u32    header length, followed by the UTF-8 JSON header
    u32    tensor count, then per tensor:
           u16 name length, name, u8 dtype code, u8 ndim, u32 * ndim dims, raw data
    32 B   SHA-256 of everything above

The header self-describes the network and experiment configs, their digest, the
seed, the initialisation scheme and how Delta t is scaled. Adam moments travel as
``adam.m.<name>`` / ``adam.v.<name>`` tensors with step counts in the header.
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from shoewear.engine.optim import AdamState
from shoewear.errors import (CheckpointError, CheckpointVersionError, ChecksumError,
                             VariantMismatchError)
from shoewear.model.delta import SCALAR_SCALE, DeltaMode, Variant
from shoewear.model.wear_net import ModelParams, NetworkConfig, param_shapes
from shoewear.training.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

MAGIC = b'SHWR'
FORMAT_VERSION = 1
DIGEST_SIZE = 32
DTYPE_CODES = {np.dtype('<f4'): 0, np.dtype('<f8'): 1}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}


def config_digest(network: NetworkConfig, experiment: ExperimentConfig) -> str:
    canonical = json.dumps({'network': network.to_dict(), 'experiment': experiment.to_dict()},
                           sort_keys=True)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _delta_scaling(mode: DeltaMode) -> str:
    return f'divide_by_{int(SCALAR_SCALE)}' if mode is DeltaMode.SCALAR else 'onehot52_slot_week_div_2'


def _pack_tensor(name: str, array: np.ndarray) -> bytes:
    dtype = array.dtype.newbyteorder('<')
    if dtype not in DTYPE_CODES:
        raise CheckpointError(f"Unsupported tensor dtype {array.dtype} for '{name}'")
    encoded = name.encode('utf-8')
    parts = [struct.pack('<H', len(encoded)), encoded,
             struct.pack('<BB', DTYPE_CODES[dtype], array.ndim),
             struct.pack(f'<{array.ndim}I', *array.shape),
             np.ascontiguousarray(array, dtype=dtype).tobytes()]
    return b''.join(parts)


def save_checkpoint(params: ModelParams, config: ExperimentConfig,
                    path: Union[str, Path]) -> None:
    header = {
        'variant': params.variant.value,
        'network': params.config.to_dict(),
        'experiment': config.to_dict(),
        'config_digest': config_digest(params.config, config),
        'seed': params.seed,
        'init_scheme': params.init_scheme,
        'delta_scaling': _delta_scaling(params.config.delta_mode),
        'adam_steps': {name: s.step_count for name, s in params.adam_states.items()},
        'adam_hyper': {name: [s.beta1, s.beta2, s.epsilon]
                       for name, s in params.adam_states.items()},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')

    tensors = dict(params.tensors)
    for name, state in params.adam_states.items():
        tensors[f'adam.m.{name}'] = state.first_moment
        tensors[f'adam.v.{name}'] = state.second_moment

    body = b''.join([MAGIC, struct.pack('<HI', FORMAT_VERSION, len(header_bytes)), header_bytes,
                     struct.pack('<I', len(tensors))]
                    + [_pack_tensor(name, array) for name, array in tensors.items()])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(body + hashlib.sha256(body).digest())
    logger.debug("Wrote checkpoint %s (%d bytes)", path, len(body) + DIGEST_SIZE)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CheckpointError("Checkpoint body ended unexpectedly")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: Union[str, Path], expected_variant: Optional[Variant] = None
                    ) -> Tuple[ModelParams, ExperimentConfig]:
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < len(MAGIC) + DIGEST_SIZE:
        raise ChecksumError(f"Checkpoint {path} is truncated ({len(data)} bytes)")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError(f"Checkpoint {path} failed its checksum (truncated or corrupted)")

    reader = _Reader(body)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path} is not a shoewear checkpoint")
    version, header_len = reader.unpack('<HI')
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"Checkpoint version {version} is not supported (expected {FORMAT_VERSION})")
    header = json.loads(reader.take(header_len).decode('utf-8'))

    variant = Variant.parse(header['variant'])
    if expected_variant is not None and variant is not Variant.parse(expected_variant):
        raise VariantMismatchError(
            f"Checkpoint holds a {variant.value} model, {Variant.parse(expected_variant).value} "
            f"was requested")

    tensors: Dict[str, np.ndarray] = {}
    (count,) = reader.unpack('<I')
    for _ in range(count):
        (name_len,) = reader.unpack('<H')
        name = reader.take(name_len).decode('utf-8')
        code, ndim = reader.unpack('<BB')
        if code not in CODE_DTYPES:
            raise CheckpointError(f"Unknown dtype code {code} for tensor '{name}'")
        shape = reader.unpack(f'<{ndim}I')
        dtype = CODE_DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        tensors[name] = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape).astype(
            dtype.newbyteorder('='))

    network = NetworkConfig.from_dict(header['network'])
    experiment = ExperimentConfig.from_dict(header['experiment'])
    if header['config_digest'] != config_digest(network, experiment):
        raise CheckpointError("Checkpoint config digest does not match its header")

    params_tensors = {}
    for name, shape in param_shapes(network).items():
        if name not in tensors or tensors[name].shape != tuple(shape):
            raise CheckpointError(f"Checkpoint tensor '{name}' is missing or misshapen")
        params_tensors[name] = tensors[name]
    adam_states = {}
    for name in params_tensors:
        beta1, beta2, epsilon = header['adam_hyper'][name]
        adam_states[name] = AdamState(tensors[f'adam.m.{name}'], tensors[f'adam.v.{name}'],
                                      header['adam_steps'][name], beta1, beta2, epsilon)
    params = ModelParams(network, params_tensors, adam_states, header['seed'],
                         header['init_scheme'])
    return params, experiment
