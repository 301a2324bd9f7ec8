"""The three-branch wear network and its temporal conditioning."""

from .delta import DeltaEncoding, DeltaMode, Variant, slot_to_week, week_to_slot
from .wear_net import (ModelParams, NetworkConfig, WearNet, build, encode_delta, forward,
                       param_shapes, stack_inputs)

__all__ = [
    'DeltaEncoding', 'DeltaMode', 'Variant', 'slot_to_week', 'week_to_slot',
    'ModelParams', 'NetworkConfig', 'WearNet', 'build', 'encode_delta', 'forward',
    'param_shapes', 'stack_inputs',
]
