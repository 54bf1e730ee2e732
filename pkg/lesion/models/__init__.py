"""Arquitecturas de segmentación: U-Net + GRU bidimensional en una o dos ramas."""

from .config import MODEL_KINDS, ArchConfig, normalize_kind
from .networks import (
    ModelSpec,
    build_branched,
    build_data_driven_branch,
    build_model,
    build_single_branch,
    build_standard_branch,
    expected_parameter_count,
    extract_features,
    forward,
    trunk_parameter_counts,
)
from .unet import UNet, build_unet

__all__ = [
    'MODEL_KINDS',
    'ArchConfig',
    'ModelSpec',
    'UNet',
    'build_branched',
    'build_data_driven_branch',
    'build_model',
    'build_single_branch',
    'build_standard_branch',
    'build_unet',
    'expected_parameter_count',
    'extract_features',
    'forward',
    'normalize_kind',
    'trunk_parameter_counts',
]
