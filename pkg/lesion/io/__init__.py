"""
Tensores, volúmenes, RNG determinista y formatos de archivo (NIfTI-1 y crudo).
"""

from .nifti import parse_nifti, serialize_nifti
from .raw_format import load_raw, read_raw, save_raw, write_raw
from .rng import SeededRng, rng_split
from .tensor import MAP_NAMES, CaseBundle, Tensor, Volume3D, Volume4D

__all__ = [
    'MAP_NAMES',
    'CaseBundle',
    'SeededRng',
    'Tensor',
    'Volume3D',
    'Volume4D',
    'load_raw',
    'parse_nifti',
    'read_raw',
    'rng_split',
    'save_raw',
    'serialize_nifti',
    'write_raw',
]
