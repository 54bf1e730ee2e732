"""Preprocesado de casos: remuestreo, recorte, escalado y parches."""

from .intensity import clip_map, scale_linear
from .patches import (
    Patch,
    PreprocConfig,
    PreprocessedCase,
    brain_mask,
    extract_patches,
    preprocess_case,
    stack_patches,
)
from .resample import resize_trilinear

__all__ = [
    'Patch',
    'PreprocConfig',
    'PreprocessedCase',
    'brain_mask',
    'clip_map',
    'extract_patches',
    'preprocess_case',
    'resize_trilinear',
    'scale_linear',
    'stack_patches',
]
