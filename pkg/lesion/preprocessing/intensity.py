"""Recorte a rangos fisiológicos y escalado lineal de intensidades."""

from typing import Optional

import numpy as np

from lesion.exceptions import DegenerateRangeError, ShapeError, ValidationError
from lesion.io.tensor import volume_like


def clip_map(volume, lo: float, hi: float):
    """Recorta cada vóxel a [lo, hi]."""
    if not lo < hi:
        raise ValidationError(f"Rango de recorte vacío: [{lo}, {hi}]", error_code="BAD_CLIP")
    clipped = np.clip(volume.array, lo, hi).astype(volume.array.dtype)
    return volume_like(clipped, volume)


def scale_linear(volume, mask: Optional[np.ndarray] = None, out_lo: float = 0.0, out_hi: float = 255.0):
    """
    Lleva el rango observado [min, max] dentro de la máscara a [out_lo, out_hi].

    Fuera de la máscara el valor es ``out_lo``. En volúmenes 4D el rango se
    calcula conjuntamente sobre todas las adquisiciones.

    Raises:
        DegenerateRangeError: si el volumen es constante dentro de la máscara
    """
    array = volume.array.astype(np.float64)
    spatial = array.shape[-3:]
    mask = np.ones(spatial, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != spatial:
        raise ShapeError("La máscara no coincide con el volumen", error_code="MASK_MISMATCH")

    inside = array[..., mask]
    if inside.size == 0 or not inside.max() > inside.min():
        raise DegenerateRangeError("Volumen constante dentro de la máscara", error_code="CONSTANT_VOLUME")
    lo, hi = inside.min(), inside.max()
    scaled = out_lo + (array - lo) * ((out_hi - out_lo) / (hi - lo))
    scaled = np.where(mask, scaled, out_lo)
    return volume_like(scaled.astype(volume.array.dtype), volume)
