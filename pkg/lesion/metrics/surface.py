"""
Distancias de superficie en milímetros.

La superficie de una máscara son sus vóxeles con algún 6-vecino fuera de
ella; los vóxeles del borde del volumen cuentan como superficie.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy.ndimage import binary_erosion, distance_transform_edt, generate_binary_structure

from lesion.exceptions import ShapeError, UndefinedDistanceError


def surface(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    footprint = generate_binary_structure(mask.ndim, 1)
    return mask & ~binary_erosion(mask, structure=footprint, iterations=1, border_value=0)


def surface_distances(a, b, spacing: Sequence[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Distancias de ∂a a ∂b y de ∂b a ∂a."""
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeError(f"Máscaras de formas distintas: {a.shape} vs {b.shape}", error_code="MASK_MISMATCH")
    if not a.any() or not b.any():
        raise UndefinedDistanceError("Distancia indefinida con una máscara vacía", error_code="EMPTY_MASK")
    sampling = None if spacing is None else np.asarray(spacing, dtype=np.float64)
    border_a, border_b = surface(a), surface(b)
    to_b = distance_transform_edt(~border_b, sampling=sampling)[border_a]
    to_a = distance_transform_edt(~border_a, sampling=sampling)[border_b]
    return to_b, to_a


def hausdorff(a, b, spacing: Sequence[float] = None) -> float:
    to_b, to_a = surface_distances(a, b, spacing)
    return float(max(to_b.max(), to_a.max()))


def assd(a, b, spacing: Sequence[float] = None) -> float:
    to_b, to_a = surface_distances(a, b, spacing)
    return float((to_b.sum() + to_a.sum()) / (len(to_b) + len(to_a)))
