"""Métricas de solapamiento sobre máscaras binarias."""

import numpy as np

from lesion.exceptions import ShapeError

DEFAULT_THRESHOLD = 0.5


def binarize(prob, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Máscara ``prob > threshold`` (un valor igual al umbral queda fuera)."""
    return np.asarray(prob) > threshold


def _pair(a, b):
    a, b = np.asarray(a, dtype=bool), np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeError(f"Máscaras de formas distintas: {a.shape} vs {b.shape}", error_code="MASK_MISMATCH")
    return a, b, int(np.count_nonzero(a & b))


def _ratio(numerator: int, denominator: int, both_empty: bool) -> float:
    if denominator == 0:
        return 1.0 if both_empty else 0.0
    return numerator / denominator


def dice_binary(a, b) -> float:
    """2|a∩b| / (|a|+|b|); dos máscaras vacías dan 1."""
    a, b, overlap = _pair(a, b)
    total = int(a.sum() + b.sum())
    return 1.0 if total == 0 else 2.0 * overlap / total


def precision(a, b) -> float:
    """|a∩b| / |a| con ``a`` la predicción."""
    a, b, overlap = _pair(a, b)
    return _ratio(overlap, int(a.sum()), not a.any() and not b.any())


def recall(a, b) -> float:
    """|a∩b| / |b| con ``b`` la verdad."""
    a, b, overlap = _pair(a, b)
    return _ratio(overlap, int(b.sum()), not a.any() and not b.any())
