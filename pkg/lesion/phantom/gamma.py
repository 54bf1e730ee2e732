"""Curva gamma-variate normalizada del paso del bolo de contraste."""

import numpy as np

from lesion.exceptions import ValidationError


def gamma_variate(t, t0: float, alpha: float, beta: float):
    """
    Concentración relativa del bolo en el instante ``t``.

    Vale 0 para t <= t0 y K·(t−t0)^α·exp(−(t−t0)/β) en otro caso, con
    K = (αβ)^(−α)·e^α para que el máximo (en t = t0 + αβ) sea exactamente 1.

    Raises:
        ValidationError: si α o β no son positivos
    """
    if not alpha > 0 or not beta > 0:
        raise ValidationError(
            "Los parámetros alpha y beta deben ser positivos",
            error_code="BAD_GAMMA_PARAMS",
            details={'alpha': alpha, 'beta': beta},
        )
    t_arr = np.asarray(t, dtype=np.float64)
    shifted = t_arr - t0
    out = np.zeros_like(shifted)
    positive = shifted > 0
    s = shifted[positive]
    out[positive] = np.exp(alpha * np.log(s / (alpha * beta)) + alpha - s / beta)
    if np.ndim(t) == 0:
        return float(out)
    return out
