"""
Pérdida soft-dice y su gradiente analítico.

Para probabilidades p y etiquetas g de una muestra:

    Dice = (2·Σ pᵢgᵢ + ε) / (Σ pᵢ² + Σ gᵢ² + ε)

    ∂Dice/∂pⱼ = 2·[gⱼ·D − 2·pⱼ·(Σ pᵢgᵢ + ε/2)] / D²,   D = Σ pᵢ² + Σ gᵢ² + ε

La expresión publicada habitualmente para este gradiente omite el factor 2
inicial; :func:`printed_dice_gradient` la conserva tal cual para auditarla.
"""

from typing import Tuple

import numpy as np

from lesion.autodiff.graph import Function, Value
from lesion.exceptions import ShapeError

DICE_EPS = 1e-6


def _per_sample(p: np.ndarray) -> np.ndarray:
    """Vista (B, N): el eje 0 es el lote salvo para vectores 1D (una sola muestra)."""
    return p.reshape(1, -1) if p.ndim <= 1 else p.reshape(p.shape[0], -1)


def dice_terms(p: np.ndarray, g: np.ndarray, eps: float = DICE_EPS):
    p2, g2 = _per_sample(p), _per_sample(g)
    overlap = (p2 * g2).sum(axis=1)
    denominator = (p2 * p2).sum(axis=1) + (g2 * g2).sum(axis=1) + eps
    dice = (2 * overlap + eps) / denominator
    return dice, overlap, denominator


def soft_dice_gradient(p, g, eps: float = DICE_EPS) -> np.ndarray:
    """∂Dice/∂p por muestra, con la misma forma que ``p``."""
    p = np.asarray(p)
    if p.dtype not in (np.float32, np.float64):
        p = p.astype(np.float64)
    g = np.asarray(g, dtype=p.dtype)
    _, overlap, denominator = dice_terms(p, g, eps)
    p2, g2 = _per_sample(p), _per_sample(g)
    numerator = g2 * denominator[:, None] - p2 * (2 * overlap + eps)[:, None]
    return (2 * numerator / (denominator ** 2)[:, None]).reshape(p.shape)


def printed_dice_gradient(p, g) -> np.ndarray:
    """Gradiente tal como suele publicarse, sin el factor 2 ni suavizado."""
    p = np.asarray(p, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    p2, g2 = _per_sample(p), _per_sample(g)
    denominator = (p2 * p2).sum(axis=1) + (g2 * g2).sum(axis=1)
    overlap = (p2 * g2).sum(axis=1)
    numerator = g2 * denominator[:, None] - 2 * p2 * overlap[:, None]
    return (numerator / (denominator ** 2)[:, None]).reshape(p.shape)


class SoftDiceLoss(Function):
    """Media sobre el lote de (1 − Dice); las etiquetas no reciben gradiente."""

    def forward(self, p, g, eps=DICE_EPS):
        if p.shape != g.shape:
            raise ShapeError(f"soft_dice requiere formas iguales: {p.shape} vs {g.shape}",
                             error_code="DICE_MISMATCH")
        if p.size == 0:
            raise ShapeError("soft_dice requiere al menos un vóxel", error_code="DICE_EMPTY")
        dice, _, _ = dice_terms(p, g, eps)
        self.saved = (p, g, eps, len(dice))
        self.dice = dice
        return np.asarray(np.mean(1 - dice), dtype=p.dtype)

    def backward(self, grad):
        p, g, eps, batch = self.saved
        return -grad * soft_dice_gradient(p, g, eps) / batch, None


def soft_dice(p, g, eps: float = DICE_EPS) -> Tuple[float, Value]:
    """
    Devuelve (Dice medio, pérdida) para probabilidades ``p`` y etiquetas ``g``.

    Dos máscaras vacías dan Dice 1 y pérdida 0 por el suavizado ε.
    """
    g_array = g.data if isinstance(g, Value) else np.asarray(g)
    p_dtype = getattr(p, 'dtype', np.asarray(p).dtype)
    loss = SoftDiceLoss.apply(p, g_array.astype(p_dtype, copy=False), eps=eps)
    return float(np.mean(loss.ctx.dice if loss.ctx is not None else 1 - loss.data)), loss
