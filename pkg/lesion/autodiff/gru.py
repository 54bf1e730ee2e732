"""
GRU bidimensional: recurrencia a lo largo de un eje espacial de un mapa 2D.

Las filas (S→I, I→S) o las columnas (A→P, P→A) forman la secuencia y cada
posición del otro eje se procesa como un elemento más del lote. En cada
paso se emite el estado oculto, de modo que la salida conserva la
resolución de la entrada.

Parámetros empaquetados por dirección: W [C, 3H], U [H, 3H], b [3H] con
las columnas en el orden (actualización z, reinicio r, candidato n):

    z = σ(x·Wz + h·Uz + bz)
    r = σ(x·Wr + h·Ur + br)
    n = tanh(x·Wn + (r ⊙ h)·Un + bn)
    h' = z ⊙ h + (1 − z) ⊙ n
"""

from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.special import expit

from lesion.autodiff.graph import Function, Value
from lesion.autodiff.ops import add, concat_channels
from lesion.exceptions import ShapeError, ValidationError

DIRECTIONS = ('si', 'is', 'ap', 'pa')
DIRECTION_ALIASES = {
    'S→I': 'si', 'I→S': 'is', 'A→P': 'ap', 'P→A': 'pa',
    'S->I': 'si', 'I->S': 'is', 'A->P': 'ap', 'P->A': 'pa',
}
GRU_MERGES = ('sum', 'concat')


def normalize_direction(direction: str) -> str:
    key = DIRECTION_ALIASES.get(direction, direction)
    if key not in DIRECTIONS:
        raise ValidationError(f"Dirección de GRU desconocida: {direction}", error_code="BAD_DIRECTION")
    return key


def _to_sequence(x: np.ndarray, direction: str) -> np.ndarray:
    b, c, h, w = x.shape
    if direction in ('si', 'is'):
        seq = x.transpose(2, 0, 3, 1).reshape(h, b * w, c)
    else:
        seq = x.transpose(3, 0, 2, 1).reshape(w, b * h, c)
    return seq[::-1] if direction in ('is', 'pa') else seq


def _from_sequence(seq: np.ndarray, direction: str, shape: Tuple[int, int, int, int]) -> np.ndarray:
    b, _, h, w = shape
    if direction in ('is', 'pa'):
        seq = seq[::-1]
    channels = seq.shape[-1]
    if direction in ('si', 'is'):
        return seq.reshape(h, b, w, channels).transpose(1, 3, 0, 2)
    return seq.reshape(w, b, h, channels).transpose(1, 3, 2, 0)


class GRU2D(Function):
    def forward(self, x, w, u, bias, direction='si'):
        direction = normalize_direction(direction)
        hidden = u.shape[0]
        if x.ndim != 4:
            raise ShapeError("gru2d espera x [B,C,H,W]", error_code="GRU_RANK")
        if w.shape != (x.shape[1], 3 * hidden) or u.shape != (hidden, 3 * hidden) or bias.shape != (3 * hidden,):
            raise ShapeError("Parámetros de GRU incompatibles con la entrada", error_code="GRU_PARAMS",
                             details={'x': list(x.shape), 'W': list(w.shape), 'U': list(u.shape)})

        seq = _to_sequence(x, direction)
        steps, lanes, _ = seq.shape
        h = np.zeros((lanes, hidden), dtype=x.dtype)
        projected = seq @ w + bias
        u_zr, u_n = u[:, :2 * hidden], u[:, 2 * hidden:]
        outputs = np.empty((steps, lanes, hidden), dtype=x.dtype)
        cache = []
        for t in range(steps):
            gates = expit(projected[t, :, :2 * hidden] + h @ u_zr)
            z, r = gates[:, :hidden], gates[:, hidden:]
            rh = r * h
            n = np.tanh(projected[t, :, 2 * hidden:] + rh @ u_n)
            cache.append((h, z, r, n, rh))
            h = z * h + (1 - z) * n
            outputs[t] = h

        self.saved = (seq, w, u, direction, x.shape, cache)
        return _from_sequence(outputs, direction, x.shape)

    def backward(self, grad):
        seq, w, u, direction, shape, cache = self.saved
        hidden = u.shape[0]
        u_z, u_r, u_n = u[:, :hidden], u[:, hidden:2 * hidden], u[:, 2 * hidden:]
        grad_seq = _to_sequence(grad, direction)

        grad_w = np.zeros_like(w)
        grad_u = np.zeros_like(u)
        grad_b = np.zeros(3 * hidden, dtype=grad.dtype)
        grad_x = np.empty_like(seq)
        carry = np.zeros_like(grad_seq[0])
        for t in range(len(cache) - 1, -1, -1):
            h_prev, z, r, n, rh = cache[t]
            dh = grad_seq[t] + carry
            dn_pre = dh * (1 - z) * (1 - n * n)
            dz_pre = dh * (h_prev - n) * z * (1 - z)
            d_rh = dn_pre @ u_n.T
            dr_pre = d_rh * h_prev * r * (1 - r)

            grad_u[:, :hidden] += h_prev.T @ dz_pre
            grad_u[:, hidden:2 * hidden] += h_prev.T @ dr_pre
            grad_u[:, 2 * hidden:] += rh.T @ dn_pre
            d_pre = np.concatenate([dz_pre, dr_pre, dn_pre], axis=1)
            grad_w += seq[t].T @ d_pre
            grad_b += d_pre.sum(axis=0)
            grad_x[t] = d_pre @ w.T
            carry = dh * z + d_rh * r + dz_pre @ u_z.T + dr_pre @ u_r.T

        return _from_sequence(grad_x, direction, shape), grad_w, grad_u, grad_b


def gru2d(x, params: Sequence, direction: str) -> Value:
    """Aplica la GRU en una dirección; ``params`` = (W, U, b)."""
    w, u, b = params
    return GRU2D.apply(x, w, u, b, direction=normalize_direction(direction))


def four_dir_gru(x, params: Dict[str, Sequence], merge: str = 'sum') -> Value:
    """
    Ejecuta la GRU en las cuatro direcciones con parámetros propios.

    Con ``merge='sum'`` la salida tiene H canales; con ``'concat'``, 4H.
    """
    if merge not in GRU_MERGES:
        raise ValidationError(f"Modo de fusión de GRU desconocido: {merge}", error_code="BAD_GRU_MERGE")
    outputs = [gru2d(x, params[direction], direction) for direction in DIRECTIONS]
    if merge == 'concat':
        return concat_channels(outputs)
    total = outputs[0]
    for out in outputs[1:]:
        total = add(total, out)
    return total
