"""Remuestreo trilineal con muestreo alineado a las esquinas."""

from typing import Sequence

import numpy as np
from scipy import ndimage

from lesion.exceptions import ValidationError
from lesion.io.tensor import Tensor, Volume3D, Volume4D


def _axis_positions(n_in: int, n_out: int) -> np.ndarray:
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))


def _resize_array(array: np.ndarray, target: Sequence[int]) -> np.ndarray:
    positions = [_axis_positions(n_in, n_out) for n_in, n_out in zip(array.shape, target)]
    coords = np.stack(np.meshgrid(*positions, indexing='ij'))
    return ndimage.map_coordinates(array.astype(np.float64), coords, order=1, mode='nearest')


def resize_trilinear(volume, target_dims: Sequence[int]):
    """
    Remuestrea un Volume3D (o cada adquisición de un Volume4D) a ``target_dims``.

    La primera y la última muestra de cada eje coinciden con las del volumen
    original; el espaciado se escala por el cociente de dimensiones.
    """
    target = tuple(int(d) for d in target_dims)
    if len(target) != 3 or any(d < 1 for d in target):
        raise ValidationError(f"Dimensiones destino inválidas: {target}", error_code="BAD_TARGET")

    array = volume.array
    spatial = array.shape[-3:]
    spacing = tuple(s * n_in / n_out for s, n_in, n_out in zip(volume.spacing, spatial, target))

    if isinstance(volume, Volume4D):
        resized = np.stack([_resize_array(frame, target) for frame in array])
        return Volume4D(Tensor(resized.astype(array.dtype)), spacing, volume.dt)
    resized = _resize_array(array, target)
    return Volume3D(Tensor(resized.astype(array.dtype)), spacing)
