"""
Selección automática de la ventana temporal de la PWI.

El instante de máxima concentración de contraste se detecta agrupando con
k-means (k = 2) los pares (media, desviación) de la señal cerebral de cada
adquisición: un grupo de línea base y otro de paso del bolo. La ventana de
longitud fija se centra en ese instante y se recorta contra los bordes.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from lesion.exceptions import DegenerateSignalError, InsufficientAcquisitionsError, ShapeError, ValidationError
from lesion.io.rng import SeededRng, rng_split
from lesion.io.tensor import Tensor, Volume4D, require_nonempty
from lesion.utils.logging_utils import get_logger

logger = get_logger(__name__)

WINDOW_LENGTH = 26
KMEANS_MAX_ITER = 100
KMEANS_RESTARTS = 4


@dataclass(frozen=True)
class SliceStats:
    mean: np.ndarray
    std: np.ndarray

    def __len__(self):
        return len(self.mean)

    def points(self) -> np.ndarray:
        return np.column_stack([self.mean, self.std])


@dataclass(frozen=True)
class TemporalWindow:
    source_dims: Tuple[int, int, int, int]
    peak_index: int
    start: int
    length: int
    data: Volume4D

    def sidecar(self) -> dict:
        return {'peak_index': self.peak_index, 'start': self.start, 'length': self.length}


def slice_stats(pwi: Volume4D, brain_mask) -> SliceStats:
    """Media y desviación poblacional de la señal dentro de la máscara, por adquisición."""
    mask = np.asarray(getattr(brain_mask, 'array', brain_mask)) > 0
    if mask.shape != pwi.spatial_dims:
        raise ShapeError("La máscara no coincide con la PWI", error_code="MASK_MISMATCH",
                         details={'mask': mask.shape, 'pwi': pwi.spatial_dims})
    require_nonempty(mask, 'máscara cerebral')
    values = pwi.array[:, mask].astype(np.float64)
    return SliceStats(mean=values.mean(axis=1), std=values.std(axis=1))


def _standardize(points: np.ndarray) -> np.ndarray:
    center = points.mean(axis=0)
    scale = points.std(axis=0)
    scale[scale == 0] = 1.0
    return (points - center) / scale


def _plusplus_seeds(z: np.ndarray, k: int, rng: SeededRng) -> np.ndarray:
    n = len(z)
    centroids = np.empty((k, z.shape[1]))
    centroids[0] = z[int(rng.integers(0, n))]
    for i in range(1, k):
        dist_sq = np.min(((z[:, None, :] - centroids[None, :i, :]) ** 2).sum(axis=2), axis=1)
        total = dist_sq.sum()
        probs = dist_sq / total if total > 0 else None
        centroids[i] = z[rng.choice(n, p=probs)]
    return centroids


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int) -> Tuple[np.ndarray, float]:
    k = len(centroids)
    assignments = None
    for _ in range(max_iter):
        distances = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignments = np.argmin(distances, axis=1)
        counts = np.bincount(new_assignments, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # grupo vacío: se resiembra en el punto más lejano de su centroide entre los grupos con más de un punto
            spread = distances[np.arange(len(points)), new_assignments]
            spread[counts[new_assignments] < 2] = -np.inf
            farthest = int(np.argmax(spread))
            counts[new_assignments[farthest]] -= 1
            new_assignments[farthest], counts[j] = j, 1
        if assignments is not None and np.array_equal(assignments, new_assignments):
            break
        assignments = new_assignments
        centroids = np.stack([points[assignments == j].mean(axis=0) for j in range(k)])
    inertia = float(((points - centroids[assignments]) ** 2).sum())
    return assignments, inertia


def kmeans(points, k: int, rng: SeededRng, max_iter: int = KMEANS_MAX_ITER, n_init: int = KMEANS_RESTARTS):
    """
    Lloyd con inicialización k-means++.

    Se lanzan ``n_init`` inicializaciones (sub-flujos ``kmeans++_{i}``) y se
    conserva la de menor inercia; a igualdad gana la primera.

    Returns:
        (asignaciones, centroides) con los centroides como medias de cada grupo.

    Raises:
        ValidationError: k < 1, menos puntos que grupos, max_iter < 1 o n_init < 1
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if k < 1 or len(points) < k:
        raise ValidationError(f"k-means requiere 1 <= k <= n (k={k}, n={len(points)})",
                              error_code="BAD_K")
    if max_iter < 1 or n_init < 1:
        raise ValidationError(f"max_iter y n_init deben ser >= 1 (max_iter={max_iter}, n_init={n_init})",
                              error_code="BAD_ITERATIONS")

    best, best_inertia = None, np.inf
    for i in range(n_init):
        seeds = _plusplus_seeds(points, k, rng_split(rng, f"kmeans++_{i}"))
        assignments, inertia = _lloyd(points, seeds, max_iter)
        if inertia < best_inertia:
            best, best_inertia = assignments, inertia
    centroids = np.stack([points[best == j].mean(axis=0) for j in range(k)])
    return best, centroids


def detect_peak(stats: SliceStats, rng: SeededRng) -> int:
    """
    Índice del pico de concentración (mínimo de intensidad media).

    El grupo del bolo es el que contiene la menor media; dentro de él se toma
    el argmin, con empates resueltos hacia el índice más temprano.
    """
    if len(stats) < 4:
        raise ValidationError("Se necesitan al menos 4 adquisiciones", error_code="SHORT_SERIES",
                              details={'T': len(stats)})
    if np.ptp(stats.mean) == 0:
        raise DegenerateSignalError("Señal plana: no se detecta paso de bolo", error_code="FLAT_SIGNAL")

    # media y desviación estandarizadas
    assignments, _ = kmeans(_standardize(stats.points()), 2, rng)
    group_minima = [stats.mean[assignments == j].min() for j in range(2)]
    bolus = int(np.argmin(group_minima))
    candidates = np.flatnonzero(assignments == bolus)
    return int(candidates[np.argmin(stats.mean[candidates])])


def extract_window(pwi: Volume4D, peak_index: int, length: int = WINDOW_LENGTH) -> TemporalWindow:
    n_t = pwi.dims[0]
    if length < 2:
        raise ValidationError("Una ventana 4D necesita al menos 2 adquisiciones", error_code="BAD_LENGTH")
    if n_t < length:
        raise InsufficientAcquisitionsError(
            f"La PWI tiene {n_t} adquisiciones y la ventana requiere {length}",
            error_code="SHORT_SERIES",
            details={'T': n_t, 'length': length},
        )
    if not 0 <= peak_index < n_t:
        raise ValidationError(f"peak_index fuera de rango: {peak_index}", error_code="BAD_PEAK")
    start = min(max(peak_index - length // 2, 0), n_t - length)
    window = Volume4D(Tensor(pwi.array[start:start + length].copy()), pwi.spacing, pwi.dt)
    logger.info("Ventana temporal extraída", extra={'step': 'extract_window',
                                                    'details': {'peak_index': peak_index, 'start': start,
                                                                'length': length}})
    return TemporalWindow(source_dims=pwi.dims, peak_index=int(peak_index), start=int(start),
                          length=int(length), data=window)
