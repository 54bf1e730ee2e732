"""
Información mutua normalizada entre mapas aprendidos y mapas estándar.

NMI = 2·I(X;Y) / (H(X) + H(Y)) con histogramas de ``bins`` intervalos de
igual anchura sobre el rango observado de cada variable (entropías en nats).
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from lesion.exceptions import ModelKindError, ShapeError, ValidationError
from lesion.io.tensor import MAP_NAMES, require_nonempty

DEFAULT_BINS = 64


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def nmi(x, y, bins: int = DEFAULT_BINS) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if int(bins) < 1:
        raise ValidationError(f"bins debe ser >= 1: {bins}", error_code="BAD_BINS")
    if x.size != y.size:
        raise ShapeError(f"Muestras de distinta longitud: {x.size} vs {y.size}", error_code="NMI_MISMATCH")
    if x.size == 0:
        raise ShapeError("NMI requiere al menos una muestra", error_code="NMI_EMPTY")

    def edges(values):
        lo, hi = values.min(), values.max()
        return (lo, hi) if hi > lo else (lo - 0.5, hi + 0.5)

    joint, _, _ = np.histogram2d(x, y, bins=bins, range=[edges(x), edges(y)])
    pxy = joint / x.size
    px, py = pxy.sum(axis=1), pxy.sum(axis=0)
    hx, hy = _entropy(px), _entropy(py)
    if hx + hy == 0:
        return 0.0
    nz = pxy > 0
    mutual = float((pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])).sum())
    return float(np.clip(2.0 * mutual / (hx + hy), 0.0, 1.0))


@dataclass(frozen=True)
class NmiMatrix:
    rows: Tuple[str, ...]
    columns: Tuple[str, ...]
    values: np.ndarray
    bins: int

    @property
    def shape(self):
        return self.values.shape

    def as_rows(self) -> List[List]:
        return [[name] + [float(v) for v in row] for name, row in zip(self.rows, self.values)]


def nmi_matrix(features: Sequence[Tuple[str, np.ndarray]], maps: Dict[str, np.ndarray], mask,
               bins: int = DEFAULT_BINS) -> NmiMatrix:
    """NMI de cada característica contra cada mapa estándar sobre la máscara."""
    mask = require_nonempty(mask, 'máscara cerebral')
    values = np.zeros((len(features), len(MAP_NAMES)))
    for i, (_, feature) in enumerate(features):
        feature = np.asarray(feature)
        if feature.shape != mask.shape:
            raise ShapeError("Característica y máscara con formas distintas", error_code="NMI_MISMATCH")
        for j, name in enumerate(MAP_NAMES):
            values[i, j] = nmi(feature[mask], np.asarray(maps[name])[mask], bins)
    return NmiMatrix(rows=tuple(name for name, _ in features), columns=MAP_NAMES, values=values, bins=bins)


def feature_volume(spec, case, branch: str = 'data_driven') -> List[Tuple[str, np.ndarray]]:
    """Características post-GRU de todos los cortes de un caso preprocesado, (Z, Y, X) cada una."""
    n_pwi = case.channels.shape[0] - len(MAP_NAMES)
    pwi = case.channels[:n_pwi].transpose(1, 0, 2, 3)
    maps = case.channels[n_pwi:].transpose(1, 0, 2, 3)
    inputs = {
        'standard': maps,
        'data_driven': pwi,
        'single': case.channels.transpose(1, 0, 2, 3),
        'branched': (pwi, maps),
    }[spec.kind]
    volume = spec.features(inputs)[branch].data.transpose(1, 0, 2, 3)
    return [(f"feature_{k}", volume[k]) for k in range(volume.shape[0])]


def nmi_report(checkpoint, case, bins: int = DEFAULT_BINS) -> NmiMatrix:
    """
    Matriz NMI de la rama guiada por datos de un modelo ramificado frente a
    los seis mapas estándar del caso.

    Raises:
        ModelKindError: si el checkpoint no es de la red ramificada
    """
    if checkpoint.kind != 'branched':
        raise ModelKindError(f"El análisis NMI requiere un modelo ramificado, recibido {checkpoint.kind}",
                             error_code="NOT_BRANCHED")
    spec = checkpoint.build()
    features = feature_volume(spec, case, 'data_driven')
    n_pwi = case.channels.shape[0] - len(MAP_NAMES)
    maps = {name: case.channels[n_pwi + j] for j, name in enumerate(MAP_NAMES)}
    return nmi_matrix(features, maps, case.brain, bins)
