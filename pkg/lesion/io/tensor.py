"""
Contenedores de datos de imagen: tensores densos y volúmenes con espaciado.

Todos los tipos son inmutables tras la construcción (los arrays se marcan como
de solo lectura) y pueden compartirse entre hilos.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from lesion.exceptions import MaskError, RankError, ShapeError, ValidationError

MAX_RANK = 5
SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# Mapas estándar en el orden canónico de canales
MAP_NAMES = ('rCBF', 'rCBV', 'MTT', 'TTP', 'Tmax', 'ADC')


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Tensor:
    """Array N-dimensional (hasta 5 ejes) en orden row-major, precisión simple o doble."""

    data: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.data)
        if array.dtype not in SUPPORTED_DTYPES:
            array = array.astype(np.float32)
        if not 1 <= array.ndim <= MAX_RANK:
            raise RankError(f"Rango {array.ndim} fuera de [1, {MAX_RANK}]", error_code="BAD_RANK")
        if any(extent < 1 for extent in array.shape):
            raise ShapeError(f"Extensiones deben ser >= 1: {array.shape}", error_code="EMPTY_AXIS")
        if array is self.data and array.flags.writeable:
            array = array.copy()
        object.__setattr__(self, 'data', _frozen(array))

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(int(d) for d in self.data.shape)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def rank(self) -> int:
        return self.data.ndim

    def flat_index(self, *index: int) -> int:
        """Índice lineal row-major (el último eje varía más rápido)."""
        if len(index) != self.rank:
            raise ShapeError(f"Se esperaban {self.rank} índices, recibidos {len(index)}")
        return int(np.ravel_multi_index(index, self.dims))

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.dtype == other.dtype
            and self.data.tobytes() == other.data.tobytes()
        )

    __hash__ = None


def _check_spacing(spacing) -> Tuple[float, float, float]:
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or any(not s > 0 for s in spacing):
        raise ValidationError(f"Espaciado inválido: {spacing}", error_code="BAD_SPACING")
    return spacing


@dataclass(frozen=True)
class Volume3D:
    """Campo escalar (Z, Y, X) con espaciado en milímetros."""

    tensor: Tensor
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not isinstance(self.tensor, Tensor):
            object.__setattr__(self, 'tensor', Tensor(self.tensor))
        if self.tensor.rank != 3:
            raise RankError(f"Volume3D requiere 3 ejes, recibidos {self.tensor.rank}", error_code="BAD_RANK")
        object.__setattr__(self, 'spacing', _check_spacing(self.spacing))

    @property
    def array(self) -> np.ndarray:
        return self.tensor.data

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.tensor.dims


@dataclass(frozen=True)
class Volume4D:
    """Serie temporal (T, Z, Y, X) con espaciado en mm e intervalo de adquisición en segundos."""

    tensor: Tensor
    spacing: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    dt: float = 1.0

    def __post_init__(self):
        if not isinstance(self.tensor, Tensor):
            object.__setattr__(self, 'tensor', Tensor(self.tensor))
        if self.tensor.rank != 4:
            raise RankError(f"Volume4D requiere 4 ejes, recibidos {self.tensor.rank}", error_code="BAD_RANK")
        if self.tensor.dims[0] < 2:
            raise RankError("Volume4D requiere al menos 2 adquisiciones", error_code="SHORT_SERIES")
        object.__setattr__(self, 'spacing', _check_spacing(self.spacing))
        if not float(self.dt) > 0:
            raise ValidationError(f"dt debe ser positivo: {self.dt}", error_code="BAD_DT")
        object.__setattr__(self, 'dt', float(self.dt))

    @property
    def array(self) -> np.ndarray:
        return self.tensor.data

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return self.tensor.dims

    @property
    def spatial_dims(self) -> Tuple[int, int, int]:
        return self.tensor.dims[1:]


def volume_like(array: np.ndarray, reference) -> 'Volume3D | Volume4D':
    """Crea un volumen con el mismo espaciado (y dt) que ``reference``."""
    if isinstance(reference, Volume4D) and np.ndim(array) == 4:
        return Volume4D(Tensor(array), reference.spacing, reference.dt)
    return Volume3D(Tensor(array), reference.spacing)


@dataclass(frozen=True)
class CaseBundle:
    """Un caso: PWI 4D cruda, los seis mapas estándar y la máscara de lesión opcional."""

    case_id: str
    pwi: Volume4D
    maps: Dict[str, Volume3D] = field(default_factory=dict)
    lesion_gt: Optional[Volume3D] = None

    def __post_init__(self):
        missing = [name for name in MAP_NAMES if name not in self.maps]
        if missing:
            raise ValidationError(f"Faltan mapas: {missing}", error_code="MISSING_MAPS",
                                  details={'case_id': self.case_id})
        reference = self.maps[MAP_NAMES[0]]
        others = [self.maps[name] for name in MAP_NAMES[1:]]
        if self.lesion_gt is not None:
            others.append(self.lesion_gt)
        for volume in others:
            if volume.dims != reference.dims or volume.spacing != reference.spacing:
                raise ShapeError(
                    "Mapas y máscara deben compartir dimensiones y espaciado",
                    error_code="MAP_MISMATCH",
                    details={'case_id': self.case_id},
                )

    @property
    def map_dims(self) -> Tuple[int, int, int]:
        return self.maps[MAP_NAMES[0]].dims

    def map_stack(self) -> np.ndarray:
        """Mapas apilados (6, Z, Y, X) en el orden canónico."""
        return np.stack([self.maps[name].array for name in MAP_NAMES])


def require_nonempty(mask: np.ndarray, what: str = 'máscara') -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise MaskError(f"La {what} está vacía", error_code="EMPTY_MASK")
    return mask
