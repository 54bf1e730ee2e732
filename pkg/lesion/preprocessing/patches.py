"""
Cadena de preprocesado por caso y extracción aleatoria de parches 2D.

Orden: remuestreo a ``target_dims``, recorte fisiológico (Tmax, ADC) y
escalado lineal a [0, 255] sobre la máscara cerebral. Los canales de cada
parche son las 26 adquisiciones de la ventana seguidas de los seis mapas.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from lesion.exceptions import DegenerateRangeError, SamplingError, ShapeError, ValidationError
from lesion.io.rng import SeededRng, rng_split
from lesion.io.tensor import MAP_NAMES, CaseBundle, Tensor, Volume3D, Volume4D, require_nonempty
from lesion.preprocessing.intensity import clip_map, scale_linear
from lesion.preprocessing.resample import resize_trilinear
from lesion.utils.logging_utils import get_logger, log_step

logger = get_logger(__name__)


@dataclass(frozen=True)
class PreprocConfig:
    """Parámetros de preprocesado a escala de escritorio; ``reference_scale()`` da los originales."""

    target_dims: Tuple[int, int, int] = (8, 64, 64)
    tmax_clip: Tuple[float, float] = (0.0, 20.0)
    adc_clip: Tuple[float, float] = (0.0, 2600.0)
    scale_range: Tuple[float, float] = (0.0, 255.0)
    patch_size: int = 32
    patches_per_case: int = 64
    window_length: int = 26
    lesion_biased: bool = False
    lesion_fraction: float = 0.5

    @classmethod
    def reference_scale(cls, **overrides) -> 'PreprocConfig':
        values = {'target_dims': (32, 256, 256), 'patch_size': 88, 'patches_per_case': 550}
        values.update(overrides)
        return cls(**values)

    def validate(self) -> 'PreprocConfig':
        problems = []
        if len(self.target_dims) != 3 or any(int(d) < 1 for d in self.target_dims):
            problems.append(f"target_dims inválidas: {self.target_dims}")
        for name in ('tmax_clip', 'adc_clip', 'scale_range'):
            lo, hi = getattr(self, name)
            if not lo < hi:
                problems.append(f"{name} vacío: [{lo}, {hi}]")
        if self.patch_size < 1 or self.patch_size > min(self.target_dims[1:]):
            problems.append("patch_size debe estar en [1, min(Y, X)]")
        if self.patches_per_case < 1:
            problems.append("patches_per_case debe ser >= 1")
        if self.window_length < 2:
            problems.append("window_length debe ser >= 2")
        if not 0 <= self.lesion_fraction <= 1:
            problems.append("lesion_fraction debe estar en [0, 1]")
        if problems:
            raise ValidationError("Configuración de preprocesado inválida", error_code="BAD_PREPROC",
                                  details={'problems': problems})
        return self


@dataclass(frozen=True)
class PreprocessedCase:
    """Caso llevado a ``target_dims``: canales (C, Z, Y, X), máscara cerebral y verdad opcional."""

    case_id: str
    channels: np.ndarray
    channel_names: Tuple[str, ...]
    brain: np.ndarray
    gt: Optional[np.ndarray]
    spacing: Tuple[float, float, float]
    original_dims: Tuple[int, int, int]
    original_spacing: Tuple[float, float, float]
    window: Dict[str, int] = field(default_factory=dict)

    @property
    def pwi_channels(self) -> np.ndarray:
        return self.channels[:len(self.channel_names) - len(MAP_NAMES)]

    @property
    def map_channels(self) -> np.ndarray:
        return self.channels[len(self.channel_names) - len(MAP_NAMES):]


@dataclass(frozen=True)
class Patch:
    channels: np.ndarray
    channel_names: Tuple[str, ...]
    gt: np.ndarray
    case_id: str
    z: int
    origin: Tuple[int, int]

    def index_entry(self) -> dict:
        return {'case_id': self.case_id, 'z': self.z, 'origin': list(self.origin)}


def brain_mask(bundle: CaseBundle) -> Volume3D:
    """Máscara cerebral de datos ya sin cráneo: vóxeles con ADC > 0."""
    adc = bundle.maps['ADC']
    mask = require_nonempty(adc.array > 0, 'máscara cerebral')
    return Volume3D(Tensor(mask.astype(np.float32)), adc.spacing)


def _scale_or_blank(volume, mask, config: PreprocConfig, name: str):
    out_lo, out_hi = config.scale_range
    try:
        return scale_linear(volume, mask, out_lo, out_hi).array
    except DegenerateRangeError:
        logger.warning(f"Mapa {name} constante dentro del cerebro, se rellena con {out_lo}",
                       extra={'step': 'preprocess_case', 'details': {'map': name}})
        return np.full(volume.array.shape, out_lo, dtype=volume.array.dtype)


@log_step(logger)
def preprocess_case(bundle: CaseBundle, window: Volume4D, config: PreprocConfig,
                    window_info: Optional[Dict[str, int]] = None) -> PreprocessedCase:
    """Remuestrea, recorta y escala la ventana PWI y los mapas de un caso."""
    config.validate()
    if window.dims[0] != config.window_length:
        raise ShapeError("La ventana no tiene la longitud configurada", error_code="WINDOW_MISMATCH",
                         details={'window': window.dims[0], 'expected': config.window_length})
    if window.spatial_dims != bundle.map_dims:
        raise ShapeError("La PWI y los mapas no comparten dimensiones", error_code="PWI_MAP_MISMATCH",
                         details={'pwi': window.spatial_dims, 'maps': bundle.map_dims})
    target = tuple(int(d) for d in config.target_dims)

    brain_src = brain_mask(bundle)
    brain = resize_trilinear(brain_src, target).array >= 0.5
    brain = require_nonempty(brain, 'máscara cerebral remuestreada')

    pwi = _scale_or_blank(resize_trilinear(window, target), brain, config, 'PWI')
    maps = []
    for name in MAP_NAMES:
        volume = resize_trilinear(bundle.maps[name], target)
        if name == 'Tmax':
            volume = clip_map(volume, *config.tmax_clip)
        elif name == 'ADC':
            volume = clip_map(volume, *config.adc_clip)
        maps.append(_scale_or_blank(volume, brain, config, name))

    gt = None
    if bundle.lesion_gt is not None:
        gt = (resize_trilinear(bundle.lesion_gt, target).array >= 0.5) & brain

    names = tuple(f"pwi_{t:02d}" for t in range(config.window_length)) + MAP_NAMES
    channels = np.concatenate([pwi, np.stack(maps)]).astype(np.float32)
    spacing = resize_trilinear(brain_src, target).spacing
    return PreprocessedCase(
        case_id=bundle.case_id,
        channels=channels,
        channel_names=names,
        brain=brain,
        gt=gt,
        spacing=spacing,
        original_dims=bundle.map_dims,
        original_spacing=bundle.maps['ADC'].spacing,
        window=dict(window_info or {}),
    )


def _candidate_origins(mask: np.ndarray, patch_size: int) -> np.ndarray:
    """Orígenes (z, y0, x0) cuyo centro de parche cae dentro de ``mask``."""
    _, ny, nx = mask.shape
    half = patch_size // 2
    centres = mask[:, half:ny - patch_size + half + 1, half:nx - patch_size + half + 1]
    return np.argwhere(centres)


def _draw_origin(pool: np.ndarray, stream: SeededRng) -> Tuple[int, int, int]:
    """Corte uniforme entre los que tienen candidatos y después origen uniforme dentro de ese corte."""
    slices = np.unique(pool[:, 0])
    z = slices[int(stream.integers(0, len(slices)))]
    in_slice = pool[pool[:, 0] == z]
    return tuple(int(v) for v in in_slice[int(stream.integers(0, len(in_slice)))])


def extract_patches(case: PreprocessedCase, config: PreprocConfig, rng: SeededRng) -> List[Patch]:
    """
    Extrae ``patches_per_case`` parches 2D aleatorios centrados en el cerebro.

    El parche i usa el sub-flujo ``patch_{i}``, de modo que el resultado no
    depende del orden ni del número de hilos.
    """
    size = config.patch_size
    _, _, ny, nx = case.channels.shape
    if size > min(ny, nx):
        raise SamplingError("El parche es mayor que el corte", error_code="PATCH_TOO_LARGE")
    candidates = _candidate_origins(case.brain, size)
    if len(candidates) == 0:
        raise SamplingError("No hay posiciones válidas para extraer parches", error_code="NO_CANDIDATES",
                            details={'case_id': case.case_id})
    lesion_candidates = np.empty((0, 3), dtype=np.int64)
    if config.lesion_biased and case.gt is not None:
        lesion_candidates = _candidate_origins(case.gt & case.brain, size)

    gt = case.gt if case.gt is not None else np.zeros(case.brain.shape, dtype=bool)
    patches = []
    for i in range(config.patches_per_case):
        stream = rng_split(rng, f"patch_{i}")
        pool = candidates
        if len(lesion_candidates) and stream.uniform() < config.lesion_fraction:
            pool = lesion_candidates
        z, y0, x0 = _draw_origin(pool, stream)
        window = (slice(y0, y0 + size), slice(x0, x0 + size))
        patches.append(Patch(
            channels=case.channels[(slice(None), z) + window].copy(),
            channel_names=case.channel_names,
            gt=gt[(z,) + window].astype(np.float32),
            case_id=case.case_id,
            z=z,
            origin=(y0, x0),
        ))
    logger.info("Parches extraídos", extra={'step': 'extract_patches',
                                            'details': {'case_id': case.case_id, 'n': len(patches)}})
    return patches


def stack_patches(patches: List[Patch]) -> Tuple[np.ndarray, np.ndarray]:
    """Apila parches en (N, C, P, P) y verdades en (N, 1, P, P)."""
    if not patches:
        raise SamplingError("Lista de parches vacía", error_code="NO_PATCHES")
    channels = np.stack([p.channels for p in patches]).astype(np.float32)
    gt = np.stack([p.gt for p in patches])[:, None].astype(np.float32)
    return channels, gt
