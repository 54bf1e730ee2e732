"""
Servicio de inferencia de volumen completo.

Cada corte se recorre con teselas de ``patch_size`` y paso ``patch_size // 2``;
las probabilidades solapadas se promedian y el volumen se remuestrea a la
resolución original del caso.
"""

from pathlib import Path
from typing import List, Optional

import numpy as np

from lesion.exceptions import ShapeError
from lesion.io.raw_format import save_raw
from lesion.io.tensor import Tensor, Volume3D
from lesion.models import ModelSpec
from lesion.preprocessing import PreprocConfig, PreprocessedCase, resize_trilinear
from lesion.training import PatchSet, load_checkpoint

from .base_service import BaseService, ServiceException
from .preprocess_service import PreprocessService

PREDICT_BATCH = 16


def tile_origins(n: int, size: int) -> List[int]:
    """Orígenes de teselas que cubren [0, n) con paso size // 2; la última toca el borde."""
    if size > n:
        raise ShapeError(f"Tesela de {size} mayor que el corte ({n})", error_code="TILE_TOO_LARGE")
    stride = max(size // 2, 1)
    origins = list(range(0, n - size + 1, stride))
    if origins[-1] != n - size:
        origins.append(n - size)
    return origins


def predict_volume(spec: ModelSpec, case: PreprocessedCase, patch_size: int,
                   batch_size: int = PREDICT_BATCH) -> np.ndarray:
    """Probabilidades (Z, Y, X) a la resolución preprocesada, cero fuera del cerebro."""
    _, nz, ny, nx = case.channels.shape
    tiles = [(z, y0, x0) for z in range(nz) for y0 in tile_origins(ny, patch_size)
             for x0 in tile_origins(nx, patch_size)]
    total = np.zeros((nz, ny, nx), dtype=np.float64)
    counts = np.zeros((nz, ny, nx), dtype=np.float64)
    for start in range(0, len(tiles), batch_size):
        chunk = tiles[start:start + batch_size]
        block = np.stack([case.channels[:, z, y0:y0 + patch_size, x0:x0 + patch_size] for z, y0, x0 in chunk])
        patches = PatchSet.from_channels(block, np.zeros((len(chunk), 1, patch_size, patch_size), np.float32),
                                         [case.case_id] * len(chunk))
        prob = spec.forward(patches.inputs(spec.kind)).data[:, 0]
        for (z, y0, x0), tile in zip(chunk, prob):
            total[z, y0:y0 + patch_size, x0:x0 + patch_size] += tile
            counts[z, y0:y0 + patch_size, x0:x0 + patch_size] += 1
    return np.where(case.brain, total / np.maximum(counts, 1), 0.0)


def to_original_resolution(prob: np.ndarray, case: PreprocessedCase) -> Volume3D:
    volume = Volume3D(Tensor(prob.astype(np.float32)), case.spacing)
    resized = resize_trilinear(volume, tuple(case.original_dims))
    array = np.clip(resized.array, 0.0, 1.0).astype(np.float32)
    return Volume3D(Tensor(array), tuple(case.original_spacing))


class PredictionService(BaseService):

    def __init__(self):
        super().__init__()
        self.preprocess = PreprocessService()

    def predict_case(self, spec: ModelSpec, case: PreprocessedCase, patch_size: int) -> Volume3D:
        prob = predict_volume(spec, case, patch_size)
        volume = to_original_resolution(prob, case)
        self.log_operation('predict', {'case_id': case.case_id, 'kind': spec.kind,
                                       'dims': list(volume.dims), 'positive': int((volume.array > 0.5).sum())})
        return volume

    def run(self, model_path, case_dir, out_path, config: Optional[PreprocConfig] = None, seed: int = 0) -> Volume3D:
        """``case_dir`` puede ser un caso preprocesado o crudo (se preprocesa con ``config``)."""
        try:
            checkpoint = load_checkpoint(model_path)
            config = config or PreprocConfig()
            case = self.preprocess.resolve(case_dir, config, seed)
            patch_size = int(checkpoint.metadata.get('patch_size', config.patch_size))
            volume = self.predict_case(checkpoint.build(), case, patch_size)
            out_path = Path(out_path)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            save_raw(out_path, volume)
            return volume
        except ServiceException as e:
            self.log_error("predict", e, {'case_dir': str(case_dir), 'model': str(model_path)})
            raise
