"""Conjunto de parches en memoria y partición por caso."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from lesion.exceptions import DataError
from lesion.io.raw_format import load_raw
from lesion.io.rng import SeededRng
from lesion.io.tensor import MAP_NAMES

PATCHES_FILE = 'patches.pwt'
PATCHES_GT_FILE = 'patches_gt.pwt'
PATCHES_INDEX_FILE = 'patches.json'


@dataclass(frozen=True)
class PatchSet:
    """Parches apilados: PWI (N, 26, P, P), mapas (N, 6, P, P) y verdad (N, 1, P, P)."""

    pwi: np.ndarray
    maps: np.ndarray
    gt: np.ndarray
    case_ids: Tuple[str, ...]

    def __len__(self):
        return len(self.case_ids)

    @classmethod
    def from_channels(cls, channels: np.ndarray, gt: np.ndarray, case_ids: Sequence[str]) -> 'PatchSet':
        split = channels.shape[1] - len(MAP_NAMES)
        return cls(pwi=channels[:, :split], maps=channels[:, split:], gt=gt, case_ids=tuple(case_ids))

    def subset(self, indices) -> 'PatchSet':
        indices = np.asarray(indices, dtype=np.int64)
        return PatchSet(self.pwi[indices], self.maps[indices], self.gt[indices],
                        tuple(self.case_ids[i] for i in indices))

    def for_cases(self, case_ids) -> 'PatchSet':
        wanted = set(case_ids)
        return self.subset([i for i, case in enumerate(self.case_ids) if case in wanted])

    def inputs(self, kind: str, indices=None):
        """Entradas según el contrato del tipo de modelo."""
        sel = slice(None) if indices is None else np.asarray(indices, dtype=np.int64)
        pwi, maps = self.pwi[sel], self.maps[sel]
        if kind == 'standard':
            return maps
        if kind == 'data_driven':
            return pwi
        if kind == 'single':
            return np.concatenate([pwi, maps], axis=1)
        return pwi, maps

    def astype(self, dtype) -> 'PatchSet':
        return PatchSet(self.pwi.astype(dtype), self.maps.astype(dtype), self.gt.astype(dtype), self.case_ids)


def load_patch_dir(data_dir) -> PatchSet:
    """Reúne los parches de todos los casos preprocesados bajo ``data_dir``."""
    root = Path(data_dir)
    if not root.is_dir():
        raise DataError(f"No existe el directorio {root}", error_code="DIR_NOT_FOUND")
    channels, gts, case_ids = [], [], []
    for case_dir in sorted(p for p in root.iterdir() if (p / PATCHES_FILE).exists()):
        index = json.loads((case_dir / PATCHES_INDEX_FILE).read_text())
        block = load_raw(case_dir / PATCHES_FILE).data
        channels.append(np.asarray(block, dtype=np.float32))
        gts.append(np.asarray(load_raw(case_dir / PATCHES_GT_FILE).data, dtype=np.float32))
        case_ids.extend([index['case_id']] * block.shape[0])
    if not channels:
        raise DataError("No hay parches en el corpus", error_code="EMPTY_CORPUS", details={'dir': str(root)})
    return PatchSet.from_channels(np.concatenate(channels), np.concatenate(gts), case_ids)


def split_cases(case_ids: Sequence[str], ratio: Tuple[int, int], rng: SeededRng) -> Tuple[List[str], List[str]]:
    """
    Partición por caso en proporción ``ratio`` (entrenamiento : validación).

    Con dos o más casos y proporción de validación no nula, la validación
    recibe al menos un caso y el entrenamiento conserva al menos otro.
    """
    unique = sorted(set(case_ids))
    if not unique:
        raise DataError("Corpus vacío", error_code="EMPTY_CORPUS")
    train_part, val_part = ratio
    n_val = int(round(len(unique) * val_part / (train_part + val_part)))
    if val_part > 0 and len(unique) >= 2:
        n_val = min(max(n_val, 1), len(unique) - 1)
    else:
        n_val = 0
    order = rng.permutation(len(unique))
    shuffled = [unique[i] for i in order]
    return sorted(shuffled[n_val:]), sorted(shuffled[:n_val])
