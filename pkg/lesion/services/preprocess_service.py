"""
Servicio de preprocesado: caso crudo -> caso remuestreado y escalado + parches.

Un directorio preprocesado contiene ``channels.pwt`` (C, Z, Y, X),
``brain.pwt``, ``gt.pwt`` (si hay verdad), ``patches.pwt`` (N, C, P, P),
``patches_gt.pwt`` (N, 1, P, P), ``patches.json`` y ``meta.json``.
"""

import json
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from lesion.io.case_store import dump_json, is_case_dir, list_case_dirs, read_case_dir
from lesion.io.raw_format import load_raw, save_raw
from lesion.io.rng import SeededRng, rng_split
from lesion.io.tensor import CaseBundle, Tensor, Volume3D
from lesion.preprocessing import PreprocConfig, PreprocessedCase, extract_patches, preprocess_case, stack_patches
from lesion.training.dataset import PATCHES_FILE, PATCHES_GT_FILE, PATCHES_INDEX_FILE
from lesion.utils.parallel import map_ordered

from .base_service import BaseService, DataError, ServiceException
from .window_service import WindowService

CHANNELS_FILE = 'channels.pwt'
BRAIN_FILE = 'brain.pwt'
GT_FILE = 'gt.pwt'
META_FILE = 'meta.json'


def is_preprocessed(case_dir) -> bool:
    return (Path(case_dir) / CHANNELS_FILE).exists()


def save_preprocessed(out_dir, case: PreprocessedCase, patches: Optional[List] = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_raw(out_dir / CHANNELS_FILE, Tensor(case.channels.astype(np.float32)))
    save_raw(out_dir / BRAIN_FILE, Volume3D(Tensor(case.brain.astype(np.float32)), case.spacing))
    if case.gt is not None:
        save_raw(out_dir / GT_FILE, Volume3D(Tensor(case.gt.astype(np.float32)), case.spacing))
    if patches:
        channels, gt = stack_patches(patches)
        save_raw(out_dir / PATCHES_FILE, Tensor(channels.astype(np.float32)))
        save_raw(out_dir / PATCHES_GT_FILE, Tensor(gt.astype(np.float32)))
        dump_json(out_dir / PATCHES_INDEX_FILE, {
            'case_id': case.case_id,
            'channel_names': list(case.channel_names),
            'patches': [patch.index_entry() for patch in patches],
        })
    dump_json(out_dir / META_FILE, {
        'case_id': case.case_id,
        'channel_names': list(case.channel_names),
        'spacing': list(case.spacing),
        'target_dims': list(case.brain.shape),
        'original_dims': list(case.original_dims),
        'original_spacing': list(case.original_spacing),
        'window': case.window,
    })
    return out_dir


def load_preprocessed(case_dir) -> PreprocessedCase:
    case_dir = Path(case_dir)
    if not is_preprocessed(case_dir):
        raise DataError(f"{case_dir} no es un caso preprocesado", error_code="NOT_PREPROCESSED")
    meta = json.loads((case_dir / META_FILE).read_text())
    gt_path = case_dir / GT_FILE
    return PreprocessedCase(
        case_id=meta['case_id'],
        channels=np.asarray(load_raw(case_dir / CHANNELS_FILE).data),
        channel_names=tuple(meta['channel_names']),
        brain=load_raw(case_dir / BRAIN_FILE).array > 0.5,
        gt=load_raw(gt_path).array > 0.5 if gt_path.exists() else None,
        spacing=tuple(meta['spacing']),
        original_dims=tuple(meta['original_dims']),
        original_spacing=tuple(meta['original_spacing']),
        window=meta.get('window', {}),
    )


class PreprocessService(BaseService):

    def __init__(self):
        super().__init__()
        self.windows = WindowService()

    def prepare(self, bundle: CaseBundle, config: PreprocConfig, seed: int = 0,
                window_path=None) -> PreprocessedCase:
        """Ventana temporal (guardada o calculada) + remuestreo, recorte y escalado."""
        if window_path is not None:
            window, info = self.windows.load(window_path)
        else:
            computed = self.windows.compute(bundle, config.window_length, seed)
            window, info = computed.data, computed.sidecar()
        return preprocess_case(bundle, window, config, info)

    def run(self, case_dir, out_dir, config: Optional[PreprocConfig] = None, seed: int = 0,
            window_path=None) -> Path:
        try:
            config = (config or PreprocConfig()).validate()
            bundle, _ = read_case_dir(case_dir)
            case = self.prepare(bundle, config, seed, window_path)
            patches = None
            if case.gt is not None:
                patches = extract_patches(case, config, rng_split(SeededRng(seed), f"patches:{case.case_id}"))
            out = save_preprocessed(out_dir, case, patches)
            self.log_operation('preprocess', {'case_id': case.case_id, 'out': str(out),
                                              'patches': len(patches or []),
                                              'target_dims': list(config.target_dims)})
            return out
        except ServiceException as e:
            self.log_error("preprocess", e, {'case_dir': str(case_dir)})
            raise

    def run_many(self, root, out_root, config: Optional[PreprocConfig] = None, seed: int = 0,
                 threads: int = 1) -> List[Path]:
        """Preprocesa cada caso de ``root`` en ``out_root/<nombre>``; el resultado no depende de ``threads``."""
        dirs, _ = expand_case_dirs(root)
        out_root = Path(out_root)
        return map_ordered(lambda d: self.run(d, out_root / d.name, config, seed), dirs, threads)

    def resolve(self, case_dir, config: Optional[PreprocConfig] = None, seed: int = 0) -> PreprocessedCase:
        """Acepta un directorio ya preprocesado o uno crudo (que se preprocesa al vuelo)."""
        if is_preprocessed(case_dir):
            return load_preprocessed(case_dir)
        bundle, _ = read_case_dir(case_dir)
        return self.prepare(bundle, (config or PreprocConfig()).validate(), seed)


def expand_case_dirs(path) -> Tuple[List[Path], bool]:
    """
    ``path`` como caso individual o como raíz de varios casos.

    Devuelve (directorios, es_raíz).
    """
    path = Path(path)
    if is_preprocessed(path) or is_case_dir(path):
        return [path], False
    dirs = [d for d in list_case_dirs(path) if is_preprocessed(d) or is_case_dir(d)]
    if not dirs:
        raise DataError(f"No hay casos en {path}", error_code="NO_CASES")
    return dirs, True
