"""
Servicio de selección temporal: pico de contraste y ventana de 26 adquisiciones.
"""

import json
from pathlib import Path
from typing import Tuple

from lesion.io.case_store import dump_json, read_case_dir
from lesion.io.raw_format import load_raw, save_raw
from lesion.io.rng import SeededRng, rng_split
from lesion.io.tensor import CaseBundle, Volume4D
from lesion.preprocessing import brain_mask
from lesion.temporal import WINDOW_LENGTH, TemporalWindow, detect_peak, extract_window, slice_stats

from .base_service import BaseService, DataError, ServiceException


def sidecar_path(window_path) -> Path:
    return Path(window_path).with_suffix('.json')


class WindowService(BaseService):

    def compute(self, bundle: CaseBundle, length: int = WINDOW_LENGTH, seed: int = 0) -> TemporalWindow:
        """Detecta el pico con k-means sobre (media, desviación) por adquisición y recorta la ventana."""
        stats = slice_stats(bundle.pwi, brain_mask(bundle))
        peak = detect_peak(stats, rng_split(SeededRng(seed), bundle.case_id))
        window = extract_window(bundle.pwi, peak, length)
        self.log_operation('window', {'case_id': bundle.case_id, **window.sidecar()})
        return window

    def run(self, case_dir, out_path, length: int = WINDOW_LENGTH, seed: int = 0) -> TemporalWindow:
        try:
            bundle, _ = read_case_dir(case_dir)
            window = self.compute(bundle, length, seed)
            out_path = Path(out_path)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            save_raw(out_path, window.data)
            dump_json(sidecar_path(out_path), {'case_id': bundle.case_id, **window.sidecar()})
            return window
        except ServiceException as e:
            self.log_error("window", e, {'case_dir': str(case_dir)})
            raise

    def load(self, window_path) -> Tuple[Volume4D, dict]:
        """Lee una ventana guardada y su sidecar (vacío si no existe)."""
        volume = load_raw(window_path)
        if not isinstance(volume, Volume4D):
            raise DataError(f"{window_path} no contiene una ventana 4D", error_code="WINDOW_NOT_4D")
        sidecar = sidecar_path(window_path)
        info = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        info.pop('case_id', None)
        return volume, info
