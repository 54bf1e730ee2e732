"""
Servicio de generación de corpus sintéticos en disco.
"""

from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from lesion.io.case_store import write_case_dir
from lesion.io.rng import SeededRng, rng_split
from lesion.phantom import PhantomCase, PhantomConfig, synth_case, synth_corpus
from lesion.utils.parallel import map_ordered

from .base_service import BaseService, ValidationError


class SynthService(BaseService):
    """Escribe un directorio por caso con PWI, mapas, verdad y meta.json."""

    def generate(self, out_dir, n: int, seed: int, config: Optional[PhantomConfig] = None,
                 fixed: bool = False, nifti: bool = False, threads: int = 1) -> List[Path]:
        """
        Genera ``n`` casos bajo ``out_dir``.

        Con ``fixed`` todos los casos usan la configuración tal cual (solo
        cambia la semilla de ruido por caso); si no, cada caso sortea sus
        parámetros con ``random_config``.
        """
        if n < 1:
            raise ValidationError("--n debe ser >= 1", error_code="EMPTY_CORPUS", details={'n': n})
        config = (config or PhantomConfig()).validate()
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.log_operation('synth', {'n': n, 'seed': seed, 'fixed': fixed, 'dims': list(config.dims)})

        if fixed:
            root = SeededRng(seed)
            pairs = [(f"case_{i:03d}", replace(config, seed=rng_split(root, f"case_{i:03d}").seed))
                     for i in range(n)]
            cases = map_ordered(lambda pair: synth_case(pair[1], pair[0]), pairs, threads)
        else:
            cases = synth_corpus(n, seed, config, threads)

        paths = [self.write_case(out_dir / case.bundle.case_id, case, seed, nifti) for case in cases]
        self.log_operation('synth_written', {'out': str(out_dir), 'cases': len(paths)})
        return paths

    def write_case(self, case_dir, case: PhantomCase, seed: int, nifti: bool = False) -> Path:
        meta = {
            'true_peak_index': case.true_peak_index,
            'seed': seed,
            'config': case.config.echo(),
        }
        return write_case_dir(case_dir, case.bundle, meta, nifti=nifti)
