"""
Ablación interna de las cuatro arquitecturas sobre un corpus sintético.

Por semilla: corpus -> ventana -> preprocesado -> partición por caso en
entrenamiento/prueba -> entrenamiento de cada tipo -> predicción -> métricas.
"""

import statistics
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

from lesion.io.case_store import dump_json
from lesion.io.raw_format import save_raw
from lesion.io.rng import SeededRng, rng_split
from lesion.metrics import MetricsReport, evaluate_case
from lesion.metrics.report import write_metrics_csv
from lesion.models import MODEL_KINDS
from lesion.phantom import synth_corpus
from lesion.preprocessing import extract_patches, stack_patches
from lesion.serializers import PipelineConfig
from lesion.training import PatchSet, save_checkpoint, split_cases
from lesion.utils.parallel import map_ordered

from .base_service import BaseService, ServiceException, ValidationError
from .prediction_service import PredictionService
from .preprocess_service import PreprocessService
from .training_service import TrainingService, write_loss_csv

# proporción entrenamiento:prueba del corpus de ablación (30 / 10 con 40 casos)
TEST_SPLIT = (3, 1)
SUMMARY_FILE = 'summary.json'


class AblationService(BaseService):

    def __init__(self):
        super().__init__()
        self.preprocess = PreprocessService()
        self.training = TrainingService()
        self.prediction = PredictionService()

    def run_seed(self, out_dir: Path, corpus_size: int, seed: int, config: PipelineConfig,
                 kinds: Sequence[str], threads: int = 1) -> Dict[str, MetricsReport]:
        root = SeededRng(seed)
        phantoms = synth_corpus(corpus_size, seed, config.phantom, threads)
        bundles = {case.bundle.case_id: case.bundle for case in phantoms}

        def prepare(case_id):
            return self.preprocess.prepare(bundles[case_id], config.preproc, seed)

        prepared = dict(zip(sorted(bundles), map_ordered(prepare, sorted(bundles), threads)))
        train_ids, test_ids = split_cases(sorted(bundles), TEST_SPLIT, rng_split(root, 'ablation_split'))
        self.log_operation('ablation_split', {'seed': seed, 'train': len(train_ids), 'test': len(test_ids)})

        patches = []
        for case_id in train_ids:
            case = prepared[case_id]
            patches += extract_patches(case, config.preproc, rng_split(root, f"patches:{case_id}"))
        channels, gt = stack_patches(patches)
        patch_set = PatchSet.from_channels(channels, gt, [p.case_id for p in patches])

        reports = {}
        train_config = replace(config.train, seed=seed)
        for kind in kinds:
            kind_dir = out_dir / kind
            (kind_dir / 'pred').mkdir(parents=True, exist_ok=True)
            checkpoint = self.training.fit(patch_set, kind, config.arch, train_config)
            save_checkpoint(checkpoint, kind_dir / 'model.ckpt')
            write_loss_csv(checkpoint.history, kind_dir / 'loss.csv')
            spec = checkpoint.build()
            rows = []
            for case_id in test_ids:
                volume = self.prediction.predict_case(spec, prepared[case_id], checkpoint.metadata['patch_size'])
                save_raw(kind_dir / 'pred' / f"{case_id}.pwt", volume)
                truth = bundles[case_id].lesion_gt
                rows.append(evaluate_case(case_id, volume.array, truth.array, truth.spacing))
            reports[kind] = MetricsReport.from_rows(rows)
            write_metrics_csv(reports[kind], kind_dir / 'metrics.csv')
            self.log_operation('ablation_method', {'seed': seed, 'kind': kind,
                                                   'mean_dice': reports[kind].mean['dice']})
        return reports

    def run(self, out_dir, corpus_size: int = 40, seeds: Sequence[int] = (0, 1, 2),
            config: Optional[PipelineConfig] = None, kinds: Sequence[str] = MODEL_KINDS,
            threads: int = 1) -> Dict[str, Dict]:
        """
        Ejecuta la ablación para cada semilla y escribe ``summary.json`` con
        la Dice media de prueba por semilla y su mediana por método.
        """
        try:
            if corpus_size < 2:
                raise ValidationError("La ablación necesita al menos 2 casos", error_code="SMALL_CORPUS")
            if not seeds:
                raise ValidationError("Se necesita al menos una semilla", error_code="NO_SEEDS")
            config = config or PipelineConfig()
            out_dir = Path(out_dir)
            by_seed: Dict[int, Dict[str, MetricsReport]] = {}
            for seed in seeds:
                by_seed[seed] = self.run_seed(out_dir / f"seed_{seed}", corpus_size, seed, config, kinds, threads)

            summary = {}
            for kind in kinds:
                dice = [by_seed[seed][kind].mean['dice'] for seed in seeds]
                summary[kind] = {'dice_by_seed': dice, 'median_dice': statistics.median(dice)}
            if 'branched' in summary and 'standard' in summary:
                margin = summary['branched']['median_dice'] - summary['standard']['median_dice']
                summary['branched_minus_standard'] = margin
            dump_json(out_dir / SUMMARY_FILE, {'corpus_size': corpus_size, 'seeds': list(seeds), 'methods': summary})
            self.log_operation('ablation', {'out': str(out_dir), **{k: v['median_dice'] for k, v in summary.items()
                                                                      if isinstance(v, dict)}})
            return summary
        except ServiceException as e:
            self.log_error("ablation", e, {'corpus_size': corpus_size, 'seeds': list(seeds)})
            raise


def ranking(summary: Dict[str, Dict]) -> Tuple[str, ...]:
    """Métodos ordenados por Dice mediana descendente."""
    methods = {k: v for k, v in summary.items() if isinstance(v, dict)}
    return tuple(sorted(methods, key=lambda k: -methods[k]['median_dice']))
