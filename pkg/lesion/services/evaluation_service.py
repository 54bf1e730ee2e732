"""
Servicios de evaluación: métricas por caso y matriz NMI.
"""

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from lesion.io.tensor import MAP_NAMES
from lesion.metrics import DEFAULT_BINS, DEFAULT_THRESHOLD, MetricsReport, NmiMatrix, evaluate_corpus, nmi_report
from lesion.metrics.report import write_metrics_csv
from lesion.preprocessing import PreprocConfig
from lesion.training import load_checkpoint

from .base_service import BaseService, ServiceException
from .preprocess_service import PreprocessService

# Umbral de baja asociación entre mapas aprendidos y estándar
COMPLEMENTARITY_THRESHOLD = 0.2


def write_nmi_csv(matrix: NmiMatrix, path) -> None:
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(('feature',) + tuple(matrix.columns))
        for row in matrix.as_rows():
            writer.writerow([row[0]] + [f"{v:.10g}" for v in row[1:]])


def read_nmi_csv(path, bins: int = DEFAULT_BINS) -> NmiMatrix:
    with open(path, newline='') as fh:
        records = list(csv.reader(fh))
    header, body = records[0], records[1:]
    return NmiMatrix(rows=tuple(r[0] for r in body), columns=tuple(header[1:]),
                     values=np.array([[float(v) for v in r[1:]] for r in body]), bins=bins)


class EvaluationService(BaseService):

    def run(self, pred_dir, gt_dir, report_path, threshold: float = DEFAULT_THRESHOLD,
            threads: int = 1) -> MetricsReport:
        try:
            report = evaluate_corpus(pred_dir, gt_dir, threshold, threads)
            report_path = Path(report_path)
            report_path.parent.mkdir(parents=True, exist_ok=True)
            write_metrics_csv(report, report_path)
            if report.flagged:
                self.logger.warning("Casos con distancia indefinida excluidos de los agregados",
                                    extra={'step': 'evaluate', 'details': {'cases': report.flagged}})
            self.log_operation('evaluate', {'cases': len(report.rows), 'mean_dice': report.mean['dice'],
                                            'sd_dice': report.sd['dice'], 'report': str(report_path)})
            return report
        except ServiceException as e:
            self.log_error("evaluate", e, {'pred_dir': str(pred_dir), 'gt_dir': str(gt_dir)})
            raise


class NmiService(BaseService):

    def __init__(self):
        super().__init__()
        self.preprocess = PreprocessService()

    def run(self, model_path, case_dir, out_path, bins: int = DEFAULT_BINS,
            config: Optional[PreprocConfig] = None, seed: int = 0) -> NmiMatrix:
        try:
            checkpoint = load_checkpoint(model_path)
            case = self.preprocess.resolve(case_dir, config, seed)
            matrix = nmi_report(checkpoint, case, bins)
            out_path = Path(out_path)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            write_nmi_csv(matrix, out_path)

            # comprobación blanda: los mapas aprendidos deberían asociarse poco con los estándar
            peak = float(matrix.values.max())
            details = {'case_id': case.case_id, 'features': len(matrix.rows), 'max_nmi': peak,
                       'per_map_max': dict(zip(MAP_NAMES, matrix.values.max(axis=0).round(6).tolist()))}
            if peak < COMPLEMENTARITY_THRESHOLD:
                self.log_operation('nmi', details)
            else:
                self.logger.warning(f"NMI máxima {peak:.3f} >= {COMPLEMENTARITY_THRESHOLD}",
                                    extra={'step': 'nmi', 'details': details})
            return matrix
        except ServiceException as e:
            self.log_error("nmi", e, {'case_dir': str(case_dir), 'model': str(model_path)})
            raise
