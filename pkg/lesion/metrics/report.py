"""Evaluación por caso y agregados (media ± desviación muestral) de un corpus."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from lesion.exceptions import DataError, UndefinedDistanceError
from lesion.io.case_store import list_case_dirs, read_case_dir
from lesion.io.raw_format import load_raw
from lesion.metrics.overlap import DEFAULT_THRESHOLD, binarize, dice_binary, precision, recall
from lesion.metrics.surface import assd, hausdorff
from lesion.utils.logging_utils import get_logger
from lesion.utils.parallel import map_ordered

logger = get_logger(__name__)

COLUMNS = ('dice', 'hd', 'assd', 'precision', 'recall')
MISSING = 'NA'


@dataclass(frozen=True)
class CaseMetrics:
    case_id: str
    dice: float
    hd: float
    assd: float
    precision: float
    recall: float

    @property
    def distance_defined(self) -> bool:
        return not (math.isnan(self.hd) or math.isnan(self.assd))

    def values(self) -> List[float]:
        return [getattr(self, column) for column in COLUMNS]


@dataclass(frozen=True)
class MetricsReport:
    rows: List[CaseMetrics]
    mean: Dict[str, float]
    sd: Dict[str, float]

    @property
    def flagged(self) -> List[str]:
        """Casos con distancia indefinida, excluidos de los agregados de distancia."""
        return [row.case_id for row in self.rows if not row.distance_defined]

    @classmethod
    def from_rows(cls, rows: Sequence[CaseMetrics]) -> 'MetricsReport':
        rows = sorted(rows, key=lambda r: r.case_id)
        mean, sd = {}, {}
        for column in COLUMNS:
            values = np.array([getattr(r, column) for r in rows], dtype=np.float64)
            values = values[~np.isnan(values)]
            mean[column] = float(values.mean()) if len(values) else float('nan')
            sd[column] = float(values.std(ddof=1)) if len(values) > 1 else (0.0 if len(values) else float('nan'))
        return cls(rows=list(rows), mean=mean, sd=sd)


def evaluate_case(case_id: str, prob: np.ndarray, gt: np.ndarray, spacing,
                  threshold: float = DEFAULT_THRESHOLD) -> CaseMetrics:
    pred = binarize(prob, threshold)
    truth = np.asarray(gt) > 0.5
    try:
        hd, mean_distance = hausdorff(pred, truth, spacing), assd(pred, truth, spacing)
    except UndefinedDistanceError:
        logger.warning("Distancia indefinida (máscara vacía)", extra={'step': 'evaluate_case',
                                                                       'details': {'case_id': case_id}})
        hd = mean_distance = float('nan')
    return CaseMetrics(
        case_id=case_id,
        dice=dice_binary(pred, truth),
        hd=hd,
        assd=mean_distance,
        precision=precision(pred, truth),
        recall=recall(pred, truth),
    )


def evaluate_corpus(pred_dir, gt_dir, threshold: float = DEFAULT_THRESHOLD, threads: int = 1) -> MetricsReport:
    """
    Empareja ``<pred_dir>/<case_id>.pwt`` con los directorios de caso de
    ``gt_dir`` y calcula las métricas de cada caso.

    Raises:
        DataError: si algún caso no tiene pareja en el otro directorio
    """
    pred_dir = Path(pred_dir)
    if not pred_dir.is_dir():
        raise DataError(f"No existe el directorio {pred_dir}", error_code="DIR_NOT_FOUND")
    predictions = {p.name[:-len('.pwt')]: p for p in pred_dir.glob('*.pwt')}
    cases = {}
    for case_dir in list_case_dirs(gt_dir):
        bundle, _ = read_case_dir(case_dir)
        cases[bundle.case_id] = bundle

    unmatched = sorted(set(predictions) ^ set(cases))
    if unmatched or not cases:
        raise DataError("Casos sin pareja entre predicciones y verdad", error_code="UNMATCHED_CASES",
                        details={'unmatched': unmatched})

    def run(case_id):
        bundle = cases[case_id]
        if bundle.lesion_gt is None:
            raise DataError(f"El caso {case_id} no tiene máscara de verdad", error_code="MISSING_GT")
        prob = load_raw(predictions[case_id])
        if tuple(prob.dims) != bundle.lesion_gt.dims:
            raise DataError(f"Predicción de {case_id} con dimensiones distintas a la verdad",
                            error_code="PRED_DIMS", details={'pred': list(prob.dims)})
        return evaluate_case(case_id, prob.data if hasattr(prob, 'data') else prob.array,
                             bundle.lesion_gt.array, bundle.lesion_gt.spacing, threshold)

    return MetricsReport.from_rows(map_ordered(run, sorted(cases), threads))


def _fmt(value: float) -> str:
    return MISSING if value is None or math.isnan(value) else f"{value:.10g}"


def write_metrics_csv(report: MetricsReport, path) -> None:
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(('case_id',) + COLUMNS)
        for row in report.rows:
            writer.writerow([row.case_id] + [_fmt(v) for v in row.values()])
        writer.writerow(['mean'] + [_fmt(report.mean[c]) for c in COLUMNS])
        writer.writerow(['sd'] + [_fmt(report.sd[c]) for c in COLUMNS])


def read_metrics_csv(path) -> MetricsReport:
    """Lee un CSV de métricas; las filas ``mean`` y ``sd`` se recalculan."""
    rows: List[CaseMetrics] = []
    with open(path, newline='') as fh:
        for record in csv.DictReader(fh):
            if record['case_id'] in ('mean', 'sd'):
                continue
            values = [float('nan') if record[c] == MISSING else float(record[c]) for c in COLUMNS]
            rows.append(CaseMetrics(record['case_id'], *values))
    if not rows:
        raise DataError(f"CSV de métricas sin casos: {path}", error_code="EMPTY_METRICS")
    return MetricsReport.from_rows(rows)
