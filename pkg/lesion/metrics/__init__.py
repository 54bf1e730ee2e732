"""Métricas de evaluación y análisis de complementariedad (NMI)."""

from .nmi import DEFAULT_BINS, NmiMatrix, feature_volume, nmi, nmi_matrix, nmi_report
from .overlap import DEFAULT_THRESHOLD, binarize, dice_binary, precision, recall
from .report import (
    CaseMetrics,
    MetricsReport,
    evaluate_case,
    evaluate_corpus,
    read_metrics_csv,
    write_metrics_csv,
)
from .surface import assd, hausdorff, surface, surface_distances

__all__ = [
    'DEFAULT_BINS',
    'DEFAULT_THRESHOLD',
    'CaseMetrics',
    'MetricsReport',
    'NmiMatrix',
    'assd',
    'binarize',
    'dice_binary',
    'evaluate_case',
    'evaluate_corpus',
    'feature_volume',
    'hausdorff',
    'nmi',
    'nmi_matrix',
    'nmi_report',
    'precision',
    'read_metrics_csv',
    'recall',
    'surface',
    'surface_distances',
    'write_metrics_csv',
]
