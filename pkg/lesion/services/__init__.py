"""
Servicios del pipeline: cada etapa de la línea de comandos delega en uno.
"""

from .ablation_service import AblationService
from .base_service import BaseService, ServiceException
from .evaluation_service import EvaluationService, NmiService
from .prediction_service import PredictionService
from .preprocess_service import PreprocessService
from .report_service import ReportService
from .selftest_service import SelftestService
from .synth_service import SynthService
from .training_service import TrainingService
from .window_service import WindowService

__all__ = [
    'AblationService',
    'BaseService',
    'EvaluationService',
    'NmiService',
    'PredictionService',
    'PreprocessService',
    'ReportService',
    'SelftestService',
    'ServiceException',
    'SynthService',
    'TrainingService',
    'WindowService',
]
