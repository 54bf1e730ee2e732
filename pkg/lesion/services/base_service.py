"""
Clase base para servicios del pipeline.
Proporciona logging estructurado y la jerarquía de errores común.
"""

from abc import ABC
from typing import Any, Dict, Optional

from lesion.exceptions import DataError, NumericalError, PipelineError, ValidationError
from lesion.utils.logging_utils import get_logger

ServiceException = PipelineError


class BaseService(ABC):
    """
    Clase base abstracta para todos los servicios.

    Cada operación completada deja una línea JSON (``step`` + detalles).
    """

    def __init__(self):
        self.logger = get_logger(f"lesion.services.{self.__class__.__name__}")

    def log_operation(self, operation: str, details: Optional[Dict[str, Any]] = None):
        """Log de operaciones del servicio"""
        self.logger.info(operation, extra={'step': operation, 'details': dict(details or {})})

    def log_error(self, operation: str, error: Exception, details: Optional[Dict[str, Any]] = None):
        """Log de errores del servicio"""
        payload = dict(details or {})
        if isinstance(error, PipelineError):
            payload.update({'error_code': error.error_code, 'exit_code': error.exit_code, **error.details})
        self.logger.error(f"Error en {operation}: {error}", extra={'step': operation, 'details': payload},
                          exc_info=True)


__all__ = ['BaseService', 'DataError', 'NumericalError', 'ServiceException', 'ValidationError']
