"""
Jerarquía de errores del pipeline.

Cada error lleva una categoría que los comandos de gestión traducen a código
de salida: uso (1), datos/formato (2) o fallo numérico (3).
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class PipelineError(Exception):
    """Excepción base para errores del pipeline"""

    exit_code = EXIT_DATA

    def __init__(self, message: str, error_code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(message)


# Errores de uso
class ValidationError(PipelineError):
    """Parámetros o configuración inválidos"""
    exit_code = EXIT_USAGE


class ModelKindError(PipelineError):
    """El checkpoint no corresponde al tipo de modelo requerido"""
    exit_code = EXIT_USAGE


# Errores de datos y formato
class FormatError(PipelineError):
    """Flujo de bytes mal formado (magic, versión, longitud)"""


class UnsupportedError(PipelineError):
    """Tipo de dato NIfTI no soportado"""


class RankError(PipelineError):
    """Número de ejes no admitido"""


class MaskError(PipelineError):
    """Máscara vacía o incompatible"""


class ShapeError(PipelineError):
    """Dimensiones incompatibles entre tensores"""


class DataError(PipelineError):
    """Corpus vacío, casos sin pareja o datos incoherentes"""


class SamplingError(PipelineError):
    """No hay posiciones válidas para extraer parches"""


class InsufficientAcquisitionsError(PipelineError):
    """La PWI tiene menos adquisiciones que la ventana temporal"""


class IncompatibleCheckpointError(PipelineError):
    """Nombres o dimensiones del checkpoint no coinciden con la arquitectura"""


class UndefinedDistanceError(PipelineError):
    """Distancia de superficie indefinida (máscara vacía)"""


# Errores numéricos
class NumericalError(PipelineError):
    """Fallo numérico (NaN, divergencia, verificación de gradiente)"""
    exit_code = EXIT_NUMERICAL


class DegenerateSignalError(NumericalError):
    """Señal plana: no hay paso de bolo detectable"""


class DegenerateRangeError(NumericalError):
    """Volumen constante: el escalado lineal no está definido"""
