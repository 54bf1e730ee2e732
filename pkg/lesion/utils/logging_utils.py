"""
Utilidades para logging en el proyecto pwinet.

Este módulo proporciona el formateador JSON (una línea por registro, a stderr)
y el decorador para registrar los pasos del pipeline de forma consistente.
"""
import functools
import json
import logging
import time
from datetime import datetime, timezone

# Atributos estándar de LogRecord que no se copian al JSON
_RESERVED = set(vars(logging.LogRecord('', 0, '', 0, '', (), None))) | {'message', 'asctime'}


def get_logger(name):
    """
    Obtiene un logger configurado para el módulo especificado.

    Args:
        name: Nombre del módulo, generalmente __name__

    Returns:
        Un objeto logger configurado
    """
    return logging.getLogger(name)


class JsonLineFormatter(logging.Formatter):
    """
    Formatea cada registro como un objeto JSON en una sola línea.

    Los campos ``step`` y ``details`` pasados vía ``extra`` se aplanan en el
    objeto; el resto de atributos personalizados se añaden tal cual.
    """

    def format(self, record):
        payload = {
            'ts': datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key in _RESERVED or key.startswith('_'):
                continue
            if key == 'details' and isinstance(value, dict):
                payload.update(value)
            else:
                payload[key] = value
        if record.exc_info:
            payload['exc_info'] = self.formatException(record.exc_info)
        return json.dumps(payload, sort_keys=True, default=str)


def log_step(logger):
    """
    Decorador para registrar el inicio, fin y duración de un paso del pipeline.

    Args:
        logger: Objeto logger a utilizar

    Returns:
        Decorador configurado
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            logger.debug(f"{func.__name__} - Starting", extra={'step': func.__name__})

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration = time.perf_counter() - start_time
                logger.error(
                    f"{func.__name__} - Failed - Exception: {str(e)}",
                    extra={'step': func.__name__, 'details': {'duration_s': round(duration, 4)}},
                )
                raise

            duration = time.perf_counter() - start_time
            logger.info(
                f"{func.__name__} - Completed",
                extra={'step': func.__name__, 'details': {'duration_s': round(duration, 4)}},
            )
            return result

        return wrapper

    return decorator
