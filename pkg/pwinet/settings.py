"""
Configuración Django del proyecto pwinet.

El proyecto no expone HTTP ni usa base de datos: Django aporta la configuración,
el logging, los comandos de gestión (la CLI del pipeline), las plantillas SVG y
el runner de tests.

Para la lista completa de settings, ver
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('SECRET_KEY')
if SECRET_KEY is None:
    # Solo para desarrollo: no hay sesiones ni firmas que proteger
    SECRET_KEY = 'django-insecure-pwinet-desk-scale-pipeline'

DEBUG = os.environ.get('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'rest_framework',
    # Apps locales
    'lesion',
]

# Sin base de datos: Django usa el backend dummy
DATABASES = {}

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [],
        },
    },
]

LANGUAGE_CODE = 'es'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Configuración del pipeline
PWINET = {
    'SEED': int(os.environ.get('PWTK_SEED', '0')),
    'THREADS': int(os.environ.get('PWINET_THREADS', '1')),
    'SLOW_TESTS': os.environ.get('PWINET_SLOW_TESTS', '0') == '1',
}

# Configuración de Logging
LOG_LEVEL = os.environ.get('PWINET_LOG_LEVEL', 'INFO')
LOGS_DIR = os.environ.get('PWINET_LOG_DIR')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'json': {
            '()': 'lesion.utils.logging_utils.JsonLineFormatter',
        },
        'verbose': {
            'format': '{asctime} [{levelname}] {name} {filename}:{lineno:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'json',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'lesion': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

if LOGS_DIR:
    Path(LOGS_DIR).mkdir(parents=True, exist_ok=True)
    LOGGING['handlers']['file_info'] = {
        'level': 'INFO',
        'class': 'logging.handlers.RotatingFileHandler',
        'filename': Path(LOGS_DIR) / 'pipeline.log',
        'maxBytes': 10 * 1024 * 1024,  # 10 MB
        'backupCount': 10,
        'formatter': 'json',
    }
    LOGGING['loggers']['lesion']['handlers'].append('file_info')

# Los tests solo muestran advertencias y errores
if 'test' in sys.argv or 'pytest' in sys.modules:
    LOGGING['loggers']['lesion']['level'] = 'WARNING'
