"""
Django settings for gsgd_project project.

The project has no web surface: Django supplies the configuration layer,
the management commands (run_experiment, bench, sweep_rho, filter_outliers)
and the test runner.

Every experiment default below can be overridden from the environment or
from a .env file at the project root.
"""

from pathlib import Path
import os

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-gsgd-local-experiments-only')

DEBUG = os.getenv('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'trainer.apps.TrainerConfig',
]

MIDDLEWARE = []

# Nothing is persisted through the ORM; run artifacts are flat files.
DATABASES = {}


# Training protocol defaults (epochs, runs, splits, eta, rho)
GSGD_EPOCHS = int(os.getenv('GSGD_EPOCHS', '50'))
GSGD_MAX_UPDATES = int(os.getenv('GSGD_MAX_UPDATES', '0'))  # 0 = no cap
GSGD_RUNS = int(os.getenv('GSGD_RUNS', '30'))
GSGD_TEST_FRACTION = float(os.getenv('GSGD_TEST_FRACTION', '0.2'))
GSGD_VALIDATION_FRACTION = float(os.getenv('GSGD_VALIDATION_FRACTION', '0.2'))
GSGD_ETA = float(os.getenv('GSGD_ETA', '0.2'))
GSGD_RHO = int(os.getenv('GSGD_RHO', '10'))
GSGD_WORKERS = int(os.getenv('GSGD_WORKERS', '10'))
GSGD_BATCH_SIZE = int(os.getenv('GSGD_BATCH_SIZE', '10'))
GSGD_REPLAY_CAP = int(os.getenv('GSGD_REPLAY_CAP', '4'))
GSGD_RANK_BY = os.getenv('GSGD_RANK_BY', 'verif')
GSGD_BASE_SEED = int(os.getenv('GSGD_BASE_SEED', '0'))

# Optimizer constants
GSGD_RMSPROP_BETA = float(os.getenv('GSGD_RMSPROP_BETA', '0.9'))
GSGD_EPSILON = float(os.getenv('GSGD_EPSILON', '1e-8'))
GSGD_RMSPROP_INIT = os.getenv('GSGD_RMSPROP_INIT', 'paper')

# Data handling
GSGD_IQR_FACTOR = float(os.getenv('GSGD_IQR_FACTOR', '3.0'))
GSGD_INIT_RANGE = float(os.getenv('GSGD_INIT_RANGE', '0.05'))

# Engine
GSGD_SCHEDULER = os.getenv('GSGD_SCHEDULER', 'simulated')
GSGD_LATENCY = os.getenv('GSGD_LATENCY', '0:0')
GSGD_DIVERGENCE_THRESHOLD = float(os.getenv('GSGD_DIVERGENCE_THRESHOLD', '1e6'))
GSGD_OUTPUT_DIR = os.getenv('GSGD_OUTPUT_DIR', str(BASE_DIR / 'results'))

# MQTT live metrics feed (disabled while the host is empty)
GSGD_MQTT_BROKER_HOST = os.getenv('GSGD_MQTT_BROKER_HOST', '')
GSGD_MQTT_BROKER_PORT = int(os.getenv('GSGD_MQTT_BROKER_PORT', '1883'))
GSGD_MQTT_USERNAME = os.getenv('GSGD_MQTT_USERNAME', '')
GSGD_MQTT_PASSWORD = os.getenv('GSGD_MQTT_PASSWORD', '')
GSGD_MQTT_TOPIC_PREFIX = os.getenv('GSGD_MQTT_TOPIC_PREFIX', 'gsgd/runs')
GSGD_MQTT_FLUSH_TIMEOUT = float(os.getenv('GSGD_MQTT_FLUSH_TIMEOUT', '5'))


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'trainer': {
            'handlers': ['console'],
            'level': os.getenv('GSGD_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
