"""
Django base settings for core project.
Common settings shared across all environments.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables first
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "nonsmooth-nh-insecure-key")

# Application definition
DJANGO_APPS = [
    "django.contrib.contenttypes",
]

THIRD_PARTY_APPS = [
    "rest_framework",
]

LOCAL_APPS = [
    "nonholonomic",
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Simulations keep no database state; artifacts go to disk.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Where `manage.py simulate` writes when no --out-dir is given
SIMULATION_OUTPUT_ROOT = Path(os.getenv("NONSMOOTH_NH_OUTPUT_ROOT", BASE_DIR / "runs"))

# Config files carry this version; anything else is rejected
RUN_CONFIG_SCHEMA_VERSION = 1

# Central tolerance table. Every check and solver reads from here.
NONHOLONOMIC_TOLERANCES = {
    "rank_rtol": 1e-10,
    "boundary_tol": 1e-9,
    "legendre_tol": 1e-9,
    "constraint_tol": 1e-8,
    "kkt_residual_tol": 1e-10,
    "kkt_condition_limit": 1e12,
    "jump_tol": 1e-9,
    "energy_jump_tol": 1e-10,
    "energy_drift_tol": 1e-7,
    "force_containment_tol": 1e-6,
    "gradient_tol": 1e-6,
    "derivative_tol": 1e-6,
    "fd_audit_step": 1e-6,
    "orthogonality_tol": 1e-12,
    "symmetry_tol": 1e-9,
    "algebra_tol": 1e-12,
    "newton_tol": 1e-11,
    "max_newton_iters": 50,
    "max_halvings": 20,
    "root_separation_tol": 1e-6,
    "crossing_window": 1e-3,
    "crossing_xtol": 1e-15,
    "time_resolution": 1e-14,
    "grid_rtol": 1e-9,
    "min_interimpact_time": 1e-6,
    "max_impacts": 10000,
    "angle_guard": 1e-3,
    "equivalence_tol": 1e-5,
    "time_match_tol": 1e-9,
}

# Phase timing thresholds (seconds)
PHASE_TIMING_WARNING_THRESHOLD = float(os.getenv("PHASE_TIMING_WARNING_THRESHOLD", "30"))
PHASE_TIMING_CRITICAL_THRESHOLD = float(os.getenv("PHASE_TIMING_CRITICAL_THRESHOLD", "120"))

# Logging configuration
LOG_LEVELS = {
    "error": "ERROR",
    "warn": "WARNING",
    "info": "INFO",
    "debug": "DEBUG",
}
LOG_LEVEL = LOG_LEVELS.get(os.getenv("NONSMOOTH_NH_LOG", "warn").lower(), "WARNING")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
        },
    },
    "loggers": {
        "nonholonomic": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
        "django": {
            "handlers": ["console"],
            "level": "WARNING",
        },
    },
}

# REST Framework settings (serializers and JSON rendering only)
REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "COERCE_DECIMAL_TO_STRING": False,
    "UNAUTHENTICATED_USER": None,
}

# Celery settings
CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "memory://")
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "cache+memory://")
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = "UTC"
