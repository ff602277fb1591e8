"""
Django development settings for core project.
"""

from .base import *

DEBUG = True

ALLOWED_HOSTS = ["localhost", "127.0.0.1"]

# Run batch tasks inline so no broker is needed on a workstation
CELERY_TASK_ALWAYS_EAGER = True
CELERY_TASK_EAGER_PROPAGATES = True

# Slow phases are worth hearing about sooner during development
PHASE_TIMING_WARNING_THRESHOLD = float(os.getenv("PHASE_TIMING_WARNING_THRESHOLD", "10"))
