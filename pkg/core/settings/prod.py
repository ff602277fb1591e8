"""
Django production settings for core project.
"""

from .base import *

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", SECRET_KEY)

DEBUG = False

ALLOWED_HOSTS = []

# Batch runs go through a real broker in production
CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "redis://redis:6379/0")
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "redis://redis:6379/0")
CELERY_TASK_ALWAYS_EAGER = False
