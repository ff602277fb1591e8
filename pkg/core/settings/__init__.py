"""
Settings entry point; DJANGO_ENVIRONMENT picks the layer.

dev (default) runs celery tasks inline, prod sends them to redis.
"""
import os

environment = os.environ.get('DJANGO_ENVIRONMENT', 'dev').lower()

if environment == 'prod':
    from .prod import *
else:
    from .dev import *
