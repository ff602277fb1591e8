import logging

from celery import shared_task
from django.core.management import call_command
from django.core.management.base import CommandError

logger = logging.getLogger(__name__)


@shared_task
def run_simulation(config_path, **overrides):
    """Run one config file through ``simulate``; returns the exit code."""
    try:
        call_command('simulate', config=config_path, **overrides)
    except CommandError as exc:
        logger.warning(f"Simulation {config_path} exited with {exc.returncode}: {exc}")
        return exc.returncode
    return 0
