import logging
import time
from contextlib import contextmanager

from django.conf import settings

logger = logging.getLogger(__name__)


class PhaseTimer:
    """Times the phases of a run and logs slow ones."""

    def __init__(self, label):
        self.label = label
        self.warning_threshold = getattr(settings, "PHASE_TIMING_WARNING_THRESHOLD", 30.0)
        self.critical_threshold = getattr(settings, "PHASE_TIMING_CRITICAL_THRESHOLD", 120.0)
        self.durations = {}

    @contextmanager
    def phase(self, name):
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - start_time
            self.durations[name] = duration
            self._report(name, duration)

    def _report(self, name, duration):
        if duration > self.critical_threshold:
            logger.error(f"CRITICAL: {self.label} phase {name} took {duration:.4f}s")
        elif duration > self.warning_threshold:
            logger.warning(f"SLOW: {self.label} phase {name} took {duration:.4f}s")
        else:
            logger.info(f"{self.label} phase {name} took {duration:.4f}s")

    @property
    def total(self):
        return sum(self.durations.values())
