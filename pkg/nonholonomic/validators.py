import math

from django.core.exceptions import ValidationError
from django.utils.translation import gettext as _

from .conf import get_tolerances


class PositiveValidator:
    """
    Validates that a physical parameter is strictly positive.
    """

    def __call__(self, value):
        self.validate(value)

    def validate(self, value):
        if not (math.isfinite(value) and value > 0):
            raise ValidationError(
                _("Must be > 0."),
                code='not_positive',
            )

    def get_help_text(self):
        return _("Must be strictly positive.")


class NonNegativeValidator:
    """
    Validates that a parameter is zero or positive.
    """

    def __call__(self, value):
        self.validate(value)

    def validate(self, value):
        if not (math.isfinite(value) and value >= 0):
            raise ValidationError(
                _("Must be >= 0."),
                code='negative',
            )

    def get_help_text(self):
        return _("Must be zero or positive.")


class OpenIntervalValidator:
    """
    Validates that a parameter lies strictly between two bounds.
    """

    def __init__(self, lower, upper):
        self.lower = lower
        self.upper = upper

    def __call__(self, value):
        self.validate(value)

    def validate(self, value):
        if not (math.isfinite(value) and self.lower < value < self.upper):
            raise ValidationError(
                _("Must lie strictly between %(lower)s and %(upper)s.") % {
                    'lower': self.lower,
                    'upper': self.upper,
                },
                code='out_of_interval',
            )

    def get_help_text(self):
        return _("Must lie strictly between %(lower)s and %(upper)s.") % {
            'lower': self.lower,
            'upper': self.upper,
        }


class AngleGuardValidator:
    """
    Validates that a polar angle stays away from the poles theta = k*pi,
    where the rotation about the axis is not free.
    """

    def __init__(self, guard=None):
        self.guard = guard

    def __call__(self, value):
        self.validate(value)

    def validate(self, value):
        guard = self.guard if self.guard is not None else get_tolerances().angle_guard
        if not math.isfinite(value) or pole_distance(value) < guard:
            raise ValidationError(
                _("Must be at least %(guard)s away from a multiple of pi.") % {'guard': guard},
                code='near_pole',
            )

    def get_help_text(self):
        return _("Polar angle must stay away from multiples of pi.")


def pole_distance(theta):
    """Distance from ``theta`` to the nearest multiple of pi."""
    return abs(theta - math.pi * round(theta / math.pi))
