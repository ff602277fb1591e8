import math

import numpy as np
import pytest
from django.conf import settings

from nonholonomic import scenarios
from nonholonomic.conf import Tolerances, get_tolerances, tolerance_names
from nonholonomic.exceptions import ConfigError, SingularKKT


class TestToleranceTable:
    def test_settings_table_covers_every_tolerance(self):
        assert set(settings.NONHOLONOMIC_TOLERANCES) == tolerance_names()

    def test_settings_table_matches_defaults(self):
        assert get_tolerances() == Tolerances()

    def test_unknown_settings_key_is_rejected(self, settings):
        settings.NONHOLONOMIC_TOLERANCES = {**settings.NONHOLONOMIC_TOLERANCES, "bogus_tol": 1.0}
        with pytest.raises(ConfigError) as excinfo:
            get_tolerances()
        assert excinfo.value.context["field"] == "NONHOLONOMIC_TOLERANCES"

    def test_condition_limit_is_read_from_the_table(self):
        system = scenarios.build("rolling_disk")
        q = np.array([0.1, -0.2, 0.3, 0.7])
        v = np.array([0.4 * np.cos(0.7), 0.4 * np.sin(0.7), 2.0, 0.5])
        system.acceleration(q, v, get_tolerances())
        with pytest.raises(SingularKKT):
            system.acceleration(q, v, get_tolerances({"kkt_condition_limit": 1.0}))


class TestOverrides:
    def test_float_override(self):
        assert get_tolerances({"boundary_tol": 1e-6}).boundary_tol == 1e-6

    def test_whole_float_is_accepted_for_counts(self):
        tolerances = get_tolerances({"max_newton_iters": 3.0})
        assert tolerances.max_newton_iters == 3
        assert isinstance(tolerances.max_newton_iters, int)

    @pytest.mark.parametrize("key", ["max_newton_iters", "max_halvings", "max_impacts"])
    def test_fractional_count_is_rejected(self, key):
        with pytest.raises(ConfigError) as excinfo:
            get_tolerances({key: 2.7})
        assert excinfo.value.context["field"] == f"tolerances.{key}"
        assert "whole number" in excinfo.value.message

    @pytest.mark.parametrize("value", [0.0, -1e-9, math.nan, math.inf])
    def test_non_positive_or_non_finite_is_rejected(self, value):
        with pytest.raises(ConfigError) as excinfo:
            get_tolerances({"jump_tol": value})
        assert excinfo.value.context["field"] == "tolerances.jump_tol"

    def test_unknown_override_is_rejected(self):
        with pytest.raises(ConfigError) as excinfo:
            get_tolerances({"bogus_tol": 1.0})
        assert excinfo.value.context["field"] == "tolerances"
