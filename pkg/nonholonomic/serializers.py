import math
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from django.conf import settings
from rest_framework import serializers

from . import scenarios
from .conf import get_tolerances
from .exceptions import ConfigError, InvalidParams, UnknownScenario
from .validators import (
    AngleGuardValidator,
    NonNegativeValidator,
    OpenIntervalValidator,
    PositiveValidator,
)


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare"""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown field."] for key in unknown})
        return super().to_internal_value(data)


def validation_message(errors, prefix=""):
    """First ``(dotted field path, message)`` pair of a DRF error structure."""
    if isinstance(errors, Mapping) and errors:
        key, value = next(iter(errors.items()))
        if key != "non_field_errors":
            prefix = f"{prefix}.{key}" if prefix else str(key)
        return validation_message(value, prefix)
    if isinstance(errors, (list, tuple)) and errors:
        return validation_message(errors[0], prefix)
    return prefix or "non_field_errors", str(errors)


def describe_serializer(serializer_class):
    """Parameter schema for ``list_scenarios``."""
    schema = {}
    for name, field in serializer_class().fields.items():
        entry = {"type": type(field).__name__.replace("Field", "").lower()}
        if field.default is not serializers.empty:
            entry["default"] = field.default() if callable(field.default) else field.default
        if isinstance(field, serializers.ChoiceField):
            entry["choices"] = list(field.choices)
        help_texts = [v.get_help_text() for v in field.validators if hasattr(v, "get_help_text")]
        if help_texts:
            entry["help_text"] = " ".join(help_texts)
        schema[name] = entry
    return schema


def positive(default):
    return serializers.FloatField(default=default, validators=[PositiveValidator()])


class FreeBilliardParamsSerializer(StrictSerializer):
    mass = positive(1.0)
    radius = positive(1.0)
    x0 = serializers.FloatField(default=0.0)
    y0 = serializers.FloatField(default=0.0)
    vx0 = serializers.FloatField(default=1.0)
    vy0 = serializers.FloatField(default=0.0)

    def validate(self, attrs):
        if attrs["x0"] ** 2 + attrs["y0"] ** 2 >= attrs["radius"] ** 2:
            raise serializers.ValidationError({"x0": "Initial position must lie inside the disk."})
        return attrs


class RollingDiskParamsSerializer(StrictSerializer):
    mass = positive(1.0)
    inertia_theta = positive(2.0)
    inertia_phi = positive(3.0)
    radius = positive(0.2)
    x0 = serializers.FloatField(default=0.0)
    y0 = serializers.FloatField(default=0.0)
    theta0 = serializers.FloatField(default=0.0)
    phi0 = serializers.FloatField(default=0.0)
    theta_dot0 = serializers.FloatField(default=2.0)
    phi_dot0 = serializers.FloatField(default=0.5)

    def validate(self, attrs):
        R = attrs["radius"]
        x = attrs["x0"] + R * math.cos(attrs["phi0"])
        y = attrs["y0"] + R * math.sin(attrs["phi0"])
        if x * x + y * y >= 1.0:
            raise serializers.ValidationError({"x0": "Initial configuration must lie inside the wall."})
        return attrs


class PendulumParamsSerializer(StrictSerializer):
    mass = positive(1.0)
    length = serializers.FloatField(default=0.9, validators=[OpenIntervalValidator(0.0, 1.0)])
    gravity = positive(9.8)
    epsilon = serializers.FloatField(default=0.5, validators=[NonNegativeValidator()])
    wall_radius = positive(0.6)
    theta0 = serializers.FloatField(default=0.5, validators=[AngleGuardValidator()])
    theta_dot0 = serializers.FloatField(default=0.0)

    def validate(self, attrs):
        if attrs["length"] * math.sin(attrs["theta0"]) >= attrs["wall_radius"]:
            raise serializers.ValidationError({"theta0": "Initial angle must lie inside the wall."})
        return attrs


class SphericalPendulumParamsSerializer(PendulumParamsSerializer):
    constrained = serializers.BooleanField(default=True)
    phi0 = serializers.FloatField(default=0.0)
    phi_dot0 = serializers.FloatField(default=1.0)


class ReducedPendulumParamsSerializer(PendulumParamsSerializer):
    connection = serializers.ChoiceField(choices=["trivial", "adapted"], default="trivial")
    xi0 = serializers.FloatField(default=None, allow_null=True)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        adapted = attrs["connection"] == "adapted"
        if attrs.get("xi0") is None:
            attrs["xi0"] = 0.0 if adapted else 1.0
        elif adapted and attrs["xi0"] != 0.0:
            raise serializers.ValidationError({"xi0": "The adapted connection requires xi0 = 0."})
        return attrs


class RigidBodySuslovParamsSerializer(StrictSerializer):
    inertia_1 = positive(1.0)
    inertia_2 = positive(2.0)
    inertia_3 = positive(3.0)
    product_12 = serializers.FloatField(default=0.0)
    product_13 = serializers.FloatField(default=0.2)
    product_23 = serializers.FloatField(default=0.1)
    xi0 = serializers.ListField(
        child=serializers.FloatField(), min_length=3, max_length=3, default=[1.0, 0.5, 0.0]
    )
    suslov = serializers.BooleanField(default=True)

    def validate(self, attrs):
        inertia = scenarios.inertia_tensor(attrs)
        if np.min(np.linalg.eigvalsh(inertia)) <= 0.0:
            raise serializers.ValidationError({"inertia_1": "Inertia tensor must be positive definite."})
        if attrs["suslov"] and attrs["xi0"][2] != 0.0:
            raise serializers.ValidationError({"xi0": "The Suslov constraint requires xi0[2] = 0."})
        return attrs


class ScenarioSelectionSerializer(StrictSerializer):
    name = serializers.CharField()
    params = serializers.DictField(default=dict)

    def validate_name(self, value):
        try:
            scenarios.get_scenario(value)
        except UnknownScenario as exc:
            raise serializers.ValidationError(
                f"Unknown scenario. Choose one of: {', '.join(scenarios.scenario_names())}."
            ) from exc
        return value

    def validate(self, attrs):
        try:
            validated = scenarios.validate_params(attrs["name"], attrs.get("params"))
        except InvalidParams as exc:
            raise serializers.ValidationError({"params": exc.context.get("errors", exc.message)}) from exc
        attrs["params"] = validated.values
        return attrs


class RunConfigSerializer(StrictSerializer):
    """Validates a run configuration and fills scenario defaults"""

    schema_version = serializers.IntegerField()
    scenario = ScenarioSelectionSerializer()
    mode = serializers.ChoiceField(choices=list(scenarios.MODES), default=None, allow_null=True)
    t_final = serializers.FloatField(default=None, allow_null=True, validators=[PositiveValidator()])
    h = serializers.FloatField(default=None, allow_null=True, validators=[PositiveValidator()])
    tolerances = serializers.DictField(child=serializers.FloatField(), default=dict)
    out_dir = serializers.CharField(default="", allow_blank=True)
    seed = serializers.IntegerField(default=0, min_value=0)
    audit = serializers.BooleanField(default=True)
    free_vertical = serializers.BooleanField(default=False)

    def validate_schema_version(self, value):
        expected = getattr(settings, "RUN_CONFIG_SCHEMA_VERSION", 1)
        if value != expected:
            raise serializers.ValidationError(f"Unsupported schema version; expected {expected}.")
        return value

    def validate_tolerances(self, value):
        try:
            get_tolerances(value)
        except ConfigError as exc:
            raise serializers.ValidationError(exc.message) from exc
        return value

    def validate(self, attrs):
        scenario = scenarios.get_scenario(attrs["scenario"]["name"])
        mode = attrs.get("mode") or scenario.default_mode
        if mode not in scenario.modes:
            if mode == scenarios.COMPARE:
                message = f"{scenario.name} is not reducible; compare mode needs a reducible scenario."
            else:
                message = f"{scenario.name} supports modes: {', '.join(scenario.modes)}."
            raise serializers.ValidationError({"mode": message})
        attrs["mode"] = mode
        if attrs.get("t_final") is None:
            attrs["t_final"] = scenario.default_t_final
        if attrs.get("h") is None:
            attrs["h"] = scenario.default_h
        if not attrs["out_dir"]:
            attrs["out_dir"] = str(Path(settings.SIMULATION_OUTPUT_ROOT) / f"{scenario.name}-{mode}")
        return attrs


def parse_run_config(data):
    """Validated config dict; raises ConfigError naming the offending field."""
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        field_name, message = validation_message(serializer.errors)
        raise ConfigError(f"{field_name}: {message}", field=field_name, errors=serializer.errors)
    return serializer.validated_data


class FloatOrNoneField(serializers.FloatField):
    """Float output that maps NaN and infinities to null."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


class VectorField(serializers.ListField):
    child = FloatOrNoneField()

    def to_representation(self, data):
        return [self.child.to_representation(item) for item in np.asarray(data, dtype=float).ravel()]


class ImpactRecordSerializer(serializers.Serializer):
    t_impact = FloatOrNoneField()
    q = VectorField()
    v_minus = VectorField()
    v_plus = VectorField()
    p_minus = VectorField()
    p_plus = VectorField()
    lambda0 = FloatOrNoneField()
    e_minus = FloatOrNoneField()
    e_plus = FloatOrNoneField()
    metric = serializers.CharField()
    iterations = serializers.IntegerField()

    def get_fields(self):
        fields = super().get_fields()
        # ``lambda`` is a keyword, so the field is added here
        fields["lambda"] = VectorField(source="lambdas")
        return fields


class CheckResultSerializer(serializers.Serializer):
    name = serializers.CharField()
    status = serializers.SerializerMethodField()
    worst_residual = FloatOrNoneField(allow_null=True)
    tolerance = FloatOrNoneField(allow_null=True)
    locations = serializers.ListField(child=serializers.IntegerField())
    detail = serializers.CharField(allow_blank=True)

    def get_status(self, obj):
        return obj.status.value


class AuditReportSerializer(serializers.Serializer):
    subject = serializers.CharField()
    passed = serializers.BooleanField()
    checks = CheckResultSerializer(many=True)
