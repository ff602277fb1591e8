"""
Access to the central tolerance table.

All solvers and audit checks take a ``Tolerances`` instance; acceptance
thresholds, solver limits and audit step sizes are all read from it. The only
numeric constants outside the table are finite-difference steps derived from
machine epsilon and root-finder relative tolerances at machine precision.
"""
import math
from dataclasses import dataclass, fields, replace

from django.conf import settings

from .exceptions import ConfigError


@dataclass(frozen=True)
class Tolerances:
    rank_rtol: float = 1e-10
    boundary_tol: float = 1e-9
    legendre_tol: float = 1e-9
    constraint_tol: float = 1e-8
    kkt_residual_tol: float = 1e-10
    kkt_condition_limit: float = 1e12
    jump_tol: float = 1e-9
    energy_jump_tol: float = 1e-10
    energy_drift_tol: float = 1e-7
    force_containment_tol: float = 1e-6
    gradient_tol: float = 1e-6
    derivative_tol: float = 1e-6
    fd_audit_step: float = 1e-6
    orthogonality_tol: float = 1e-12
    symmetry_tol: float = 1e-9
    algebra_tol: float = 1e-12
    newton_tol: float = 1e-11
    max_newton_iters: int = 50
    max_halvings: int = 20
    root_separation_tol: float = 1e-6
    crossing_window: float = 1e-3
    crossing_xtol: float = 1e-15
    time_resolution: float = 1e-14
    grid_rtol: float = 1e-9
    min_interimpact_time: float = 1e-6
    max_impacts: int = 10000
    angle_guard: float = 1e-3
    equivalence_tol: float = 1e-5
    time_match_tol: float = 1e-9

    def with_overrides(self, overrides=None):
        if not overrides:
            return self
        unknown = set(overrides) - tolerance_names()
        if unknown:
            raise ConfigError(
                f"Unknown tolerance keys: {', '.join(sorted(unknown))}",
                field="tolerances",
            )
        cast = {}
        for key, value in overrides.items():
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(
                    f"tolerances.{key}: must be a finite number > 0",
                    field=f"tolerances.{key}",
                )
            if isinstance(getattr(self, key), int):
                if float(value) != int(value):
                    raise ConfigError(
                        f"tolerances.{key}: must be a whole number, got {value}",
                        field=f"tolerances.{key}",
                    )
                cast[key] = int(value)
            else:
                cast[key] = float(value)
        return replace(self, **cast)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def tolerance_names():
    return {f.name for f in fields(Tolerances)}


def get_tolerances(overrides=None):
    """Build a ``Tolerances`` from settings.NONHOLONOMIC_TOLERANCES plus overrides."""
    table = dict(getattr(settings, "NONHOLONOMIC_TOLERANCES", {}))
    unknown = set(table) - tolerance_names()
    if unknown:
        raise ConfigError(
            f"NONHOLONOMIC_TOLERANCES has unknown keys: {', '.join(sorted(unknown))}",
            field="NONHOLONOMIC_TOLERANCES",
        )
    return Tolerances(**table).with_overrides(overrides)
