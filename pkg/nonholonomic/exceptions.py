"""
Error hierarchy for simulations.

Every error carries a machine-readable ``code`` and a ``context`` dict so the
CLI and the audit report can surface the offending values.
"""


class SimulationError(Exception):
    """Base class for every failure raised by the nonholonomic app."""

    default_code = "simulation_error"

    def __init__(self, message, code=None, **context):
        super().__init__(message)
        self.message = message
        self.code = code or self.default_code
        self.context = context

    def as_dict(self):
        return {"code": self.code, "message": self.message, "context": self.context}


class InvalidSpec(SimulationError):
    default_code = "invalid_spec"


class RankDeficient(SimulationError):
    default_code = "rank_deficient"


class NotOnBoundary(SimulationError):
    default_code = "not_on_boundary"


class SingularKKT(SimulationError):
    default_code = "singular_kkt"


class ConstraintDriftExceeded(SimulationError):
    default_code = "constraint_drift_exceeded"


class GuardViolation(SimulationError):
    """A trajectory entered a region where the model is not valid."""

    default_code = "guard_violation"


class InvalidInitialState(SimulationError):
    default_code = "invalid_initial_state"


class ImpactError(SimulationError):
    default_code = "impact_error"


class TrivialRootOnly(ImpactError):
    default_code = "trivial_root_only"


class NoConvergence(ImpactError):
    default_code = "no_convergence"


class DegenerateContact(ImpactError):
    default_code = "degenerate_contact"


class NotApproaching(ImpactError):
    default_code = "not_approaching"


class ZenoSuspected(SimulationError):
    default_code = "zeno_suspected"


class LayoutMismatch(SimulationError):
    default_code = "layout_mismatch"


class MissingGenerators(SimulationError):
    default_code = "missing_generators"


class GridMismatch(SimulationError):
    default_code = "grid_mismatch"


class UnknownScenario(SimulationError):
    default_code = "unknown_scenario"


class InvalidParams(SimulationError):
    default_code = "invalid_params"


class ConfigError(SimulationError):
    default_code = "config_error"
