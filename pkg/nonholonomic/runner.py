"""
One simulation run: build, validate, integrate, audit and write artifacts.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenarios
from .audit import audit_equivalence, audit_trajectory
from .conf import get_tolerances
from .geometry import validate_geometry
from .integrator import IntegratorOptions, integrate
from .lagrangian import fd_audit
from .reduction import FREE_VERTICAL, WELL_POSED, reduce_state, validate_reduced
from .serializers import AuditReportSerializer, parse_run_config
from .timing import PhaseTimer
from .writers import write_events_jsonl, write_json, write_report, write_trajectory_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_AUDIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    params: dict
    mode: str
    t_final: float
    h: float
    out_dir: str
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    audit: bool = True
    free_vertical: bool = False
    schema_version: int = 1

    def as_dict(self):
        return {
            "schema_version": self.schema_version,
            "scenario": {"name": self.scenario, "params": dict(self.params)},
            "mode": self.mode,
            "t_final": self.t_final,
            "h": self.h,
            "tolerances": dict(self.tolerances),
            "out_dir": self.out_dir,
            "seed": self.seed,
            "audit": self.audit,
            "free_vertical": self.free_vertical,
        }


def parse_config(data):
    """RunConfig from a config mapping; raises ConfigError on invalid input."""
    validated = parse_run_config(data)
    return RunConfig(
        scenario=validated["scenario"]["name"],
        params=dict(validated["scenario"]["params"]),
        mode=validated["mode"],
        t_final=validated["t_final"],
        h=validated["h"],
        out_dir=validated["out_dir"],
        tolerances=dict(validated["tolerances"]),
        seed=validated["seed"],
        audit=validated["audit"],
        free_vertical=validated["free_vertical"],
        schema_version=validated["schema_version"],
    )


def serialize_config(config):
    return config.as_dict()


@dataclass
class RunResult:
    config: RunConfig
    exit_code: int = EXIT_OK
    trajectory: object = None
    reduced_trajectory: object = None
    reports: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    summaries: list = field(default_factory=list)

    @property
    def passed(self):
        return all(report.passed for report in self.reports)


def _structural_reports(name, system, tolerances, seed):
    points = scenarios.sample_points(name, system, seed=seed)
    if system.mode == "reduced":
        return [validate_reduced(system, points, tolerances)]
    rng = np.random.default_rng(seed)
    samples = [(q, rng.normal(size=system.velocity_dim)) for q in points]
    return [validate_geometry(system, points, tolerances), fd_audit(system.lagrangian_spec, samples, tolerances)]


def run(config):
    """Execute ``config`` and return a RunResult; artifacts land in ``config.out_dir``."""
    result = RunResult(config=config)
    timer = PhaseTimer(f"{config.scenario}/{config.mode}")
    tolerances = get_tolerances(config.tolerances)
    vertical_mode = FREE_VERTICAL if config.free_vertical else WELL_POSED
    options = IntegratorOptions(h=config.h, tolerances=tolerances)
    compare = config.mode == scenarios.COMPARE

    with timer.phase("build"):
        system = scenarios.build(config.scenario, config.params, vertical_mode=vertical_mode)
        state0 = scenarios.initial_state(config.scenario, system, config.params)
        reduced_system = reduced_state0 = None
        if compare:
            scenario = scenarios.get_scenario(config.scenario)
            params = scenarios.validate_params(config.scenario, config.params).values
            partner_name, partner_params = scenario.partner(params)
            reduced_system = scenarios.build(partner_name, partner_params, vertical_mode=vertical_mode)
            reduced_state0 = reduce_state(system.layout, state0)
    result.summaries.append(f"build: {system.name} ({system.mode}), {system.velocity_dim} velocities")
    if vertical_mode == FREE_VERTICAL and (system.mode == "reduced" or compare):
        logger.warning(
            "Free-vertical mode leaves the vertical constraint rows unenforced; "
            "their residual is reported, not controlled"
        )

    with timer.phase("validate"):
        structural = _structural_reports(config.scenario, system, tolerances, config.seed)
        if reduced_system is not None:
            structural += _structural_reports(partner_name, reduced_system, tolerances, config.seed)
    result.reports.extend(structural)
    result.summaries.append(
        "validate: " + "; ".join(report.summary() for report in structural)
    )

    with timer.phase("integrate"):
        trajectory = integrate(system, state0, config.t_final, options)
        result.trajectory = trajectory
        if compare:
            result.reduced_trajectory = integrate(reduced_system, reduced_state0, config.t_final, options)
    result.summaries.append(
        f"integrate: {len(trajectory)} samples, {len(trajectory.events)} impacts to t={config.t_final}"
    )

    equivalence = None
    with timer.phase("audit"):
        if config.audit:
            result.reports.append(audit_trajectory(system, trajectory, tolerances))
            if compare:
                result.reports.append(audit_trajectory(reduced_system, result.reduced_trajectory, tolerances))
                equivalence = audit_equivalence(
                    trajectory, result.reduced_trajectory, system.layout, tolerances, reduced_system=reduced_system
                )
                result.reports.append(equivalence)
    if config.audit:
        failed = sum(len(report.failures) for report in result.reports)
        result.summaries.append(f"audit: {len(result.reports)} reports, {failed} failed checks")
    else:
        result.summaries.append("audit: skipped")

    with timer.phase("write"):
        result.artifacts = _write_artifacts(config, result, equivalence)
    result.summaries.append(f"write: {len(result.artifacts)} files in {config.out_dir}")

    result.exit_code = EXIT_OK if result.passed else EXIT_AUDIT_FAILURE
    logger.info(f"Run {config.scenario}/{config.mode} finished in {timer.total:.3f}s (exit {result.exit_code})")
    return result


def _write_artifacts(config, result, equivalence):
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "trajectory": write_trajectory_csv(result.trajectory, out_dir / "trajectory.csv"),
        "events": write_events_jsonl(result.trajectory.events, out_dir / "events.jsonl"),
    }
    if result.reduced_trajectory is not None:
        artifacts["trajectory_reduced"] = write_trajectory_csv(
            result.reduced_trajectory, out_dir / "trajectory_reduced.csv"
        )
        artifacts["events_reduced"] = write_events_jsonl(
            result.reduced_trajectory.events, out_dir / "events_reduced.jsonl"
        )
    reports = [report for report in result.reports if report is not equivalence]
    artifacts["audit_report"] = write_json(
        {
            "passed": all(report.passed for report in reports),
            "reports": AuditReportSerializer(reports, many=True).data,
        },
        out_dir / "audit_report.json",
    )
    if equivalence is not None:
        artifacts["equivalence_report"] = write_report(equivalence, out_dir / "equivalence_report.json")
    artifacts["run_config"] = write_json(serialize_config(config), out_dir / "run_config.json")
    return artifacts
