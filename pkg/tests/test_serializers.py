import json
import math
from pathlib import Path

import numpy as np
import pytest

from nonholonomic.exceptions import ConfigError
from nonholonomic.impact import ImpactRecord
from nonholonomic.reports import AuditReport, CheckResult
from nonholonomic.runner import parse_config, serialize_config
from nonholonomic.serializers import (
    AuditReportSerializer,
    ImpactRecordSerializer,
    parse_run_config,
    validation_message,
)
from nonholonomic.writers import (
    render_json,
    write_events_jsonl,
    write_report,
    write_trajectory_csv,
)


def config(**overrides):
    data = {"schema_version": 1, "scenario": {"name": "spherical_pendulum", "params": {}}}
    data.update(overrides)
    return data


def impact_record(**overrides):
    values = dict(
        t_impact=0.25,
        q=np.array([0.5, 0.1]),
        v_minus=np.array([1.0, 2.0]),
        v_plus=np.array([-1.0, 2.0]),
        p_minus=np.array([1.0, 0.5]),
        p_plus=np.array([-1.0, 0.5]),
        lambda0=-2.0,
        lambdas=np.array([0.125]),
        e_minus=3.0,
        e_plus=3.0,
        iterations=2,
    )
    values.update(overrides)
    return ImpactRecord(**values)


class TestRunConfig:
    def test_defaults_are_filled(self, out_dir):
        validated = parse_run_config(config())
        assert validated["mode"] == "full"
        assert validated["t_final"] == 10.0
        assert validated["h"] == 1e-3
        assert validated["seed"] == 0
        assert validated["audit"] is True
        assert Path(validated["out_dir"]) == out_dir / "runs" / "spherical_pendulum-full"
        assert validated["scenario"]["params"]["length"] == 0.9

    def test_round_trip(self, out_dir):
        first = parse_config(config(mode="compare", h=5e-4, tolerances={"constraint_tol": 1e-9}, seed=4))
        second = parse_config(serialize_config(first))
        assert first == second
        assert second.tolerances == {"constraint_tol": 1e-9}

    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"h": -1e-3}, "h"),
            ({"t_final": 0.0}, "t_final"),
            ({"seed": -1}, "seed"),
            ({"schema_version": 2}, "schema_version"),
            ({"colour": "red"}, "colour"),
            ({"mode": "sideways"}, "mode"),
            ({"tolerances": {"made_up_tol": 1.0}}, "tolerances"),
            ({"tolerances": {"boundary_tol": -1.0}}, "tolerances"),
            ({"scenario": {"name": "nowhere"}}, "scenario.name"),
            ({"scenario": {"name": "spherical_pendulum", "params": {"length": 2.0}}}, "scenario.params.length"),
        ],
    )
    def test_errors_name_the_field(self, overrides, field, out_dir):
        with pytest.raises(ConfigError) as excinfo:
            parse_run_config(config(**overrides))
        assert excinfo.value.context["field"] == field
        assert excinfo.value.message.startswith(f"{field}: ")

    def test_compare_needs_a_reducible_scenario(self, out_dir):
        with pytest.raises(ConfigError) as excinfo:
            parse_run_config(config(scenario={"name": "rolling_disk"}, mode="compare"))
        assert excinfo.value.context["field"] == "mode"
        assert "not reducible" in excinfo.value.message

    def test_rigid_body_defaults_to_eps_mode(self, out_dir):
        assert parse_run_config(config(scenario={"name": "rigid_body_suslov"}))["mode"] == "eps"


class TestValidationMessage:
    def test_nested_path(self):
        errors = {"scenario": {"params": {"theta0": ["Too close."]}}}
        assert validation_message(errors) == ("scenario.params.theta0", "Too close.")

    def test_non_field_errors_keep_parent_path(self):
        assert validation_message({"scenario": {"non_field_errors": ["Bad."]}}) == ("scenario", "Bad.")


class TestOutputSerializers:
    def test_impact_record_uses_lambda_key(self):
        data = ImpactRecordSerializer(impact_record()).data
        assert data["lambda"] == [0.125]
        assert "lambdas" not in data
        assert data["q"] == [0.5, 0.1]
        assert data["metric"] == "kinetic"

    def test_non_finite_values_become_null(self):
        data = ImpactRecordSerializer(impact_record(lambda0=math.nan, e_plus=math.inf)).data
        assert data["lambda0"] is None
        assert data["e_plus"] is None

    def test_audit_report(self):
        report = AuditReport(subject="trajectory:test")
        report.add(CheckResult.measure("energy_drift", 2e-7, 1e-7, locations=[3]))
        report.add(CheckResult.skipped("zeno", "no impacts"))
        data = AuditReportSerializer(report).data
        assert data["passed"] is False
        assert data["checks"][0]["status"] == "fail"
        assert data["checks"][0]["locations"] == [3]
        assert data["checks"][1]["worst_residual"] is None

    def test_json_rendering_is_compact_by_default(self):
        assert render_json({"a": [1, 2]}) == b'{"a":[1,2]}'


class TestWriters:
    def test_trajectory_csv_columns_and_precision(self, simulate, tmp_path, read_trajectory):
        _, trajectory = simulate("spherical_pendulum", t_final=0.05, h=1e-2)
        path = write_trajectory_csv(trajectory, tmp_path / "trajectory.csv")
        frame = read_trajectory(path)
        assert list(frame.columns) == ["t", "q_1", "q_2", "v_1", "v_2", "p_1", "p_2", "energy", "constraint_residual"]
        np.testing.assert_array_equal(frame["q_1"].to_numpy(), trajectory.x[:, 0])
        np.testing.assert_array_equal(frame["energy"].to_numpy(), trajectory.energy)
        assert b"\r\n" not in path.read_bytes()

    def test_events_jsonl(self, tmp_path, read_events):
        path = write_events_jsonl([impact_record(), impact_record(t_impact=0.5)], tmp_path / "events.jsonl")
        lines = path.read_bytes().splitlines()
        assert len(lines) == 2
        frame = read_events(path)
        assert list(frame["t_impact"]) == [0.25, 0.5]
        assert frame["lambda"][0] == [0.125]

    def test_no_events_gives_empty_file(self, tmp_path):
        path = write_events_jsonl([], tmp_path / "events.jsonl")
        assert path.read_bytes() == b""

    def test_report_document(self, tmp_path):
        report = AuditReport(subject="equivalence:test")
        report.add(CheckResult.measure("sigma", 1e-7, 1e-5))
        path = write_report(report, tmp_path / "equivalence_report.json")
        data = json.loads(path.read_text())
        assert data["subject"] == "equivalence:test"
        assert data["passed"] is True
        assert path.read_bytes().endswith(b"}\n")
