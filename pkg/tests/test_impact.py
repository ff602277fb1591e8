import numpy as np
import pytest

from nonholonomic import scenarios
from nonholonomic.exceptions import NotApproaching, NotOnBoundary, ZenoSuspected
from nonholonomic.impact import (
    DenseSegment,
    ImpactRecord,
    ZenoPolicy,
    impact_map,
    locate_crossing,
    metric_reflection,
    reflection,
    reset_separation,
    zeno_guard,
)
from nonholonomic.reduction import reduced_impact_map


def specular(q, v):
    n = q / np.linalg.norm(q)
    return v - 2.0 * float(v @ n) * n


def record_at(t):
    zero = np.zeros(1)
    return ImpactRecord(
        t_impact=t,
        q=zero,
        v_minus=zero,
        v_plus=zero,
        p_minus=zero,
        p_plus=zero,
        lambda0=0.0,
        lambdas=np.zeros(0),
        e_minus=0.0,
        e_plus=0.0,
    )


def pendulum_contact_angle(length=0.9, wall=0.6):
    return np.arcsin(wall / length)


class TestImpactMap:
    def test_billiard_specular_reflection(self, tolerances):
        system = scenarios.build("free_billiard")
        q = np.array([0.6, 0.8])
        v = np.array([1.0, 0.5])
        record = impact_map(system, q, v, tolerances, t=1.5)
        np.testing.assert_allclose(record.v_plus, specular(q, v), atol=1e-12)
        assert record.t_impact == 1.5
        assert record.e_plus == pytest.approx(record.e_minus, abs=1e-12)
        assert record.metric == "kinetic"

    def test_tangential_velocity_is_not_approaching(self, tolerances):
        system = scenarios.build("free_billiard")
        with pytest.raises(NotApproaching):
            impact_map(system, np.array([1.0, 0.0]), np.array([0.0, 1.0]), tolerances)

    def test_interior_point_is_rejected(self, tolerances):
        system = scenarios.build("free_billiard")
        with pytest.raises(NotOnBoundary):
            impact_map(system, np.array([0.5, 0.0]), np.array([1.0, 0.0]), tolerances)

    def test_rolling_disk_jump_lies_in_coannihilator(self, tolerances):
        system = scenarios.build("rolling_disk")
        R = 0.2
        phi = 0.3
        q = np.array([1.0 - R * np.cos(phi), -R * np.sin(phi), 0.4, phi])
        theta_dot, phi_dot = 2.0, 0.5
        v = np.array([R * theta_dot * np.cos(phi), R * theta_dot * np.sin(phi), theta_dot, phi_dot])
        record = impact_map(system, q, v, tolerances)

        rows = system.constraint_rows(q)
        db = system.boundary_covector(q)
        assert np.max(np.abs(rows @ record.v_plus)) <= tolerances.constraint_tol
        assert float(db @ record.v_plus) < 0.0
        jump = record.p_plus - record.p_minus
        np.testing.assert_allclose(jump, record.lambda0 * db + rows.T @ record.lambdas, atol=1e-9)
        assert abs(record.e_plus - record.e_minus) <= 1e-10

    def test_constrained_reflection_is_the_quadratic_solution(self, tolerances):
        system = scenarios.build("rolling_disk")
        R = 0.2
        phi = 1.1
        q = np.array([1.0 - R * np.cos(phi), -R * np.sin(phi), 0.0, phi])
        v = np.array([R * np.cos(phi), R * np.sin(phi), 1.0, 0.3])
        record = impact_map(system, q, v, tolerances)
        np.testing.assert_allclose(record.v_plus, reflection(system, q, v, tolerances), atol=1e-10)

    def test_reduced_pendulum_jump_is_along_dtheta(self, tolerances):
        spec = scenarios.build("reduced_pendulum", {"connection": "trivial", "xi0": 1.0})
        sigma = np.array([pendulum_contact_angle()])
        record = reduced_impact_map(spec, sigma, np.array([0.8]), np.array([1.0]), tolerances)
        jump = record.p_plus - record.p_minus
        # y jumps by lambda0 * L cos(theta); rho is untouched
        assert jump[0] == pytest.approx(record.lambda0 * 0.9 * np.cos(sigma[0]), rel=1e-9)
        assert abs(jump[1]) <= 1e-12
        assert record.v_plus[0] == pytest.approx(-0.8, rel=1e-9)
        assert record.v_plus[1] == pytest.approx(1.0, rel=1e-9)


class TestBilliardOracle:
    def test_random_runs_match_specular_reflection(self, simulate, rng):
        for _ in range(20):
            radius = rng.uniform(0.0, 0.8)
            angle = rng.uniform(0.0, 2.0 * np.pi)
            heading = rng.uniform(0.0, 2.0 * np.pi)
            speed = rng.uniform(0.5, 2.0)
            params = {
                "x0": radius * np.cos(angle),
                "y0": radius * np.sin(angle),
                "vx0": speed * np.cos(heading),
                "vy0": speed * np.sin(heading),
            }
            _, trajectory = simulate("free_billiard", t_final=3.0, h=1e-2, params=params)
            assert trajectory.events
            for event in trajectory.events:
                np.testing.assert_allclose(event.v_plus, specular(event.q, event.v_minus), atol=1e-9)


class TestResetSeparation:
    def test_separation_identity_on_billiard(self, tolerances, rng):
        system = scenarios.build("free_billiard")
        for _ in range(100):
            angle = rng.uniform(0.0, 2.0 * np.pi)
            q = np.array([np.cos(angle), np.sin(angle)])
            v = rng.normal(size=2)
            jump = metric_reflection(system, q, v) - v
            metric, _ = system.metric(q, v)
            norm = np.sqrt(float(jump @ metric @ jump))
            assert norm == pytest.approx(reset_separation(system, q, v, tolerances), abs=1e-12)

    def test_separation_identity_on_pendulum(self, tolerances, rng):
        system = scenarios.build("spherical_pendulum")
        theta = pendulum_contact_angle()
        for _ in range(100):
            q = np.array([theta, rng.uniform(-np.pi, np.pi)])
            v = rng.normal(size=2)
            jump = metric_reflection(system, q, v) - v
            metric, _ = system.metric(q, v)
            norm = np.sqrt(float(jump @ metric @ jump))
            assert norm == pytest.approx(reset_separation(system, q, v, tolerances), abs=1e-12)


class TestZenoGuard:
    def test_separated_impacts_pass(self, tolerances):
        zeno_guard([record_at(0.1), record_at(0.2), record_at(0.3)], ZenoPolicy.from_tolerances(tolerances))

    def test_close_impacts_raise_with_pair(self, tolerances):
        with pytest.raises(ZenoSuspected) as excinfo:
            zeno_guard(
                [record_at(0.1), record_at(0.2), record_at(0.2 + 1e-8)],
                ZenoPolicy.from_tolerances(tolerances),
            )
        assert excinfo.value.context["pair"] == [1, 2]

    def test_impact_count_limit(self):
        policy = ZenoPolicy(min_interimpact_time=1e-6, max_impacts=2)
        with pytest.raises(ZenoSuspected):
            zeno_guard([record_at(0.1), record_at(0.2), record_at(0.3)], policy)


class TestLocateCrossing:
    def test_linear_segment_root(self, tolerances):
        segment = DenseSegment(
            t0=0.0,
            t1=1.0,
            x0=np.array([0.0]),
            x1=np.array([2.0]),
            xdot0=np.array([2.0]),
            xdot1=np.array([2.0]),
        )
        t = locate_crossing(segment, lambda x: float(x[0]) - 1.5, tolerances)
        assert t == pytest.approx(0.75, abs=1e-14)

    def test_no_crossing(self, tolerances):
        segment = DenseSegment(
            t0=0.0,
            t1=1.0,
            x0=np.array([0.0]),
            x1=np.array([0.5]),
            xdot0=np.array([0.5]),
            xdot1=np.array([0.5]),
        )
        assert locate_crossing(segment, lambda x: float(x[0]) - 1.5, tolerances) is None

    @staticmethod
    def chord(t1):
        start = np.array([0.0, -1.0])
        velocity = np.array([1.0, 1.0])
        return DenseSegment(
            t0=0.0, t1=t1, x0=start, x1=start + t1 * velocity, xdot0=velocity, xdot1=velocity
        )

    def test_departing_segment_skips_the_start_root(self, tolerances):
        t = locate_crossing(self.chord(2.0), lambda x: float(x @ x) - 1.0, tolerances, departing=True)
        assert t == pytest.approx(1.0, abs=1e-12)

    def test_departing_exit_inside_first_subinterval_is_not_reported(self, tolerances):
        segment = self.chord(20.0)
        assert locate_crossing(segment, lambda x: float(x @ x) - 1.0, tolerances, departing=True) is None
