from dataclasses import replace

import pytest

from nonholonomic import scenarios
from nonholonomic.audit import TRAJECTORY_CHECKS, audit_equivalence, audit_trajectory, match_samples
from nonholonomic.exceptions import GridMismatch
from nonholonomic.integrator import IntegratorOptions, integrate
from nonholonomic.reduction import reduce_state
from nonholonomic.reports import CheckStatus


@pytest.fixture
def billiard_run(simulate):
    return simulate("free_billiard", t_final=2.5, h=1e-2)


def compare_runs(params, tolerances, t_final=0.5, h=1e-4):
    """Full pendulum run and its reduced partner from the reduced initial data."""
    full = scenarios.build("spherical_pendulum", params)
    state0 = scenarios.initial_state("spherical_pendulum", full, params)
    name, partner_params = scenarios.get_scenario("spherical_pendulum").partner(
        scenarios.validate_params("spherical_pendulum", params).values
    )
    reduced = scenarios.build(name, partner_params)
    options = IntegratorOptions(h=h, tolerances=tolerances)
    full_traj = integrate(full, state0, t_final, options)
    reduced_traj = integrate(reduced, reduce_state(full.layout, state0), t_final, options)
    return full, reduced, full_traj, reduced_traj


class TestAuditTrajectory:
    def test_clean_run_passes(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        report = audit_trajectory(system, trajectory, tolerances)
        assert report.passed, report.summary()
        assert [c.name for c in report.checks] == list(TRAJECTORY_CHECKS)
        assert report.get("jump_containment").status == CheckStatus.PASS

    def test_impact_checks_skip_without_impacts(self, simulate, tolerances):
        system, trajectory = simulate("free_billiard", t_final=0.5, h=1e-2)
        report = audit_trajectory(system, trajectory, tolerances)
        assert report.passed
        for name in ("jump_containment", "energy_jump", "inwardness"):
            assert report.get(name).status == CheckStatus.SKIPPED

    def test_corrupted_momentum_is_located(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        p = trajectory.p.copy()
        p[7] += 1e-3
        report = audit_trajectory(system, replace(trajectory, p=p), tolerances)
        check = report.get("legendre_residual")
        assert check.status == CheckStatus.FAIL
        assert check.locations == [7]

    def test_injected_energy_jump_fails(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        event = trajectory.events[0]
        events = [replace(event, e_plus=event.e_plus + 1e-6)] + trajectory.events[1:]
        report = audit_trajectory(system, replace(trajectory, events=events), tolerances)
        check = report.get("energy_jump")
        assert check.status == CheckStatus.FAIL
        assert check.locations == [0]

    def test_energy_jump_is_absolute(self, simulate, tolerances):
        system, trajectory = simulate("free_billiard", t_final=0.05, h=1e-4, params={"vx0": 100.0})
        assert audit_trajectory(system, trajectory, tolerances).get("energy_jump").passed
        event = trajectory.events[0]
        assert event.e_minus == pytest.approx(5000.0)
        jumped = replace(event, e_plus=event.e_plus + 20 * tolerances.energy_jump_tol)
        report = audit_trajectory(system, replace(trajectory, events=[jumped] + trajectory.events[1:]), tolerances)
        assert report.get("energy_jump").status == CheckStatus.FAIL

    def test_reversed_reset_fails_inwardness(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        event = trajectory.events[0]
        flipped = replace(event, v_plus=event.v_minus, p_plus=event.p_minus)
        report = audit_trajectory(system, replace(trajectory, events=[flipped] + trajectory.events[1:]), tolerances)
        assert report.get("inwardness").status == CheckStatus.FAIL

    def test_clustered_impacts_fail_zeno(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        first = trajectory.events[0]
        events = [first, replace(first, t_impact=first.t_impact + 1e-9)]
        corrupted = replace(trajectory, events=events, event_indices=trajectory.event_indices[:1] * 2)
        report = audit_trajectory(system, corrupted, tolerances)
        assert report.get("zeno").status == CheckStatus.FAIL
        assert report.get("zeno").locations == [0, 1]

    def test_unordered_samples_fail(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        times = trajectory.times.copy()
        times[[4, 5]] = times[[5, 4]]
        report = audit_trajectory(system, replace(trajectory, times=times), tolerances)
        assert report.get("ordering").status == CheckStatus.FAIL
        assert 5 in report.get("ordering").locations

    def test_audit_is_deterministic(self, billiard_run, tolerances):
        system, trajectory = billiard_run
        first = audit_trajectory(system, trajectory, tolerances)
        second = audit_trajectory(system, trajectory, tolerances)
        assert [c.worst_residual for c in first.checks] == [c.worst_residual for c in second.checks]


class TestMatchSamples:
    def test_pairs_on_shared_times(self):
        pairs = match_samples([0.0, 0.1, 0.2, 0.3], [0.1, 0.15, 0.3], 1e-9)
        assert pairs == [(1, 0), (3, 2)]

    def test_tolerance_applies(self):
        assert match_samples([0.0, 0.1], [0.1 + 1e-12], 1e-9) == [(1, 0)]
        assert match_samples([0.0, 0.1], [0.1 + 1e-6], 1e-9) == []


class TestAuditEquivalence:
    @pytest.mark.parametrize("constrained", [False, True])
    def test_pendulum_and_reduced_partner_agree(self, constrained, tolerances):
        params = {"constrained": constrained}
        full, reduced, full_traj, reduced_traj = compare_runs(params, tolerances)
        assert full_traj.events
        report = audit_equivalence(full_traj, reduced_traj, full.layout, tolerances, reduced_system=reduced)
        assert report.passed, report.summary()
        assert report.get("group_reconstruction").status == CheckStatus.PASS

    def test_perturbed_xi_reports_first_divergence(self, tolerances):
        full, reduced, full_traj, reduced_traj = compare_runs({"constrained": False}, tolerances, t_final=0.05)
        w = reduced_traj.w.copy()
        w[40:, 1] += 1e-3
        report = audit_equivalence(full_traj, replace(reduced_traj, w=w), full.layout, tolerances)
        check = report.get("xi")
        assert check.status == CheckStatus.FAIL
        assert check.locations == [40]
        assert "reduced sample 40" in check.detail
        assert report.get("sigma").status == CheckStatus.PASS
        assert report.get("group_reconstruction").status == CheckStatus.SKIPPED

    def test_disjoint_grids_raise(self, tolerances):
        full, _, full_traj, reduced_traj = compare_runs({"constrained": False}, tolerances, t_final=0.01)
        shifted = replace(reduced_traj, times=reduced_traj.times + 0.5e-4)
        with pytest.raises(GridMismatch):
            audit_equivalence(full_traj, shifted, full.layout, tolerances)
