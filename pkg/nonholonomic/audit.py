"""
Post-hoc checks on stored trajectories.

Every quantity is recomputed from the stored samples and impact records;
nothing reported by the integrator is trusted.
"""
import logging

import numpy as np
from scipy import linalg

from . import finite_differences as fd
from .exceptions import GridMismatch, ZenoSuspected
from .geometry import null_basis
from .impact import ZenoPolicy, zeno_guard
from .lagrangian import PontryaginState
from .reduction import reconstruct_trajectory, reduce_state
from .reports import AuditReport, CheckResult

logger = logging.getLogger(__name__)

TRAJECTORY_CHECKS = (
    "energy_drift",
    "constraint_residual",
    "legendre_residual",
    "force_containment",
    "jump_containment",
    "energy_jump",
    "inwardness",
    "boundary_admissibility",
    "zeno",
    "ordering",
)


def _measure(report, name, errors, tolerance, locations=None, detail=""):
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return report.add(CheckResult.skipped(name, detail or "nothing to check", tolerance))
    if locations is None:
        locations = np.arange(errors.size)
    bad = [int(locations[i]) for i in np.flatnonzero(~(errors <= tolerance))]
    return report.add(CheckResult.measure(name, float(np.max(errors)), tolerance, locations=bad, detail=detail))


def _energy_drift(system, trajectory, report, tolerances):
    errors = []
    for start, stop in trajectory.arcs():
        reference = system.energy(trajectory.x[start], trajectory.w[start], trajectory.p[start])
        scale = max(abs(reference), 1.0)
        for i in range(start, stop):
            energy = system.energy(trajectory.x[i], trajectory.w[i], trajectory.p[i])
            errors.append(abs(energy - reference) / scale)
    _measure(report, "energy_drift", errors, tolerances.energy_drift_tol)


def _uniform_runs(times, start, stop, h, rtol):
    """Split ``[start, stop)`` into runs of samples spaced exactly ``h`` apart."""
    runs = []
    run_start = start
    for i in range(start + 1, stop):
        if abs(times[i] - times[i - 1] - h) > rtol * h:
            runs.append((run_start, i))
            run_start = i
    runs.append((run_start, stop))
    return runs


def _force_containment(system, trajectory, report, tolerances):
    h = trajectory.h
    if h <= 0.0:
        report.add(CheckResult.skipped("force_containment", "step size unknown", tolerances.force_containment_tol))
        return
    errors = []
    locations = []
    for arc_start, arc_stop in trajectory.arcs():
        for start, stop in _uniform_runs(trajectory.times, arc_start, arc_stop, h, tolerances.grid_rtol):
            pdot = fd.five_point_derivative(trajectory.p[start:stop], h)
            for offset, rate in enumerate(pdot):
                i = start + 2 + offset
                x, w, p = trajectory.x[i], trajectory.w[i], trajectory.p[i]
                force = system.generalized_force(x, w, p)
                residual = rate - force
                basis = null_basis(system.constraint_rows(x), system.velocity_dim)
                scale = 1.0 + max(np.max(np.abs(rate), initial=0.0), np.max(np.abs(force), initial=0.0))
                errors.append(float(np.max(np.abs(basis.T @ residual), initial=0.0)) / scale)
                locations.append(i)
    if not errors:
        report.add(
            CheckResult.skipped(
                "force_containment", "no arc has five equally spaced samples", tolerances.force_containment_tol
            )
        )
        return
    _measure(report, "force_containment", errors, tolerances.force_containment_tol, locations)


def _impact_checks(system, trajectory, report, tolerances):
    events = trajectory.events
    if not events:
        for name, tolerance in (
            ("jump_containment", tolerances.jump_tol),
            ("energy_jump", tolerances.energy_jump_tol),
            ("inwardness", tolerances.boundary_tol),
        ):
            report.add(CheckResult.skipped(name, "no impacts", tolerance))
        return

    jump_errors = []
    energy_errors = []
    inward_errors = []
    boundary_errors = []
    for event in events:
        q = np.asarray(event.q, dtype=float)
        db = system.boundary_covector(q)
        directions = np.vstack([db[None, :], system.constraint_rows(q)]).T
        jump = np.asarray(event.p_plus, dtype=float) - np.asarray(event.p_minus, dtype=float)
        coefficients, *_ = linalg.lstsq(directions, jump)
        scale = 1.0 + np.max(np.abs(event.p_minus), initial=0.0)
        jump_errors.append(float(np.max(np.abs(directions @ coefficients - jump), initial=0.0)) / scale)

        e_minus = system.energy(q, event.v_minus, event.p_minus)
        e_plus = system.energy(q, event.v_plus, event.p_plus)
        energy_errors.append(max(abs(event.e_plus - event.e_minus), abs(e_plus - e_minus)))

        inward_errors.append(max(0.0, float(db @ event.v_plus), -float(db @ event.v_minus)))
        boundary_errors.append(abs(system.boundary_value(q)))

    _measure(report, "jump_containment", jump_errors, tolerances.jump_tol)
    _measure(report, "energy_jump", energy_errors, tolerances.energy_jump_tol)
    _measure(
        report,
        "inwardness",
        np.maximum(inward_errors, boundary_errors),
        tolerances.boundary_tol,
        detail="db.v+ <= 0 <= db.v- at a boundary point",
    )


def _zeno(trajectory, report, tolerances):
    policy = ZenoPolicy.from_tolerances(tolerances)
    try:
        zeno_guard(trajectory.events, policy)
    except ZenoSuspected as exc:
        pair = exc.context.get("pair")
        locations = list(pair) if pair else []
        report.add(CheckResult.failed("zeno", exc.message, tolerances.min_interimpact_time, locations))
        return
    report.add(CheckResult.measure("zeno", 0.0, tolerances.min_interimpact_time))


def _ordering(trajectory, report):
    problems = []
    times = trajectory.times
    problems.extend(int(i) + 1 for i in np.flatnonzero(np.diff(times) <= 0.0))
    previous = -np.inf
    for k, (event, index) in enumerate(zip(trajectory.events, trajectory.event_indices)):
        t = event.t_impact
        upper = times[index + 1] if index + 1 < len(times) else np.inf
        if not (previous < t and times[index] <= t <= upper):
            problems.append(k)
        previous = t
    if problems:
        report.add(CheckResult.failed("ordering", "samples or impacts out of order", locations=problems))
    else:
        report.add(CheckResult.measure("ordering", 0.0, 0.0))


def audit_trajectory(system, trajectory, tolerances):
    """Run every trajectory check; failures are report entries, never exceptions."""
    report = AuditReport(subject=f"trajectory:{trajectory.system_name or system.name}")
    if len(trajectory) == 0:
        for name in TRAJECTORY_CHECKS:
            report.add(CheckResult.skipped(name, "empty trajectory"))
        return report

    _energy_drift(system, trajectory, report, tolerances)

    count = len(trajectory)
    _measure(
        report,
        "constraint_residual",
        [system.constraint_residual(trajectory.x[i], trajectory.w[i]) for i in range(count)],
        tolerances.constraint_tol,
    )
    _measure(
        report,
        "legendre_residual",
        [system.legendre_residual(trajectory.x[i], trajectory.w[i], trajectory.p[i]) for i in range(count)],
        tolerances.legendre_tol,
    )
    _force_containment(system, trajectory, report, tolerances)
    _impact_checks(system, trajectory, report, tolerances)
    _measure(
        report,
        "boundary_admissibility",
        [max(system.boundary_value(trajectory.x[i]), 0.0) for i in range(count)],
        tolerances.boundary_tol,
    )
    _zeno(trajectory, report, tolerances)
    _ordering(trajectory, report)

    logger.info(report.summary())
    return report


def match_samples(full_times, reduced_times, time_match_tol):
    """Index pairs ``(full, reduced)`` of samples taken at the same time."""
    full_times = np.asarray(full_times, dtype=float)
    pairs = []
    for j, t in enumerate(np.asarray(reduced_times, dtype=float)):
        i = int(np.searchsorted(full_times, t))
        for candidate in (i - 1, i):
            if 0 <= candidate < full_times.size and abs(full_times[candidate] - t) <= time_match_tol:
                pairs.append((candidate, j))
                break
    return pairs


def _deviation_check(report, name, deviations, pairs, times, tolerance):
    deviations = np.asarray(deviations, dtype=float)
    worst = float(np.max(deviations, initial=0.0))
    exceeding = np.flatnonzero(~(deviations <= tolerance))
    if exceeding.size:
        first = int(exceeding[0])
        detail = f"first divergence at reduced sample {pairs[first][1]} (t={times[first]:.9f})"
        report.add(
            CheckResult.measure(name, worst, tolerance, locations=[pairs[first][1]], detail=detail)
        )
    else:
        report.add(CheckResult.measure(name, worst, tolerance))


def audit_equivalence(full_traj, reduced_traj, layout, tolerances, reduced_system=None):
    """
    Compare ``reduce_state`` of the full samples with the reduced samples on
    the shared grid, plus the reconstructed group variable when the reduced
    system is supplied.
    """
    pairs = match_samples(full_traj.times, reduced_traj.times, tolerances.time_match_tol)
    if not pairs:
        raise GridMismatch(
            "Full and reduced trajectories share no sample times",
            full=len(full_traj),
            reduced=len(reduced_traj),
        )
    layout.check(full_traj.x.shape[1])
    r = len(layout.shape)
    report = AuditReport(subject=f"equivalence:{full_traj.system_name}/{reduced_traj.system_name}")

    deviations = {key: [] for key in ("sigma", "u", "xi", "y", "rho")}
    times = []
    for i, j in pairs:
        full = PontryaginState(
            t=full_traj.times[i], q=full_traj.x[i], v=full_traj.w[i], p=full_traj.p[i]
        )
        reduced = reduce_state(layout, full)
        expected = {
            "sigma": reduced_traj.x[j],
            "u": reduced_traj.w[j][:r],
            "xi": reduced_traj.w[j][r:],
            "y": reduced_traj.p[j][:r],
            "rho": reduced_traj.p[j][r:],
        }
        for key, value in expected.items():
            deviations[key].append(float(np.max(np.abs(getattr(reduced, key) - value), initial=0.0)))
        times.append(full_traj.times[i])

    for key, values in deviations.items():
        _deviation_check(report, key, values, pairs, times, tolerances.equivalence_tol)

    full_impacts = [e.t_impact for e in full_traj.events]
    reduced_impacts = [e.t_impact for e in reduced_traj.events]
    if len(full_impacts) != len(reduced_impacts):
        report.add(
            CheckResult.failed(
                "impact_times",
                f"{len(full_impacts)} full impacts against {len(reduced_impacts)} reduced impacts",
                tolerances.equivalence_tol,
            )
        )
    else:
        _measure(
            report,
            "impact_times",
            np.abs(np.subtract(full_impacts, reduced_impacts)),
            tolerances.equivalence_tol,
            detail="" if full_impacts else "no impacts",
        )

    _reconstruction_check(report, full_traj, reduced_traj, layout, tolerances, reduced_system, pairs, times)
    logger.info(report.summary())
    return report


def _reconstruction_check(report, full_traj, reduced_traj, layout, tolerances, reduced_system, pairs, times):
    name = "group_reconstruction"
    if reduced_system is None:
        report.add(CheckResult.skipped(name, "reduced system not supplied", tolerances.equivalence_tol))
        return
    if not reduced_system.algebra.is_abelian:
        report.add(
            CheckResult.skipped(name, "group coordinates are only compared for abelian groups", tolerances.equivalence_tol)
        )
        return
    start = next((i for i, j in pairs if j == 0), None)
    if start is None:
        report.add(CheckResult.skipped(name, "reduced start time has no full sample", tolerances.equivalence_tol))
        return
    group = list(layout.group)
    g = reconstruct_trajectory(reduced_system, reduced_traj, tolerances, g0=full_traj.x[start][group])
    deviations = [float(np.max(np.abs(g[j] - full_traj.x[i][group]), initial=0.0)) for i, j in pairs]
    _deviation_check(report, name, deviations, pairs, times, tolerances.equivalence_tol)
