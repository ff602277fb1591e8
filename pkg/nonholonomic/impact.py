"""
Boundary crossings and elastic impacts.

The impact solve is a Newton iteration on
    P(w+) - P(w-) = lambda0 db + R^T lambda
    E(w+) = E(w-)
    R w+ = 0
started from the constrained metric reflection of ``w-``.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg, optimize
from scipy.interpolate import CubicHermiteSpline

from .exceptions import (
    ConstraintDriftExceeded,
    DegenerateContact,
    InvalidSpec,
    NoConvergence,
    NotApproaching,
    NotOnBoundary,
    TrivialRootOnly,
    ZenoSuspected,
)

logger = logging.getLogger(__name__)

# Scalings of the reflection step tried in order when a guess converges to
# the trivial root or to an outward-pointing velocity.
GUESS_SCALINGS = (1.0, 0.9, 1.1, 0.75, 1.25, 0.5, 1.5)

# Interior sub-points examined for sign changes on each dense segment
CROSSING_SUBDIVISIONS = 16


@dataclass(frozen=True)
class ImpactRecord:
    t_impact: float
    q: np.ndarray
    v_minus: np.ndarray
    v_plus: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray
    lambda0: float
    lambdas: np.ndarray
    e_minus: float
    e_plus: float
    metric: str = "kinetic"
    iterations: int = 0


@dataclass(frozen=True)
class ZenoPolicy:
    min_interimpact_time: float
    max_impacts: int

    def __post_init__(self):
        if self.min_interimpact_time <= 0 or self.max_impacts <= 0:
            raise InvalidSpec(
                "Zeno policy limits must be positive",
                min_interimpact_time=self.min_interimpact_time,
                max_impacts=self.max_impacts,
            )

    @classmethod
    def from_tolerances(cls, tolerances):
        return cls(
            min_interimpact_time=tolerances.min_interimpact_time,
            max_impacts=int(tolerances.max_impacts),
        )


@dataclass(frozen=True)
class DenseSegment:
    """Cubic Hermite interpolant of the positions over one step."""

    t0: float
    t1: float
    x0: np.ndarray
    x1: np.ndarray
    xdot0: np.ndarray
    xdot1: np.ndarray

    @cached_property
    def spline(self):
        return CubicHermiteSpline(
            [self.t0, self.t1],
            np.vstack([self.x0, self.x1]),
            np.vstack([self.xdot0, self.xdot1]),
            axis=0,
        )

    def __call__(self, t):
        if self.t1 <= self.t0:
            return np.asarray(self.x0, dtype=float)
        return self.spline(t)


def locate_crossing(segment, boundary_value, tolerances, departing=False):
    """
    First time on ``segment`` where the boundary function changes sign from
    non-positive to positive, or None.

    With ``departing`` the segment starts on the boundary moving inward: the
    start point is not a crossing, and an exit inside the first sub-interval
    is not reported. Callers shorten the step until the exit is bracketed.
    """
    if segment.t1 <= segment.t0 or np.size(segment.x0) == 0:
        return None
    times = np.linspace(segment.t0, segment.t1, CROSSING_SUBDIVISIONS + 1)
    values = [boundary_value(point) for point in segment(times)]
    if departing:
        values[0] = np.inf

    for j in range(1, len(times)):
        if values[j] > 0.0 and values[j - 1] <= 0.0:
            root = optimize.brentq(
                lambda t: boundary_value(segment(t)),
                times[j - 1],
                times[j],
                xtol=tolerances.crossing_xtol,
                rtol=4 * np.finfo(float).eps,
                maxiter=200,
            )
            return float(root)

    interior = values[1:-1]
    if interior:
        peak = int(np.argmax(interior)) + 1
        if values[peak] >= -tolerances.boundary_tol and values[peak] > max(values[0], values[-1]):
            logger.warning(
                f"Grazing contact near t={times[peak]:.9f} (b={values[peak]:.3e}); no impact applied"
            )
    return None


def _constrained_normal(metric, rows, db):
    """Metric gradient of ``db`` projected metric-orthogonally onto ker(rows)."""
    normal = linalg.solve(metric, db, assume_a="sym")
    if rows.shape[0] == 0:
        return normal
    inverse_rows = linalg.solve(metric, rows.T, assume_a="sym")
    gram = rows @ inverse_rows
    return normal - inverse_rows @ linalg.solve(gram, rows @ normal)


def reflection(system, x, w, tolerances):
    """
    Constrained metric reflection of ``w`` at boundary point ``x``.

    Exact impact solution for Lagrangians quadratic in the velocities.
    """
    db = system.boundary_covector(x)
    rows = system.constraint_rows(x)
    metric, _ = system.metric(x, w)
    normal = _constrained_normal(metric, rows, db)
    denominator = float(db @ normal)
    scale = float(db @ linalg.solve(metric, db, assume_a="sym"))
    if scale <= 0.0 or denominator <= tolerances.rank_rtol * scale:
        raise DegenerateContact(
            "Boundary conormal lies in the span of the constraint rows",
            denominator=denominator,
        )
    return np.asarray(w, dtype=float) - 2.0 * float(db @ w) / denominator * normal


def _unit_normal(system, x, w):
    db = system.boundary_covector(x)
    metric, name = system.metric(x, w)
    raised = linalg.solve(metric, db, assume_a="sym")
    norm = np.sqrt(float(db @ raised))
    return metric, raised / norm, name


def metric_reflection(system, x, w):
    """Unconstrained reflection ``w - 2 g(w, n) n`` in the system metric."""
    metric, normal, _ = _unit_normal(system, x, w)
    w = np.asarray(w, dtype=float)
    return w - 2.0 * float(w @ metric @ normal) * normal


def reset_separation(system, x, w, tolerances):
    """``||R(w) - w||_g = 2 |g(w, n)|`` with ``n`` the g-unit outward normal."""
    value = system.boundary_value(x)
    if abs(value) > tolerances.boundary_tol:
        raise NotOnBoundary(f"b = {value:.3e} is not on the boundary", b=value)
    metric, normal, name = _unit_normal(system, x, w)
    logger.debug(f"Reset separation uses the {name} metric")
    return 2.0 * abs(float(np.asarray(w, dtype=float) @ metric @ normal))


def _newton(system, x, p_minus, e_minus, db, rows, guess, tolerances):
    n = guess.size
    m = rows.shape[0]
    directions = np.vstack([db[None, :], rows]).T

    def residual(z):
        w = z[:n]
        p = system.momentum(x, w)
        jump = p - p_minus - directions @ z[n:]
        return np.concatenate([jump, [system.energy(x, w, p) - e_minus], rows @ w])

    initial, *_ = linalg.lstsq(directions, system.momentum(x, guess) - p_minus)
    z = np.concatenate([guess, initial])
    scale = 1.0 + np.max(np.abs(p_minus), initial=0.0) + abs(e_minus)
    threshold = tolerances.newton_tol * scale

    current = residual(z)
    for iteration in range(int(tolerances.max_newton_iters) + 1):
        norm = float(np.max(np.abs(current)))
        logger.debug(f"Impact Newton iteration {iteration}: residual {norm:.3e}")
        if norm <= threshold:
            return z[:n], float(z[n]), z[n + 1 :], iteration
        if iteration == tolerances.max_newton_iters:
            break
        w = z[:n]
        hessian = system.velocity_hessian(x, w)
        jacobian = np.zeros((n + 1 + m, n + 1 + m))
        jacobian[:n, :n] = hessian
        jacobian[:n, n:] = -directions
        jacobian[n, :n] = hessian.T @ w
        jacobian[n + 1 :, :n] = rows
        try:
            step = linalg.solve(jacobian, -current)
        except linalg.LinAlgError:
            return None
        alpha = 1.0
        for _ in range(int(tolerances.max_halvings) + 1):
            trial = z + alpha * step
            trial_residual = residual(trial)
            if np.max(np.abs(trial_residual)) < norm:
                z, current = trial, trial_residual
                break
            alpha *= 0.5
        else:
            return None
    return None


def impact_map(system, x, w_minus, tolerances, t=0.0):
    """Resolve an elastic impact at boundary point ``x``."""
    x = np.asarray(x, dtype=float)
    w_minus = np.asarray(w_minus, dtype=float)
    value = system.boundary_value(x)
    if abs(value) > tolerances.boundary_tol:
        raise NotOnBoundary(f"b = {value:.3e} is not on the boundary", b=value, t=t)

    db = system.boundary_covector(x)
    if np.max(np.abs(db), initial=0.0) == 0.0:
        raise DegenerateContact("Boundary conormal vanishes at the contact point", t=t)
    rows = system.constraint_rows(x)
    approach = float(db @ w_minus)
    if approach <= 0.0:
        raise NotApproaching(f"db . v- = {approach:.3e} is not approaching", approach=approach, t=t)
    if rows.shape[0] and np.max(np.abs(rows @ w_minus)) > tolerances.constraint_tol:
        raise ConstraintDriftExceeded(
            "Pre-impact velocity violates the constraints",
            residual=float(np.max(np.abs(rows @ w_minus))),
            t=t,
        )

    p_minus = system.momentum(x, w_minus)
    e_minus = system.energy(x, w_minus, p_minus)
    metric, metric_name = system.metric(x, w_minus)
    reflected = reflection(system, x, w_minus, tolerances)
    correction = reflected - w_minus
    trivial_bound = 10.0 * tolerances.constraint_tol

    trivial_hits = 0
    outward_hits = 0
    accepted = None
    for scaling in GUESS_SCALINGS:
        result = _newton(system, x, p_minus, e_minus, db, rows, w_minus + scaling * correction, tolerances)
        if result is None:
            continue
        w_plus = result[0]
        if np.max(np.abs(w_plus - w_minus)) <= trivial_bound:
            trivial_hits += 1
            continue
        if float(db @ w_plus) >= 0.0:
            outward_hits += 1
            continue
        accepted = (scaling, result)
        break

    if accepted is None:
        if trivial_hits or outward_hits:
            raise TrivialRootOnly(
                "Impact solve only reached the trivial or an outward root",
                trivial=trivial_hits,
                outward=outward_hits,
                t=t,
            )
        raise NoConvergence(
            f"Impact Newton did not converge in {tolerances.max_newton_iters} iterations", t=t
        )

    scaling, (w_plus, lambda0, lambdas, iterations) = accepted
    _warn_on_other_roots(system, x, p_minus, e_minus, db, rows, w_minus, correction, scaling, w_plus, tolerances)

    p_plus = system.momentum(x, w_plus)
    record = ImpactRecord(
        t_impact=float(t),
        q=x.copy(),
        v_minus=w_minus.copy(),
        v_plus=np.asarray(w_plus, dtype=float),
        p_minus=p_minus,
        p_plus=p_plus,
        lambda0=lambda0,
        lambdas=np.asarray(lambdas, dtype=float),
        e_minus=e_minus,
        e_plus=system.energy(x, w_plus, p_plus),
        metric=metric_name,
        iterations=iterations,
    )
    logger.info(
        f"Impact at t={record.t_impact:.9f}: lambda0={record.lambda0:.6e}, "
        f"energy jump {record.e_plus - record.e_minus:.3e}"
    )
    return record


def _warn_on_other_roots(system, x, p_minus, e_minus, db, rows, w_minus, correction, used, w_plus, tolerances):
    alternate = GUESS_SCALINGS[-1] if used != GUESS_SCALINGS[-1] else GUESS_SCALINGS[0]
    result = _newton(system, x, p_minus, e_minus, db, rows, w_minus + alternate * correction, tolerances)
    if result is None:
        return
    other = result[0]
    if np.max(np.abs(other - w_minus)) <= 10.0 * tolerances.constraint_tol or float(db @ other) >= 0.0:
        return
    separation = np.max(np.abs(other - w_plus)) / (1.0 + np.max(np.abs(w_plus)))
    if separation > tolerances.root_separation_tol:
        logger.warning(f"Impact at q={np.round(x, 6).tolist()} admits more than one nontrivial root")


def zeno_guard(events, policy, start=1):
    """
    Raise ZenoSuspected on too many impacts or impacts closer than the policy
    allows.  Pairs before ``start`` are assumed already checked.
    """
    if len(events) > policy.max_impacts:
        raise ZenoSuspected(
            f"{len(events)} impacts exceed the limit of {policy.max_impacts}",
            count=len(events),
        )
    for index in range(max(start, 1), len(events)):
        gap = events[index].t_impact - events[index - 1].t_impact
        if gap < policy.min_interimpact_time:
            raise ZenoSuspected(
                f"Impacts {index - 1} and {index} are {gap:.3e} apart",
                pair=[index - 1, index],
                times=[events[index - 1].t_impact, events[index].t_impact],
            )
