"""
Fixed-step integration of the constrained equations of motion between
impacts, with event detection and impact resolution.

Each step is a classical four-stage Runge-Kutta step on ``(x, w)`` whose
accelerations come from the index-reduced saddle-point solve; momenta are
rebuilt from the Legendre map and the velocities are optionally projected
back onto the constraint distribution in the kinetic metric.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import (
    ConstraintDriftExceeded,
    InvalidInitialState,
    InvalidSpec,
    NotOnBoundary,
)
from .impact import DenseSegment, ZenoPolicy, impact_map, locate_crossing, zeno_guard

logger = logging.getLogger(__name__)

KKT_RK4 = "kkt_rk4"
NO_STABILIZATION = "none"
POST_STEP_PROJECTION = "post_step_projection"


@dataclass(frozen=True)
class IntegratorOptions:
    h: float
    tolerances: object
    method: str = KKT_RK4
    constraint_stabilization: str = POST_STEP_PROJECTION

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidSpec("h: must be > 0", field="h", value=self.h)
        if self.method != KKT_RK4:
            raise InvalidSpec(f"Unknown integration method {self.method!r}", field="method")
        if self.constraint_stabilization not in (NO_STABILIZATION, POST_STEP_PROJECTION):
            raise InvalidSpec(
                f"Unknown constraint stabilization {self.constraint_stabilization!r}",
                field="constraint_stabilization",
            )

    @property
    def legendre_tol(self):
        return self.tolerances.legendre_tol

    @property
    def constraint_tol(self):
        return self.tolerances.constraint_tol


@dataclass(frozen=True)
class Trajectory:
    """
    Samples on the step grid plus the impact log.

    ``event_indices[k]`` is the index of the last sample before event ``k``.
    """

    mode: str
    times: np.ndarray
    x: np.ndarray
    w: np.ndarray
    p: np.ndarray
    rates: np.ndarray
    multipliers: np.ndarray
    energy: np.ndarray
    constraint_residual: np.ndarray
    legendre_residual: np.ndarray
    events: list
    event_indices: list
    grazing_times: list = field(default_factory=list)
    h: float = 0.0
    system_name: str = ""

    def __len__(self):
        return len(self.times)

    def state(self, system, index):
        return system.make_state(self.times[index], self.x[index], self.w[index], self.p[index])

    def samples(self, system):
        return [self.state(system, i) for i in range(len(self.times))]

    def arcs(self):
        """Index ranges ``(start, stop)`` of samples between consecutive impacts."""
        bounds = [0]
        for index in self.event_indices:
            if index + 1 not in bounds:
                bounds.append(index + 1)
        bounds.append(len(self.times))
        return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


class _TrajectoryBuilder:
    def __init__(self, system, h):
        self.system = system
        self.h = h
        self.rows = {key: [] for key in ("times", "x", "w", "p", "rates", "multipliers")}
        self.energy = []
        self.constraint_residual = []
        self.legendre_residual = []
        self.events = []
        self.event_indices = []
        self.grazing_times = []

    def add_sample(self, t, x, w, p, solution):
        self.rows["times"].append(float(t))
        self.rows["x"].append(np.array(x, dtype=float))
        self.rows["w"].append(np.array(w, dtype=float))
        self.rows["p"].append(np.array(p, dtype=float))
        self.rows["rates"].append(solution.wdot)
        self.rows["multipliers"].append(solution.multipliers)
        self.energy.append(self.system.energy(x, w, p))
        self.constraint_residual.append(self.system.constraint_residual(x, w))
        self.legendre_residual.append(self.system.legendre_residual(x, w, p))

    def add_event(self, record):
        self.events.append(record)
        self.event_indices.append(len(self.rows["times"]) - 1)

    def build(self):
        system = self.system

        def stack(key, width):
            values = self.rows[key]
            if not values:
                return np.zeros((0, width))
            return np.vstack([np.reshape(v, (1, width)) for v in values])

        multipliers_width = len(self.rows["multipliers"][0]) if self.rows["multipliers"] else 0
        return Trajectory(
            mode=system.mode,
            times=np.asarray(self.rows["times"]),
            x=stack("x", system.position_dim),
            w=stack("w", system.velocity_dim),
            p=stack("p", system.velocity_dim),
            rates=stack("rates", system.velocity_dim),
            multipliers=stack("multipliers", multipliers_width),
            energy=np.asarray(self.energy),
            constraint_residual=np.asarray(self.constraint_residual),
            legendre_residual=np.asarray(self.legendre_residual),
            events=list(self.events),
            event_indices=list(self.event_indices),
            grazing_times=list(self.grazing_times),
            h=self.h,
            system_name=getattr(system, "name", ""),
        )


def constrained_rhs(system, q, v, tolerances):
    """``(vdot, lambda)`` from the saddle-point system at ``(q, v)``."""
    solution = system.acceleration(q, v, tolerances)
    return solution.wdot, solution.multipliers


def _rk4(system, x, w, tau, tolerances, first=None):
    def f(xs, ws):
        return system.rate(xs, ws), system.acceleration(xs, ws, tolerances).wdot

    k1 = first if first is not None else f(x, w)
    k2 = f(x + 0.5 * tau * k1[0], w + 0.5 * tau * k1[1])
    k3 = f(x + 0.5 * tau * k2[0], w + 0.5 * tau * k2[1])
    k4 = f(x + tau * k3[0], w + tau * k3[1])
    x_new = x + tau / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    w_new = w + tau / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    return x_new, w_new


def _advance(system, x, w, tau, options, first=None):
    """One step of length ``tau``: RK4, optional projection, Legendre map, drift check."""
    tolerances = options.tolerances
    x_new, w_new = _rk4(system, x, w, tau, tolerances, first)
    if options.constraint_stabilization == POST_STEP_PROJECTION:
        w_new = system.project_velocity(x_new, w_new)
    rows = system.enforced_rows(x_new)
    if rows.shape[0]:
        drift = float(np.max(np.abs(rows @ w_new)))
        if drift > tolerances.constraint_tol:
            raise ConstraintDriftExceeded(
                f"Constraint residual {drift:.3e} exceeds {tolerances.constraint_tol:.1e}",
                residual=drift,
            )
    return x_new, w_new, system.momentum(x_new, w_new)


def step(system, state, options, tau=None):
    """Advance a state by ``tau`` (default ``options.h``) without event handling."""
    tau = options.h if tau is None else tau
    x, w, p = _advance(system, np.asarray(state.x, dtype=float), np.asarray(state.w, dtype=float), tau, options)
    system.check_guard(x, options.tolerances)
    return system.make_state(state.t + tau, x, w, p)


def _check_initial(system, x, w, tolerances):
    value = system.boundary_value(x)
    approach = float(system.boundary_covector(x) @ w)
    if value > tolerances.boundary_tol or (value >= -tolerances.boundary_tol and approach >= 0.0):
        raise InvalidInitialState(
            f"Initial state is not admissible (b={value:.3e}, db.v={approach:.3e})",
            b=value,
            approach=approach,
        )
    rows = system.constraint_rows(x)
    if rows.shape[0] and np.max(np.abs(rows @ w)) > tolerances.constraint_tol:
        raise InvalidInitialState(
            "Initial velocity violates the constraints",
            residual=float(np.max(np.abs(rows @ w))),
        )
    system.check_guard(x, tolerances)


def _refine_crossing(system, x, w, t_start, t_guess, t_limit, options, first, departing=False):
    """
    Shoot the step map for the time the true discrete flow meets ``b = 0``,
    bracketed around the dense-output estimate ``t_guess``.

    Returns None when no bracket exists inside the window; a departing start
    point never serves as the lower end.
    """
    tolerances = options.tolerances

    def shoot(t):
        tau = t - t_start
        if tau <= 0.0:
            return system.boundary_value(x)
        x_t, _ = _rk4(system, x, w, tau, tolerances, first)
        return system.boundary_value(x_t)

    width = max(tolerances.crossing_window * (t_limit - t_start), tolerances.time_resolution)
    lower = max(t_start, t_guess - width)
    upper = min(t_limit, t_guess + width)
    if departing and lower <= t_start:
        return None
    if not (shoot(lower) <= 0.0 < shoot(upper)):
        return None
    return float(
        optimize.brentq(
            shoot,
            lower,
            upper,
            xtol=tolerances.crossing_xtol,
            rtol=4 * np.finfo(float).eps,
            maxiter=200,
        )
    )


def integrate(system, state0, t_final, options, event_handler=impact_map):
    """
    Integrate from ``state0`` to ``t_final`` on the grid ``t0 + k h``,
    resolving every boundary crossing with ``event_handler``.

    A step whose exit from the admissible region cannot be bracketed is
    halved, at most ``max_halvings`` times in a row; no sample is stored
    with ``b > boundary_tol``.
    """
    tolerances = options.tolerances
    policy = ZenoPolicy.from_tolerances(tolerances)
    t0 = float(state0.t)
    if not t_final > t0:
        raise InvalidSpec("t_final: must be greater than the initial time", field="t_final")

    x = np.asarray(state0.x, dtype=float)
    w = np.asarray(state0.w, dtype=float)
    _check_initial(system, x, w, tolerances)
    p = system.momentum(x, w)

    builder = _TrajectoryBuilder(system, options.h)
    solution = system.acceleration(x, w, tolerances)
    builder.add_sample(t0, x, w, p, solution)

    span = t_final - t0
    steps = int(np.ceil(span / options.h - tolerances.grid_rtol))
    vertical_warned = False

    for k in range(1, steps + 1):
        target = t_final if k == steps else t0 + k * options.h
        t = builder.rows["times"][-1]
        first = (system.rate(x, w), solution.wdot)
        stop = target
        halvings = 0

        while True:
            x_new, w_new, p_new = _advance(system, x, w, stop - t, options, first)
            value = system.boundary_value(x)
            approach = float(system.boundary_covector(x) @ w)
            departing = value >= -tolerances.boundary_tol and approach < 0.0

            if value > 0.0 and approach > 0.0:
                # Already on the boundary within tolerance and moving out
                t_star = t
            else:
                segment = DenseSegment(
                    t0=t,
                    t1=stop,
                    x0=x,
                    x1=x_new,
                    xdot0=system.rate(x, w),
                    xdot1=system.rate(x_new, w_new),
                )
                t_cross = locate_crossing(segment, system.boundary_value, tolerances, departing=departing)
                t_star = None
                if t_cross is not None:
                    t_star = _refine_crossing(system, x, w, t, t_cross, stop, options, first, departing)
                elif system.boundary_value(x_new) <= tolerances.boundary_tol:
                    if stop == target:
                        break
                    t, x, w, first = stop, x_new, w_new, None
                    stop, halvings = target, 0
                    continue

            x_star = w_star = None
            if t_star is not None:
                x_star, w_star, _ = _advance(system, x, w, t_star - t, options, first)
                if float(system.boundary_covector(x_star) @ w_star) <= 0.0:
                    if system.boundary_value(x_new) <= tolerances.boundary_tol:
                        logger.warning(f"Grazing contact at t={t_star:.9f}; continuing without impact")
                        builder.grazing_times.append(t_star)
                        if stop == target:
                            break
                        t, x, w, first = stop, x_new, w_new, None
                        stop, halvings = target, 0
                        continue
                    t_star = None

            if t_star is None:
                halvings += 1
                if halvings > tolerances.max_halvings:
                    raise NotOnBoundary(
                        f"Could not bracket the boundary crossing after t={t:.9f} "
                        f"in {tolerances.max_halvings} step halvings",
                        t=t,
                        b=float(system.boundary_value(x_new)),
                    )
                stop = t + 0.5 * (stop - t)
                continue

            record = event_handler(system, x_star, w_star, tolerances, t=t_star)
            builder.add_event(record)
            zeno_guard(builder.events, policy, start=len(builder.events) - 1)

            t = t_star
            x = np.asarray(record.q, dtype=float)
            w = np.asarray(record.v_plus, dtype=float)
            first = None
            stop, halvings = target, 0
            if target - t <= 0.0:
                x_new, w_new, p_new = x, w, system.momentum(x, w)
                break

        x, w, p = x_new, w_new, p_new
        system.check_guard(x, tolerances)
        solution = system.acceleration(x, w, tolerances)
        builder.add_sample(target, x, w, p, solution)

        if not vertical_warned and builder.constraint_residual[-1] > tolerances.constraint_tol:
            logger.warning(
                f"Unenforced constraint rows drift to {builder.constraint_residual[-1]:.3e} "
                f"at t={target:.6f}"
            )
            vertical_warned = True

    trajectory = builder.build()
    logger.info(
        f"Integrated {system.name} to t={t_final}: {len(trajectory)} samples, "
        f"{len(trajectory.events)} impacts"
    )
    return trajectory
