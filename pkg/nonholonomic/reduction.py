"""
Symmetry reduction on trivialized bundles ``Q = Sigma x G``.

The reduced system is a ``MechanicalSystem`` with positions ``sigma``,
velocities ``w = (u, xi)`` and momenta ``(y, rho)``; it runs through the same
integrator, impact solver and audit as a full system.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicHermiteSpline

from . import finite_differences as fd
from .algebra import ad_star, validate_algebra
from .exceptions import GuardViolation, LayoutMismatch, MissingGenerators, RankDeficient
from .geometry import (
    BoundarySpec,
    DistributionSpec,
    boundary_gradient_error,
    check_full_row_rank,
)
from .impact import impact_map
from .lagrangian import PontryaginState
from .reports import AuditReport, CheckResult
from .system import MechanicalSystem

logger = logging.getLogger(__name__)

WELL_POSED = "well_posed"
FREE_VERTICAL = "free_vertical"
VERTICAL_MODES = (WELL_POSED, FREE_VERTICAL)

# Gauss-Legendre nodes on [0, 1]
GAUSS_NODES = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)


@dataclass(frozen=True)
class ReducedLagrangianSpec:
    """
    ``ell(sigma, u, xi)`` with partials.  ``d2ell_dw2`` is the Hessian in
    ``w = (u, xi)``; ``d2ell_dwdsigma[i, j]`` differentiates the ``i``-th
    momentum component by ``sigma[j]``.  Both are finite-differenced when omitted.
    """

    ell: Callable
    dell_dsigma: Callable
    dell_du: Callable
    dell_dxi: Callable
    d2ell_dw2: Callable | None = None
    d2ell_dwdsigma: Callable | None = None


@dataclass(frozen=True)
class ReducedState:
    t: float
    sigma: np.ndarray
    u: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    rho: np.ndarray

    @property
    def x(self):
        return self.sigma

    @property
    def w(self):
        return np.concatenate([self.u, self.xi])

    @property
    def p(self):
        return np.concatenate([self.y, self.rho])


@dataclass(frozen=True)
class ReducedSystemSpec(MechanicalSystem):
    sigma_dim: int
    algebra: object
    lagrangian_spec: ReducedLagrangianSpec
    delta_sigma: DistributionSpec
    boundary: BoundarySpec
    delta_g: Callable | None = None
    vertical_constraints: int = 0
    connection: Callable | None = None
    curvature: Callable | None = None
    vertical_mode: str = WELL_POSED
    coadjoint_sign: int = 1
    guard: Callable | None = None
    name: str = "reduced"
    metadata: dict = field(default_factory=dict)

    mode = "reduced"

    @property
    def position_dim(self):
        return self.sigma_dim

    @property
    def velocity_dim(self):
        return self.sigma_dim + self.algebra.k

    def split(self, w):
        w = np.asarray(w, dtype=float)
        return w[: self.sigma_dim], w[self.sigma_dim :]

    def connection_matrix(self, sigma):
        if self.connection is None:
            return np.zeros((self.algebra.k, self.sigma_dim))
        return np.asarray(self.connection(np.asarray(sigma, dtype=float)), dtype=float).reshape(
            self.algebra.k, self.sigma_dim
        )

    def curvature_tensor(self, sigma):
        if self.curvature is None:
            return np.zeros((self.algebra.k, self.sigma_dim, self.sigma_dim))
        return np.asarray(self.curvature(np.asarray(sigma, dtype=float)), dtype=float)

    def vertical_rows(self, sigma):
        if self.delta_g is None or self.vertical_constraints == 0:
            return np.zeros((0, self.algebra.k))
        return np.atleast_2d(np.asarray(self.delta_g(np.asarray(sigma, dtype=float)), dtype=float))

    def rate(self, x, w):
        return self.split(w)[0]

    def lagrangian(self, x, w):
        u, xi = self.split(w)
        return float(self.lagrangian_spec.ell(np.asarray(x, dtype=float), u, xi))

    def momentum(self, x, w):
        x = np.asarray(x, dtype=float)
        u, xi = self.split(w)
        return np.concatenate(
            [
                np.asarray(self.lagrangian_spec.dell_du(x, u, xi), dtype=float).reshape(self.sigma_dim),
                np.asarray(self.lagrangian_spec.dell_dxi(x, u, xi), dtype=float).reshape(self.algebra.k),
            ]
        )

    def momentum_jacobians(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        spec = self.lagrangian_spec
        u, xi = self.split(w)
        if spec.d2ell_dw2 is not None:
            hessian = np.asarray(spec.d2ell_dw2(x, u, xi), dtype=float)
        else:
            hessian = fd.jacobian(lambda z: self.momentum(x, z), w)
        if spec.d2ell_dwdsigma is not None:
            mixed = np.asarray(spec.d2ell_dwdsigma(x, u, xi), dtype=float).reshape(
                self.velocity_dim, self.sigma_dim
            )
        else:
            mixed = fd.jacobian(lambda s: self.momentum(s, w), x)
        return hessian, mixed

    def generalized_force(self, x, w, p):
        x = np.asarray(x, dtype=float)
        u, xi = self.split(w)
        rho = np.asarray(p, dtype=float)[self.sigma_dim :]
        horizontal = np.asarray(
            self.lagrangian_spec.dell_dsigma(x, u, xi), dtype=float
        ).reshape(self.sigma_dim)
        if self.curvature is not None:
            horizontal = horizontal - np.einsum("a,aij,i->j", rho, self.curvature_tensor(x), u)
        transported = self.connection_matrix(x) @ u
        vertical = ad_star(self.algebra, xi, rho, self.coadjoint_sign) - ad_star(
            self.algebra, transported, rho, self.coadjoint_sign
        )
        return np.concatenate([horizontal, vertical])

    def constraint_rows(self, x):
        horizontal = self.delta_sigma.annihilator(x)
        vertical = self.vertical_rows(x)
        rows = np.zeros((horizontal.shape[0] + vertical.shape[0], self.velocity_dim))
        rows[: horizontal.shape[0], : self.sigma_dim] = horizontal
        rows[horizontal.shape[0] :, self.sigma_dim :] = vertical
        return rows

    def enforced_rows(self, x):
        if self.vertical_mode == FREE_VERTICAL:
            horizontal = self.delta_sigma.annihilator(x)
            rows = np.zeros((horizontal.shape[0], self.velocity_dim))
            rows[:, : self.sigma_dim] = horizontal
            return rows
        return self.constraint_rows(x)

    def constraint_rows_derivative(self, x):
        x = np.asarray(x, dtype=float)
        r = self.sigma_dim
        horizontal = self.delta_sigma.derivative(x)
        m_h = horizontal.shape[0]
        if self.vertical_mode == FREE_VERTICAL:
            vertical = np.zeros((0, self.algebra.k, r))
        else:
            vertical = fd.jacobian(self.vertical_rows, x)
        out = np.zeros((m_h + vertical.shape[0], self.velocity_dim, r))
        out[:m_h, :r, :] = horizontal
        out[m_h:, r:, :] = vertical
        return out

    def boundary_value(self, x):
        return self.boundary.value(x)

    def boundary_gradient(self, x):
        return self.boundary.gradient(x).reshape(self.sigma_dim)

    def boundary_covector(self, x):
        return np.concatenate([self.boundary_gradient(x), np.zeros(self.algebra.k)])

    def make_state(self, t, x, w, p):
        u, xi = self.split(w)
        p = np.asarray(p, dtype=float)
        return ReducedState(
            t=float(t),
            sigma=np.array(x, dtype=float),
            u=np.array(u),
            y=np.array(p[: self.sigma_dim]),
            xi=np.array(xi),
            rho=np.array(p[self.sigma_dim :]),
        )

    def check_guard(self, x, tolerances):
        if self.guard is None:
            return
        reason = self.guard(np.asarray(x, dtype=float), tolerances)
        if reason:
            raise GuardViolation(reason, sigma=np.asarray(x, dtype=float).tolist())


@dataclass(frozen=True)
class AlgebraLagrangian:
    """Lagrangian on the algebra alone, ``ell(xi)``."""

    ell: Callable
    dell_dxi: Callable
    d2ell_dxidxi: Callable | None = None


def euler_poincare_suslov_system(alg, ell_xi_only, d, name="eps", **kwargs):
    """Wrap an algebra-only problem as a reduced system over a point."""
    d = np.asarray(d, dtype=float).reshape(-1, alg.k)
    hessian = None
    if ell_xi_only.d2ell_dxidxi is not None:
        hessian = lambda sigma, u, xi: ell_xi_only.d2ell_dxidxi(xi)  # noqa: E731
    return ReducedSystemSpec(
        sigma_dim=0,
        algebra=alg,
        lagrangian_spec=ReducedLagrangianSpec(
            ell=lambda sigma, u, xi: ell_xi_only.ell(xi),
            dell_dsigma=lambda sigma, u, xi: np.zeros(0),
            dell_du=lambda sigma, u, xi: np.zeros(0),
            dell_dxi=lambda sigma, u, xi: ell_xi_only.dell_dxi(xi),
            d2ell_dw2=hessian,
            d2ell_dwdsigma=lambda sigma, u, xi: np.zeros((alg.k, 0)),
        ),
        delta_sigma=DistributionSpec.unconstrained(),
        boundary=BoundarySpec.unbounded(0),
        delta_g=(lambda sigma: d) if d.shape[0] else None,
        vertical_constraints=d.shape[0],
        name=name,
        **kwargs,
    )


def reduced_energy(spec, sigma, u, xi, y, rho):
    ell = spec.lagrangian_spec.ell(np.asarray(sigma, dtype=float), np.asarray(u, dtype=float), np.asarray(xi, dtype=float))
    return float(np.dot(y, u) + np.dot(rho, xi) - ell)


def lp_rhs(spec, state, tolerances):
    """Return ``(udot, xidot, lambda_h, lambda_v)`` at a reduced state."""
    solution = spec.acceleration(state.x, state.w, tolerances)
    udot, xidot = spec.split(solution.wdot)
    m_h = spec.delta_sigma.m
    return udot, xidot, solution.multipliers[:m_h], solution.multipliers[m_h:]


def eps_rhs(alg, ell_xi_only, d, xi, tolerances, coadjoint_sign=1):
    """Euler-Poincare-Suslov rates ``(xidot, lambda)`` at ``xi``."""
    system = euler_poincare_suslov_system(alg, ell_xi_only, d, coadjoint_sign=coadjoint_sign)
    solution = system.acceleration(np.zeros(0), np.asarray(xi, dtype=float), tolerances)
    return solution.wdot, solution.multipliers


def reduced_impact_map(spec, sigma, u_minus, xi_minus, tolerances, t=0.0):
    w_minus = np.concatenate([np.asarray(u_minus, dtype=float), np.asarray(xi_minus, dtype=float)])
    return impact_map(spec, sigma, w_minus, tolerances, t=t)


@dataclass(frozen=True)
class BundleLayout:
    """
    Split of the full coordinates into shape and group indices.  Group
    coordinates act by translation; ``connection(sigma)`` is the ``k x r``
    coefficient matrix (zero when omitted).
    """

    shape: tuple
    group: tuple
    connection: Callable | None = None

    def check(self, n):
        indices = tuple(self.shape) + tuple(self.group)
        if sorted(indices) != list(range(n)):
            raise LayoutMismatch(
                f"Layout indices {list(indices)} do not partition {n} coordinates",
                shape=list(self.shape),
                group=list(self.group),
            )

    def connection_matrix(self, sigma):
        if self.connection is None:
            return np.zeros((len(self.group), len(self.shape)))
        return np.asarray(self.connection(np.asarray(sigma, dtype=float)), dtype=float).reshape(
            len(self.group), len(self.shape)
        )


def reduce_state(layout, full):
    q = np.asarray(full.q, dtype=float)
    layout.check(q.size)
    if not (np.size(full.v) == np.size(full.p) == q.size):
        raise LayoutMismatch("State components have inconsistent sizes")
    shape = list(layout.shape)
    group = list(layout.group)
    sigma = q[shape]
    A = layout.connection_matrix(sigma)
    u = np.asarray(full.v, dtype=float)[shape]
    rho = np.asarray(full.p, dtype=float)[group]
    return ReducedState(
        t=float(full.t),
        sigma=sigma,
        u=u,
        y=np.asarray(full.p, dtype=float)[shape] + A.T @ rho,
        xi=np.asarray(full.v, dtype=float)[group] - A @ u,
        rho=rho,
    )


def lift_state(layout, reduced, group_coords):
    """Inverse of ``reduce_state`` given the group coordinates."""
    shape = list(layout.shape)
    group = list(layout.group)
    n = len(shape) + len(group)
    layout.check(n)
    A = layout.connection_matrix(reduced.sigma)
    q = np.zeros(n)
    v = np.zeros(n)
    p = np.zeros(n)
    q[shape] = reduced.sigma
    q[group] = np.asarray(group_coords, dtype=float)
    v[shape] = reduced.u
    v[group] = reduced.xi + A @ reduced.u
    p[group] = reduced.rho
    p[shape] = reduced.y - A.T @ reduced.rho
    return PontryaginState(t=reduced.t, q=q, v=v, p=p)


def _node_slopes(values, times, slopes):
    values = np.asarray(values, dtype=float)
    if slopes is not None:
        return np.asarray(slopes, dtype=float).reshape(values.shape)
    edge_order = 2 if len(times) >= 3 else 1
    return np.gradient(values, times, axis=0, edge_order=edge_order)


def reconstruct(alg, times, sigma, u, xi, connection=None, g0=None, udot=None, xidot=None):
    """
    Integrate ``g' = g (xi + A(sigma) u)`` over sampled reduced data.

    Abelian algebras integrate the coordinate quadrature and return an
    ``(N, k)`` array; other algebras use a fourth-order Magnus step with the
    matrix exponential and return ``(N, d, d)`` matrices.
    """
    times = np.asarray(times, dtype=float)
    count = times.size
    xi = np.asarray(xi, dtype=float).reshape(count, alg.k)
    sigma = np.asarray(sigma, dtype=float).reshape(count, -1) if np.size(sigma) else np.zeros((count, 0))
    u = np.asarray(u, dtype=float).reshape(count, -1) if np.size(u) else np.zeros((count, 0))
    r = sigma.shape[1]

    abelian = alg.is_abelian
    if abelian:
        g = np.zeros(alg.k) if g0 is None else np.asarray(g0, dtype=float).reshape(alg.k)
    else:
        if alg.matrix_generators is None:
            raise MissingGenerators(f"Reconstruction on {alg.name} needs matrix generators")
        size = alg.matrix_generators[0].shape[0]
        g = np.eye(size) if g0 is None else np.asarray(g0, dtype=float)

    out = np.zeros((count,) + g.shape)
    out[0] = g
    if count < 2:
        return out

    xi_dense = CubicHermiteSpline(times, xi, _node_slopes(xi, times, xidot), axis=0)
    if r and connection is not None:
        sigma_dense = CubicHermiteSpline(times, sigma, u, axis=0)
        u_dense = CubicHermiteSpline(times, u, _node_slopes(u, times, udot), axis=0)

    def zeta(t):
        value = xi_dense(t)
        if r and connection is not None:
            A = np.asarray(connection(sigma_dense(t)), dtype=float).reshape(alg.k, r)
            value = value + A @ u_dense(t)
        return value

    for i in range(count - 1):
        h = times[i + 1] - times[i]
        z1 = zeta(times[i] + GAUSS_NODES[0] * h)
        z2 = zeta(times[i] + GAUSS_NODES[1] * h)
        if abelian:
            g = g + 0.5 * h * (z1 + z2)
        else:
            X1 = alg.hat(z1)
            X2 = alg.hat(z2)
            omega = 0.5 * h * (X1 + X2) + (np.sqrt(3.0) / 12.0) * h * h * (X1 @ X2 - X2 @ X1)
            g = g @ linalg.expm(omega)
        out[i + 1] = g
    return out


def _arc_nodes(spec, trajectory, tolerances):
    """Yield per-arc node lists ``(t, sigma, u, xi, udot, xidot, sample_index)``."""
    r = spec.sigma_dim
    events_after = {}
    for event, index in zip(trajectory.events, trajectory.event_indices):
        events_after.setdefault(index, []).append(event)

    def event_node(t, sigma, w):
        rates = spec.acceleration(sigma, w, tolerances).wdot
        return (t, sigma, w[:r], w[r:], rates[:r], rates[r:], None)

    arc = []
    for i in range(len(trajectory.times)):
        w = trajectory.w[i]
        rates = trajectory.rates[i]
        arc.append((trajectory.times[i], trajectory.x[i], w[:r], w[r:], rates[:r], rates[r:], i))
        for event in events_after.get(i, []):
            arc.append(event_node(event.t_impact, event.q, event.v_minus))
            yield arc
            arc = [event_node(event.t_impact, event.q, event.v_plus)]
    if arc:
        yield arc


def reconstruct_trajectory(spec, trajectory, tolerances, g0=None):
    """Group variable at every sample of a reduced trajectory, continuous across impacts."""
    g = g0
    values = [None] * len(trajectory.times)
    for arc in _arc_nodes(spec, trajectory, tolerances):
        # Drop nodes that coincide in time with their predecessor
        nodes = [arc[0]]
        for node in arc[1:]:
            if node[0] - nodes[-1][0] > tolerances.time_resolution * (1.0 + abs(node[0])):
                nodes.append(node)
            elif node[6] is not None:
                nodes[-1] = nodes[-1][:6] + (node[6],)
        group = reconstruct(
            spec.algebra,
            [n[0] for n in nodes],
            [n[1] for n in nodes],
            [n[2] for n in nodes],
            [n[3] for n in nodes],
            connection=spec.connection,
            g0=g,
            udot=[n[4] for n in nodes],
            xidot=[n[5] for n in nodes],
        )
        for node, value in zip(nodes, group):
            if node[6] is not None:
                values[node[6]] = value
        g = group[-1]
    return np.array(values)


def validate_reduced(spec, sample_points, tolerances):
    """Structural checks on a reduced system at sampled shape points."""
    report = AuditReport(subject=f"reduced:{spec.name}")
    for check in validate_algebra(spec.algebra, tolerances).checks:
        report.add(check)

    points = [np.asarray(s, dtype=float).reshape(spec.sigma_dim) for s in sample_points]
    if not points:
        points = [np.zeros(spec.sigma_dim)]

    if spec.curvature is None:
        report.add(CheckResult.skipped("curvature_antisymmetry", "no curvature supplied"))
    else:
        asymmetry = [
            float(np.max(np.abs(B + B.transpose(0, 2, 1)), initial=0.0))
            for B in (spec.curvature_tensor(s) for s in points)
        ]
        report.add(
            CheckResult.measure("curvature_antisymmetry", max(asymmetry), tolerances.algebra_tol)
        )

    flat_violation = 0.0
    for s in points:
        if not np.any(spec.connection_matrix(s)):
            flat_violation = max(flat_violation, float(np.max(np.abs(spec.curvature_tensor(s)), initial=0.0)))
    report.add(CheckResult.measure("trivial_connection_flat", flat_violation, tolerances.algebra_tol))

    rank_failures = []
    for index, s in enumerate(points):
        try:
            check_full_row_rank(spec.delta_sigma.annihilator(s), tolerances.rank_rtol)
            check_full_row_rank(spec.vertical_rows(s), tolerances.rank_rtol)
        except RankDeficient:
            rank_failures.append(index)
    if rank_failures:
        report.add(
            CheckResult.failed(
                "constraint_rank", "rank_deficient", tolerance=tolerances.rank_rtol, locations=rank_failures
            )
        )
    else:
        report.add(CheckResult.measure("constraint_rank", 0.0, tolerances.rank_rtol))

    if spec.sigma_dim == 0:
        report.add(CheckResult.skipped("boundary_gradient", "shape space is a point"))
    else:
        errors = [
            boundary_gradient_error(spec.boundary, s, tolerances.fd_audit_step) for s in points
        ]
        report.add(
            CheckResult.measure(
                "boundary_gradient",
                max(errors),
                tolerances.gradient_tol,
                locations=[i for i, e in enumerate(errors) if e > tolerances.gradient_tol],
            )
        )
    return report
