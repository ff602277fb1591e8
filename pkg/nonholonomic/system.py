"""
Mechanical systems driven by the integrator, the impact solver and the audit.

A system exposes positions ``x``, velocities ``w`` and momenta ``p``.  For a
full ``SystemSpec`` these are ``(q, v, p)``; a reduced system uses
``(sigma, (u, xi), (y, rho))``.  Everything generic (the saddle-point
solve, energy, metric projection) lives on ``MechanicalSystem``.
"""
import abc
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .exceptions import GuardViolation, SingularKKT
from .geometry import BoundarySpec, ChartSpec, ConnectionSpec, DistributionSpec
from .lagrangian import (
    LagrangianSpec,
    PontryaginState,
    covariant_momentum_rate,
    horizontal_derivative,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KKTSolution:
    wdot: np.ndarray
    multipliers: np.ndarray
    residual: float


def solve_kkt(hessian, rows, rhs_top, rhs_bottom, residual_tol, condition_limit):
    """
    Solve ``[[H, R^T], [R, 0]] [wdot; -lambda] = [rhs_top; rhs_bottom]``.

    Raises SingularKKT when the condition number exceeds ``condition_limit`` or the
    relative residual exceeds ``residual_tol``.
    """
    n = hessian.shape[0]
    m = rows.shape[0]
    matrix = np.zeros((n + m, n + m))
    matrix[:n, :n] = hessian
    matrix[:n, n:] = rows.T
    matrix[n:, :n] = rows
    rhs = np.concatenate([rhs_top, rhs_bottom])

    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > condition_limit:
        raise SingularKKT(
            f"Saddle-point matrix is singular (condition number {condition:.3e})",
            condition=float(condition),
        )
    solution = linalg.solve(matrix, rhs)
    residual = float(np.linalg.norm(matrix @ solution - rhs) / (1.0 + np.linalg.norm(rhs)))
    logger.debug(f"KKT solve: condition {condition:.3e}, residual {residual:.3e}")
    if residual > residual_tol:
        raise SingularKKT(
            f"Saddle-point residual {residual:.3e} exceeds {residual_tol:.1e}",
            residual=residual,
        )
    return KKTSolution(wdot=solution[:n], multipliers=-solution[n:], residual=residual)


class MechanicalSystem(abc.ABC):
    """Interface shared by full and reduced systems."""

    mode = "full"

    @property
    @abc.abstractmethod
    def position_dim(self):
        ...

    @property
    @abc.abstractmethod
    def velocity_dim(self):
        ...

    @abc.abstractmethod
    def rate(self, x, w):
        """Time derivative of the positions."""

    @abc.abstractmethod
    def lagrangian(self, x, w):
        ...

    @abc.abstractmethod
    def momentum(self, x, w):
        ...

    @abc.abstractmethod
    def momentum_jacobians(self, x, w):
        """Return ``(dP/dw, dP/dx)`` for the momentum map ``P``."""

    @abc.abstractmethod
    def generalized_force(self, x, w, p):
        """
        Force ``F`` such that smooth motion satisfies ``pdot - F = R^T lambda``.
        """

    @abc.abstractmethod
    def constraint_rows(self, x):
        """All annihilator rows the velocities must satisfy (w-space)."""

    @abc.abstractmethod
    def constraint_rows_derivative(self, x):
        """Derivative ``[a, i, j]`` of the enforced rows with respect to ``x[j]``."""

    @abc.abstractmethod
    def boundary_value(self, x):
        ...

    @abc.abstractmethod
    def boundary_gradient(self, x):
        """Gradient of the boundary function in x-space."""

    @abc.abstractmethod
    def boundary_covector(self, x):
        """Boundary conormal acting on velocities, ``db . rate(x, w)``."""

    @abc.abstractmethod
    def make_state(self, t, x, w, p):
        ...

    def enforced_rows(self, x):
        """Rows imposed by the smooth solver; all constraint rows by default."""
        return self.constraint_rows(x)

    def check_guard(self, x, tolerances):
        """Raise GuardViolation when ``x`` leaves the model's domain of validity."""

    def velocity_hessian(self, x, w):
        return self.momentum_jacobians(x, w)[0]

    def energy(self, x, w, p):
        return float(np.dot(p, w) - self.lagrangian(x, w))

    def energy_from_velocity(self, x, w):
        return self.energy(x, w, self.momentum(x, w))

    def acceleration(self, x, w, tolerances):
        """Index-reduced saddle-point solve for ``(wdot, lambda)``."""
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        hessian, mixed = self.momentum_jacobians(x, w)
        xdot = self.rate(x, w)
        p = self.momentum(x, w)
        rows = self.enforced_rows(x)
        rows_derivative = self.constraint_rows_derivative(x)
        rhs_top = self.generalized_force(x, w, p) - mixed @ xdot
        rhs_bottom = -np.einsum("aij,j,i->a", rows_derivative, xdot, w)
        return solve_kkt(
            hessian,
            rows,
            rhs_top,
            rhs_bottom,
            tolerances.kkt_residual_tol,
            tolerances.kkt_condition_limit,
        )

    def momentum_rate(self, x, w, wdot):
        hessian, mixed = self.momentum_jacobians(x, w)
        return hessian @ wdot + mixed @ self.rate(x, w)

    def balance_residual(self, x, w, p, pdot):
        """``pdot - F``; lies in the span of the constraint rows along smooth motion."""
        return np.asarray(pdot, dtype=float) - self.generalized_force(x, w, p)

    def metric(self, x, w):
        """Kinetic metric when positive definite, else the Euclidean one."""
        hessian = self.velocity_hessian(x, w)
        symmetric = 0.5 * (hessian + hessian.T)
        try:
            linalg.cholesky(symmetric)
        except linalg.LinAlgError:
            return np.eye(hessian.shape[0]), "euclidean"
        return symmetric, "kinetic"

    def project_velocity(self, x, w, rows=None):
        """Metric-orthogonal projection of ``w`` onto ker(rows)."""
        rows = self.enforced_rows(x) if rows is None else rows
        if rows.shape[0] == 0:
            return np.asarray(w, dtype=float)
        metric, _ = self.metric(x, w)
        inverse_rows = linalg.solve(metric, rows.T, assume_a="sym")
        gram = rows @ inverse_rows
        return w - inverse_rows @ linalg.solve(gram, rows @ w)

    def constraint_residual(self, x, w):
        rows = self.constraint_rows(x)
        if rows.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(rows @ w)))

    def legendre_residual(self, x, w, p):
        p = np.asarray(p, dtype=float)
        expected = self.momentum(x, w)
        return float(np.max(np.abs(p - expected), initial=0.0) / (1.0 + np.max(np.abs(p), initial=0.0)))


@dataclass(frozen=True)
class SystemSpec(MechanicalSystem):
    """Full problem definition on a single chart."""

    chart: ChartSpec
    lagrangian_spec: LagrangianSpec
    distribution: DistributionSpec
    boundary: BoundarySpec
    connection: ConnectionSpec = field(default_factory=ConnectionSpec)
    layout: object = None
    guard: Callable | None = None
    name: str = "system"
    metadata: dict = field(default_factory=dict)

    mode = "full"

    @property
    def position_dim(self):
        return self.chart.dim

    @property
    def velocity_dim(self):
        return self.chart.dim

    def rate(self, x, w):
        return np.asarray(w, dtype=float)

    def lagrangian(self, x, w):
        return self.lagrangian_spec.value(x, w)

    def momentum(self, x, w):
        return self.lagrangian_spec.fiber_derivative(x, w)

    def momentum_jacobians(self, x, w):
        return (
            self.lagrangian_spec.velocity_hessian(x, w),
            self.lagrangian_spec.mixed_hessian(x, w),
        )

    def generalized_force(self, x, w, p):
        force = horizontal_derivative(self.lagrangian_spec, self.connection, x, w, p)
        if self.connection.is_flat:
            return force
        # Move the covariant correction of pdot to the force side
        return force - (covariant_momentum_rate(self.connection, x, w, p, np.zeros_like(p)))

    def constraint_rows(self, x):
        return self.distribution.annihilator(x)

    def constraint_rows_derivative(self, x):
        return self.distribution.derivative(x)

    def boundary_value(self, x):
        return self.boundary.value(x)

    def boundary_gradient(self, x):
        return self.boundary.gradient(x)

    def boundary_covector(self, x):
        return self.boundary.gradient(x)

    def make_state(self, t, x, w, p):
        return PontryaginState(
            t=float(t),
            q=np.array(x, dtype=float),
            v=np.array(w, dtype=float),
            p=np.array(p, dtype=float),
        )

    def check_guard(self, x, tolerances):
        if self.guard is None:
            return
        reason = self.guard(np.asarray(x, dtype=float), tolerances)
        if reason:
            raise GuardViolation(reason, q=np.asarray(x, dtype=float).tolist())
