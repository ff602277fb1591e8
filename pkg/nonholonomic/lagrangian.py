"""
Lagrangian callbacks, Legendre transform and Pontryagin-bundle energy.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import finite_differences as fd
from .reports import AuditReport, CheckResult


@dataclass(frozen=True)
class LagrangianSpec:
    """
    ``L(q, v)`` with its fiber derivative ``dL_dv`` and partial ``dL_dq``.

    ``d2L_dvdv[i, j]`` and ``d2L_dvdq[i, j] = d^2 L / dv_i dq_j`` are
    finite-differenced from ``dL_dv`` when omitted.
    """

    L: Callable
    dL_dv: Callable
    dL_dq: Callable
    d2L_dvdv: Callable | None = None
    d2L_dvdq: Callable | None = None

    def value(self, q, v):
        return float(self.L(np.asarray(q, dtype=float), np.asarray(v, dtype=float)))

    def fiber_derivative(self, q, v):
        return np.asarray(self.dL_dv(np.asarray(q, dtype=float), np.asarray(v, dtype=float)), dtype=float)

    def partial_q(self, q, v):
        return np.asarray(self.dL_dq(np.asarray(q, dtype=float), np.asarray(v, dtype=float)), dtype=float)

    def velocity_hessian(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.d2L_dvdv is not None:
            return np.asarray(self.d2L_dvdv(q, v), dtype=float)
        return fd.jacobian(lambda w: self.fiber_derivative(q, w), v)

    def mixed_hessian(self, q, v):
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.d2L_dvdq is not None:
            return np.asarray(self.d2L_dvdq(q, v), dtype=float)
        return fd.jacobian(lambda x: self.fiber_derivative(x, v), q)


@dataclass(frozen=True)
class PontryaginState:
    t: float
    q: np.ndarray
    v: np.ndarray
    p: np.ndarray

    # Generic accessors shared with ReducedState
    @property
    def x(self):
        return self.q

    @property
    def w(self):
        return self.v


def legendre(lag, q, v):
    return lag.fiber_derivative(q, v)


def energy(lag, q, v, p):
    return float(np.dot(p, v) - lag.value(q, v))


def horizontal_derivative(lag, connection, q, v, p):
    """dL/dq_i - p_k Gamma^k_ij v^j; the plain partial for a flat connection."""
    partial = lag.partial_q(q, v)
    if connection.is_flat:
        return partial
    gamma = connection.christoffel(q)
    return partial - np.einsum("k,kij,j->i", p, gamma, v)


def covariant_momentum_rate(connection, q, v, p, pdot):
    """pdot_j - Gamma^k_ij v^i p_k."""
    if connection.is_flat:
        return np.asarray(pdot, dtype=float)
    gamma = connection.christoffel(q)
    return np.asarray(pdot, dtype=float) - np.einsum("kij,i,k->j", gamma, v, p)


def fd_audit(lag, samples, tolerances):
    """
    Compare supplied derivatives against central differences.

    ``samples`` is a non-empty iterable of ``(q, v)`` pairs. First
    derivatives are differenced from ``L``; supplied second derivatives are
    differenced from ``dL_dv``.
    """
    samples = [(np.asarray(q, dtype=float), np.asarray(v, dtype=float)) for q, v in samples]
    report = AuditReport(subject="lagrangian")
    tol = tolerances.derivative_tol
    step = tolerances.fd_audit_step

    def measure(name, errors):
        report.add(
            CheckResult.measure(
                name,
                max(errors),
                tol,
                locations=[i for i, e in enumerate(errors) if e > tol],
            )
        )

    measure(
        "fiber_derivative",
        [
            fd.max_relative_error(
                fd.gradient(lambda w: lag.value(q, w), v, step), lag.fiber_derivative(q, v)
            )
            for q, v in samples
        ],
    )
    measure(
        "horizontal_derivative",
        [
            fd.max_relative_error(fd.gradient(lambda x: lag.value(x, v), q, step), lag.partial_q(q, v))
            for q, v in samples
        ],
    )

    if lag.d2L_dvdv is None:
        report.add(CheckResult.skipped("velocity_hessian", "finite-differenced internally"))
        report.add(CheckResult.skipped("hessian_symmetry", "finite-differenced internally"))
    else:
        measure(
            "velocity_hessian",
            [
                fd.max_relative_error(
                    fd.jacobian(lambda w: lag.fiber_derivative(q, w), v, scale=step),
                    lag.velocity_hessian(q, v),
                )
                for q, v in samples
            ],
        )
        asymmetry = []
        for q, v in samples:
            hessian = lag.velocity_hessian(q, v)
            asymmetry.append(float(np.max(np.abs(hessian - hessian.T), initial=0.0)))
        report.add(
            CheckResult.measure(
                "hessian_symmetry",
                max(asymmetry),
                tolerances.symmetry_tol,
                locations=[i for i, e in enumerate(asymmetry) if e > tolerances.symmetry_tol],
            )
        )

    if lag.d2L_dvdq is None:
        report.add(CheckResult.skipped("mixed_hessian", "finite-differenced internally"))
    else:
        measure(
            "mixed_hessian",
            [
                fd.max_relative_error(
                    fd.jacobian(lambda x: lag.fiber_derivative(x, v), q, scale=step),
                    lag.mixed_hessian(q, v),
                )
                for q, v in samples
            ],
        )
    return report
