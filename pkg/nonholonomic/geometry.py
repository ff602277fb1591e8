"""
Configuration chart, boundary, constraint distribution and linear
connection, plus the subspaces built from them.

Distributions are given by their annihilator one-forms (rows of ``mu``);
admissible velocity subspaces are derived numerically.
"""
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from . import finite_differences as fd
from .exceptions import InvalidSpec, NotOnBoundary, RankDeficient
from .reports import AuditReport, CheckResult

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChartSpec:
    dim: int
    coord_names: tuple
    periodic: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSpec("Chart dimension must be at least 1", dim=self.dim)
        if len(self.coord_names) != self.dim:
            raise InvalidSpec(
                f"Chart has {self.dim} dimensions but {len(self.coord_names)} coordinate names",
                coord_names=list(self.coord_names),
            )
        if len(set(self.coord_names)) != len(self.coord_names):
            raise InvalidSpec("Coordinate names must be distinct", coord_names=list(self.coord_names))
        if len(self.periodic) != self.dim:
            raise InvalidSpec("periodic must have one flag per coordinate", periodic=list(self.periodic))

    @classmethod
    def euclidean(cls, names, periodic=None):
        names = tuple(names)
        return cls(
            dim=len(names),
            coord_names=names,
            periodic=tuple(periodic) if periodic is not None else (False,) * len(names),
        )


@dataclass(frozen=True)
class BoundarySpec:
    """Interior is ``b < 0``; the boundary is ``b = 0``."""

    b: Callable
    db: Callable

    def value(self, q):
        return float(self.b(np.asarray(q, dtype=float)))

    def gradient(self, q):
        return np.asarray(self.db(np.asarray(q, dtype=float)), dtype=float)

    @classmethod
    def unbounded(cls, dim):
        return cls(b=lambda q: -1.0, db=lambda q: np.zeros(dim))


@dataclass(frozen=True)
class DistributionSpec:
    """
    Constraint distribution given by ``m`` annihilator rows ``mu(q)``.

    ``dmu(q)[a, i, j]`` is the derivative of ``mu[a, i]`` with respect to
    ``q[j]``; it is finite-differenced when omitted.
    """

    m: int
    mu: Callable
    dmu: Callable | None = None

    def annihilator(self, q):
        q = np.asarray(q, dtype=float)
        if self.m == 0:
            return np.zeros((0, q.size))
        return np.atleast_2d(np.asarray(self.mu(q), dtype=float))

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        if self.m == 0:
            return np.zeros((0, q.size, q.size))
        if self.dmu is not None:
            return np.asarray(self.dmu(q), dtype=float)
        return fd.jacobian(self.annihilator, q)

    @classmethod
    def unconstrained(cls):
        return cls(m=0, mu=lambda q: np.zeros((0, len(q))))


@dataclass(frozen=True)
class ConnectionSpec:
    """Christoffel symbols ``gamma(q)[k, i, j] = Gamma^k_ij``; flat when omitted."""

    gamma: Callable | None = None

    @property
    def is_flat(self):
        return self.gamma is None

    def christoffel(self, q):
        q = np.asarray(q, dtype=float)
        if self.gamma is None:
            return np.zeros((q.size, q.size, q.size))
        return np.asarray(self.gamma(q), dtype=float)


@dataclass(frozen=True)
class ImpactCoannihilator:
    rows: np.ndarray
    rank: int

    @property
    def degenerate(self):
        return self.rank < self.rows.shape[0]


def check_full_row_rank(matrix, rank_rtol):
    """Raise RankDeficient unless ``matrix`` has full row rank."""
    matrix = np.atleast_2d(matrix)
    if matrix.shape[0] == 0:
        return
    singular_values = linalg.svdvals(matrix)
    if singular_values.size < matrix.shape[0]:
        raise RankDeficient(
            f"{matrix.shape[0]} constraint rows in {matrix.shape[1]} dimensions",
            rows=matrix.shape[0],
        )
    largest = singular_values[0]
    smallest = singular_values[-1]
    if largest == 0.0 or smallest <= rank_rtol * largest:
        raise RankDeficient(
            f"Constraint rows are rank deficient (smallest singular value {smallest:.3e})",
            smallest=float(smallest),
            largest=float(largest),
        )


def numerical_rank(matrix, rank_rtol):
    matrix = np.atleast_2d(matrix)
    if matrix.size == 0:
        return 0
    singular_values = linalg.svdvals(matrix)
    if singular_values[0] == 0.0:
        return 0
    return int(np.sum(singular_values > rank_rtol * singular_values[0]))


def distribution_basis(dist, q, tolerances):
    """Orthonormal columns spanning the admissible velocities at ``q``."""
    mu = dist.annihilator(q)
    n = mu.shape[1]
    if mu.shape[0] == 0:
        return np.eye(n)
    check_full_row_rank(mu, tolerances.rank_rtol)
    return linalg.null_space(mu)


def null_basis(rows, dim):
    """Orthonormal basis of ker(rows) for possibly empty ``rows``."""
    rows = np.asarray(rows, dtype=float).reshape(-1, dim)
    if rows.shape[0] == 0:
        return np.eye(dim)
    return linalg.null_space(rows)


def impact_coannihilator(dist, bnd, q, tolerances):
    """Stack ``db(q)`` over ``mu(q)``; rows are returned without normalization."""
    value = bnd.value(q)
    if abs(value) > tolerances.boundary_tol:
        raise NotOnBoundary(f"b(q) = {value:.3e} is not on the boundary", b=value)
    rows = np.vstack([bnd.gradient(q)[None, :], dist.annihilator(q)])
    rank = numerical_rank(rows, tolerances.rank_rtol)
    result = ImpactCoannihilator(rows=rows, rank=rank)
    if result.degenerate:
        logger.warning(
            f"Impact coannihilator at q={np.round(q, 6).tolist()} has rank {rank} < {rows.shape[0]}"
        )
    return result


def boundary_gradient_error(bnd, q, step):
    """Componentwise relative error of ``db`` against central differences of ``b``."""
    approx = fd.gradient(bnd.value, q, step)
    return fd.max_relative_error(approx, bnd.gradient(q))


def validate_geometry(system, sample_points, tolerances):
    """Check chart, boundary and distribution invariants at the sample points."""
    report = AuditReport(subject=f"geometry:{system.name}")
    points = [np.asarray(q, dtype=float) for q in sample_points]
    if not points:
        for name in (
            "boundary_gradient",
            "annihilator_rank",
            "basis_annihilation",
            "basis_orthonormality",
            "annihilator_derivative",
        ):
            report.add(CheckResult.skipped(name, "no sample points"))
        return report

    gradient_errors = [
        boundary_gradient_error(system.boundary, q, tolerances.fd_audit_step) for q in points
    ]
    report.add(
        CheckResult.measure(
            "boundary_gradient",
            max(gradient_errors),
            tolerances.gradient_tol,
            locations=[i for i, e in enumerate(gradient_errors) if e > tolerances.gradient_tol],
        )
    )

    dist = system.distribution
    rank_failures = []
    annihilation = []
    orthonormality = []
    for index, q in enumerate(points):
        try:
            basis = distribution_basis(dist, q, tolerances)
        except RankDeficient:
            rank_failures.append(index)
            continue
        mu = dist.annihilator(q)
        annihilation.append(float(np.max(np.abs(mu @ basis), initial=0.0)))
        orthonormality.append(
            float(np.max(np.abs(basis.T @ basis - np.eye(basis.shape[1])), initial=0.0))
        )

    if rank_failures:
        report.add(
            CheckResult.failed(
                "annihilator_rank",
                "rank_deficient",
                tolerance=tolerances.rank_rtol,
                locations=rank_failures,
            )
        )
    else:
        report.add(CheckResult.measure("annihilator_rank", 0.0, tolerances.rank_rtol))

    if annihilation:
        report.add(
            CheckResult.measure(
                "basis_annihilation", max(annihilation), tolerances.orthogonality_tol
            )
        )
        report.add(
            CheckResult.measure(
                "basis_orthonormality", max(orthonormality), tolerances.orthogonality_tol
            )
        )
    else:
        report.add(CheckResult.skipped("basis_annihilation", "no full-rank samples"))
        report.add(CheckResult.skipped("basis_orthonormality", "no full-rank samples"))

    if dist.m == 0 or dist.dmu is None:
        report.add(CheckResult.skipped("annihilator_derivative", "no dmu callback supplied"))
    else:
        errors = [
            fd.max_relative_error(fd.jacobian(dist.annihilator, q), dist.derivative(q))
            for q in points
        ]
        report.add(
            CheckResult.measure(
                "annihilator_derivative",
                max(errors),
                tolerances.derivative_tol,
                locations=[i for i, e in enumerate(errors) if e > tolerances.derivative_tol],
            )
        )
    return report
