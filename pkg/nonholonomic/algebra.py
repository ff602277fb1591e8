"""
Finite-dimensional Lie algebras given by structure constants.

``c[a, b, d]`` is the structure constant with ``[e_a, e_b] = c[a, b, d] e_d``.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidSpec, MissingGenerators
from .reports import AuditReport, CheckResult, CheckStatus


@dataclass(frozen=True)
class LieAlgebraSpec:
    k: int
    c: np.ndarray
    matrix_generators: tuple | None = None
    name: str = "algebra"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.shape != (self.k, self.k, self.k):
            raise InvalidSpec(
                f"Structure constants must have shape ({self.k}, {self.k}, {self.k})",
                shape=list(c.shape),
            )
        object.__setattr__(self, "c", c)
        if self.matrix_generators is not None:
            generators = tuple(np.asarray(g, dtype=float) for g in self.matrix_generators)
            if len(generators) != self.k:
                raise InvalidSpec(
                    f"Expected {self.k} matrix generators, got {len(generators)}",
                    generators=len(generators),
                )
            object.__setattr__(self, "matrix_generators", generators)

    @property
    def is_abelian(self):
        return not np.any(self.c)

    @classmethod
    def abelian(cls, k, name=None):
        return cls(k=k, c=np.zeros((k, k, k)), name=name or f"abelian({k})")

    @classmethod
    def so3(cls):
        c = np.zeros((3, 3, 3))
        for a, b, d in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            c[a, b, d] = 1.0
            c[b, a, d] = -1.0
        return cls(k=3, c=c, matrix_generators=tuple(hat3(e) for e in np.eye(3)), name="so3")

    def hat(self, xi):
        """Matrix of the algebra element ``xi`` in the generator representation."""
        if self.matrix_generators is None:
            raise MissingGenerators(f"{self.name} has no matrix generators")
        return np.tensordot(np.asarray(xi, dtype=float), np.stack(self.matrix_generators), axes=1)


def hat3(vector):
    x, y, z = vector
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def bracket(alg, xi, eta):
    return np.einsum("abd,a,b->d", alg.c, xi, eta)


def ad_star(alg, xi, rho, sign=1):
    """
    Coadjoint action ``(ad*_xi rho)_b = c[a, b, d] xi_a rho_d``.

    Satisfies ``<ad*_xi rho, eta> = <rho, [xi, eta]>``; ``sign=-1`` flips the
    convention.
    """
    return sign * np.einsum("abd,a,d->b", alg.c, xi, rho)


def validate_algebra(alg, tolerances):
    report = AuditReport(subject=f"algebra:{alg.name}")
    c = alg.c
    asymmetry = float(np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0))
    report.add(
        CheckResult(
            name="antisymmetry",
            status=CheckStatus.PASS if asymmetry == 0.0 else CheckStatus.FAIL,
            worst_residual=asymmetry,
            tolerance=0.0,
        )
    )
    # sum_e c[a,b,e] c[e,c,d] + c[b,c,e] c[e,a,d] + c[c,a,e] c[e,b,d]
    jacobi = (
        np.einsum("abe,ecd->abcd", c, c)
        + np.einsum("bce,ead->abcd", c, c)
        + np.einsum("cae,ebd->abcd", c, c)
    )
    report.add(
        CheckResult.measure(
            "jacobi", float(np.max(np.abs(jacobi), initial=0.0)), tolerances.algebra_tol
        )
    )
    if alg.matrix_generators is None:
        report.add(CheckResult.skipped("generator_brackets", "no matrix generators"))
    else:
        generators = alg.matrix_generators
        worst_error = 0.0
        for a in range(alg.k):
            for b in range(alg.k):
                commutator = generators[a] @ generators[b] - generators[b] @ generators[a]
                expected = alg.hat(c[a, b])
                worst_error = max(worst_error, float(np.max(np.abs(commutator - expected))))
        report.add(CheckResult.measure("generator_brackets", worst_error, tolerances.algebra_tol))
    return report
