"""
Check results and reports shared by geometry validation, derivative audits
and trajectory audits.
"""
from dataclasses import dataclass, field
from enum import Enum


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"


@dataclass
class CheckResult:
    name: str
    status: CheckStatus
    worst_residual: float | None = None
    tolerance: float | None = None
    locations: list = field(default_factory=list)
    detail: str = ""

    @classmethod
    def measure(cls, name, residual, tolerance, locations=(), detail=""):
        """Pass when ``residual <= tolerance``; NaN always fails."""
        residual = float(residual)
        ok = residual <= tolerance
        return cls(
            name=name,
            status=CheckStatus.PASS if ok else CheckStatus.FAIL,
            worst_residual=residual,
            tolerance=float(tolerance),
            locations=[] if ok else [int(i) for i in locations],
            detail=detail,
        )

    @classmethod
    def skipped(cls, name, reason, tolerance=None):
        return cls(
            name=name,
            status=CheckStatus.SKIPPED,
            tolerance=None if tolerance is None else float(tolerance),
            detail=reason,
        )

    @classmethod
    def failed(cls, name, detail, tolerance=None, locations=()):
        return cls(
            name=name,
            status=CheckStatus.FAIL,
            tolerance=None if tolerance is None else float(tolerance),
            locations=[int(i) for i in locations],
            detail=detail,
        )

    @property
    def passed(self):
        return self.status != CheckStatus.FAIL


@dataclass
class AuditReport:
    subject: str
    checks: list = field(default_factory=list)

    def add(self, check):
        self.checks.append(check)
        return check

    def get(self, name):
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def failures(self):
        return [c for c in self.checks if c.status == CheckStatus.FAIL]

    @property
    def passed(self):
        return not self.failures

    def summary(self):
        counts = {status: 0 for status in CheckStatus}
        for check in self.checks:
            counts[check.status] += 1
        return (
            f"{self.subject}: {counts[CheckStatus.PASS]} passed, "
            f"{counts[CheckStatus.FAIL]} failed, {counts[CheckStatus.SKIPPED]} skipped"
        )
