import numpy as np
import pytest

from nonholonomic import finite_differences as fd
from nonholonomic import scenarios
from nonholonomic.geometry import ConnectionSpec
from nonholonomic.lagrangian import (
    LagrangianSpec,
    covariant_momentum_rate,
    energy,
    fd_audit,
    horizontal_derivative,
    legendre,
)
from nonholonomic.reports import CheckStatus


def unit_pendulum():
    """Spherical pendulum with m = L = 1, built directly."""

    def L(q, v):
        return 0.5 * (v[0] ** 2 + v[1] ** 2 * np.sin(q[0]) ** 2) - 9.8 * np.cos(q[0])

    def dL_dv(q, v):
        return np.array([v[0], v[1] * np.sin(q[0]) ** 2])

    def dL_dq(q, v):
        s, c = np.sin(q[0]), np.cos(q[0])
        return np.array([v[1] ** 2 * s * c + 9.8 * s, 0.0])

    return LagrangianSpec(L=L, dL_dv=dL_dv, dL_dq=dL_dq)


class TestEnergy:
    def test_pendulum_at_horizontal(self):
        lag = unit_pendulum()
        q = np.array([np.pi / 2, 0.0])
        v = np.array([1.0, 0.0])
        assert energy(lag, q, v, legendre(lag, q, v)) == pytest.approx(0.5, abs=1e-12)

    def test_rolling_disk_example(self):
        lag = scenarios.build("rolling_disk").lagrangian_spec
        q = np.zeros(4)
        assert energy(lag, q, np.ones(4), np.full(4, 2.0)) == pytest.approx(4.5)

    def test_rolling_disk_at_rest(self):
        lag = scenarios.build("rolling_disk").lagrangian_spec
        q = np.array([0.1, 0.2, 0.3, 0.4])
        assert energy(lag, q, np.zeros(4), np.array([5.0, -1.0, 2.0, 3.0])) == pytest.approx(0.0)

    def test_matches_classical_energy(self, rng):
        lag = scenarios.build("spherical_pendulum").lagrangian_spec
        for _ in range(10):
            q = np.array([rng.uniform(0.2, 1.2), rng.uniform(-3.0, 3.0)])
            v = rng.normal(size=2)
            classical = float(lag.fiber_derivative(q, v) @ v) - lag.value(q, v)
            assert abs(energy(lag, q, v, legendre(lag, q, v)) - classical) <= 1e-12


class TestLegendre:
    def test_pendulum_momenta(self):
        lag = scenarios.build("spherical_pendulum", {"mass": 2.0, "length": 0.5}).lagrangian_spec
        q = np.array([0.7, 0.1])
        v = np.array([0.3, -1.2])
        expected = 2.0 * 0.25 * np.array([0.3, -1.2 * np.sin(0.7) ** 2])
        np.testing.assert_allclose(legendre(lag, q, v), expected, rtol=1e-14)

    def test_rolling_disk_momenta(self):
        lag = scenarios.build("rolling_disk").lagrangian_spec
        v = np.array([0.5, -0.5, 1.5, 2.0])
        np.testing.assert_allclose(legendre(lag, np.zeros(4), v), [0.5, -0.5, 3.0, 6.0])

    def test_zero_velocity_gives_zero_momentum(self):
        lag = scenarios.build("free_billiard").lagrangian_spec
        np.testing.assert_array_equal(legendre(lag, np.array([0.1, 0.2]), np.zeros(2)), np.zeros(2))


class TestFdAudit:
    def samples(self, rng):
        return [(np.array([rng.uniform(0.2, 1.2), rng.uniform(-1, 1)]), rng.normal(size=2)) for _ in range(5)]

    def test_pendulum_spec_passes(self, tolerances, rng):
        lag = scenarios.build("spherical_pendulum").lagrangian_spec
        report = fd_audit(lag, self.samples(rng), tolerances)
        assert report.passed, report.summary()
        assert report.get("mixed_hessian").status == CheckStatus.PASS

    def test_missing_gravity_term_detected(self, tolerances):
        good = unit_pendulum()
        broken = LagrangianSpec(L=good.L, dL_dv=good.dL_dv, dL_dq=lambda q, v: np.zeros(2))
        q = np.array([np.pi / 2, 0.0])
        report = fd_audit(broken, [(q, np.zeros(2))], tolerances)
        check = report.get("horizontal_derivative")
        assert check.status == CheckStatus.FAIL
        # gravity term 9.8 sin(theta) against a zero derivative
        assert check.worst_residual == pytest.approx(9.8, rel=1e-5)

    def test_free_particle_has_exact_horizontal_derivative(self, tolerances):
        lag = scenarios.build("free_billiard").lagrangian_spec
        report = fd_audit(lag, [(np.array([0.1, 0.2]), np.array([1.0, -2.0]))], tolerances)
        assert report.get("horizontal_derivative").worst_residual == 0.0

    def test_omitted_second_derivatives_are_skipped(self, tolerances):
        report = fd_audit(unit_pendulum(), [(np.array([0.5, 0.0]), np.ones(2))], tolerances)
        assert report.get("velocity_hessian").status == CheckStatus.SKIPPED
        assert report.get("mixed_hessian").status == CheckStatus.SKIPPED

    def test_finite_difference_fallback_matches_analytic(self):
        analytic = scenarios.build("spherical_pendulum").lagrangian_spec
        fallback = unit_pendulum()
        q = np.array([0.6, 0.0])
        v = np.array([0.4, 0.9])
        np.testing.assert_allclose(
            fallback.velocity_hessian(q, v), np.diag([1.0, np.sin(0.6) ** 2]), atol=1e-9
        )
        assert analytic.mixed_hessian(q, v).shape == (2, 2)


class TestConnection:
    def test_flat_connection_gives_partial_derivative(self):
        lag = unit_pendulum()
        q = np.array([0.4, 0.0])
        v = np.array([0.2, 0.3])
        p = legendre(lag, q, v)
        np.testing.assert_array_equal(horizontal_derivative(lag, ConnectionSpec(), q, v, p), lag.partial_q(q, v))
        np.testing.assert_array_equal(covariant_momentum_rate(ConnectionSpec(), q, v, p, p), p)

    def test_christoffel_correction(self):
        gamma = np.zeros((2, 2, 2))
        gamma[0, 0, 1] = 2.0
        connection = ConnectionSpec(gamma=lambda q: gamma)
        lag = LagrangianSpec(
            L=lambda q, v: 0.5 * float(v @ v), dL_dv=lambda q, v: v, dL_dq=lambda q, v: np.zeros(2)
        )
        q = np.zeros(2)
        v = np.array([1.0, 3.0])
        p = np.array([0.5, 0.0])
        # dL/dq_i - p_k Gamma^k_ij v^j = -(0.5 * 2 * 3) in slot 0
        np.testing.assert_allclose(horizontal_derivative(lag, connection, q, v, p), [-3.0, 0.0])
        # pdot_j - Gamma^k_ij v^i p_k = -(2 * 1 * 0.5) in slot 1
        np.testing.assert_allclose(covariant_momentum_rate(connection, q, v, p, np.zeros(2)), [0.0, -1.0])


class TestFiniteDifferences:
    def test_five_point_derivative_is_exact_for_quartics(self):
        h = 0.1
        t = np.arange(10) * h
        values = t**4
        np.testing.assert_allclose(fd.five_point_derivative(values, h), 4.0 * t[2:-2] ** 3, atol=1e-10)

    def test_jacobian_shape(self):
        jac = fd.jacobian(lambda x: np.outer(x, x), np.array([1.0, 2.0, 3.0]))
        assert jac.shape == (3, 3, 3)
