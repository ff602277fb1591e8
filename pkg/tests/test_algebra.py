import numpy as np
import pytest

from nonholonomic.algebra import LieAlgebraSpec, ad_star, bracket, hat3, validate_algebra
from nonholonomic.exceptions import InvalidSpec, MissingGenerators
from nonholonomic.reports import CheckStatus


class TestSo3:
    def test_basis_brackets(self):
        alg = LieAlgebraSpec.so3()
        e1, e2, e3 = np.eye(3)
        np.testing.assert_array_equal(bracket(alg, e1, e2), e3)
        np.testing.assert_array_equal(bracket(alg, e2, e3), e1)
        np.testing.assert_array_equal(bracket(alg, e3, e1), e2)

    def test_bracket_is_cross_product(self, rng):
        alg = LieAlgebraSpec.so3()
        for _ in range(10):
            xi, eta = rng.normal(size=(2, 3))
            np.testing.assert_allclose(bracket(alg, xi, eta), np.cross(xi, eta), atol=1e-14)

    def test_coadjoint_pairing(self, rng):
        alg = LieAlgebraSpec.so3()
        for _ in range(10):
            xi, eta, rho = rng.normal(size=(3, 3))
            lhs = float(ad_star(alg, xi, rho) @ eta)
            rhs = float(rho @ bracket(alg, xi, eta))
            assert lhs == pytest.approx(rhs, abs=1e-13)

    def test_coadjoint_action_is_momentum_cross_velocity(self):
        alg = LieAlgebraSpec.so3()
        xi = np.array([0.1, 0.2, 0.3])
        rho = np.array([1.0, -1.0, 2.0])
        np.testing.assert_allclose(ad_star(alg, xi, rho), np.cross(rho, xi), atol=1e-15)
        np.testing.assert_allclose(ad_star(alg, xi, rho, sign=-1), np.cross(xi, rho), atol=1e-15)

    def test_validation_passes(self, tolerances):
        report = validate_algebra(LieAlgebraSpec.so3(), tolerances)
        assert report.passed, report.summary()
        assert report.get("generator_brackets").status == CheckStatus.PASS

    def test_hat_matches_cross_product(self):
        v = np.array([1.0, 2.0, 3.0])
        w = np.array([-0.5, 0.25, 2.0])
        np.testing.assert_allclose(hat3(v) @ w, np.cross(v, w))
        np.testing.assert_allclose(LieAlgebraSpec.so3().hat(v), hat3(v))


class TestStructureConstants:
    def test_abelian_algebra(self, tolerances):
        alg = LieAlgebraSpec.abelian(2)
        assert alg.is_abelian
        np.testing.assert_array_equal(bracket(alg, np.ones(2), np.array([1.0, -1.0])), np.zeros(2))
        report = validate_algebra(alg, tolerances)
        assert report.passed
        assert report.get("generator_brackets").status == CheckStatus.SKIPPED

    def test_abelian_algebra_has_no_generators(self):
        with pytest.raises(MissingGenerators):
            LieAlgebraSpec.abelian(1).hat(np.ones(1))

    def test_wrong_shape_is_rejected(self):
        with pytest.raises(InvalidSpec):
            LieAlgebraSpec(k=2, c=np.zeros((2, 2)))

    def test_jacobi_violation_is_reported(self, tolerances):
        # Antisymmetric constants that fail the Jacobi identity
        c = np.zeros((3, 3, 3))
        c[0, 1, 0] = 1.0
        c[1, 0, 0] = -1.0
        c[1, 2, 1] = 1.0
        c[2, 1, 1] = -1.0
        c[0, 2, 2] = 1.0
        c[2, 0, 2] = -1.0
        report = validate_algebra(LieAlgebraSpec(k=3, c=c), tolerances)
        assert report.get("antisymmetry").status == CheckStatus.PASS
        assert report.get("jacobi").status == CheckStatus.FAIL

    def test_asymmetric_constants_fail(self, tolerances):
        c = np.zeros((2, 2, 2))
        c[0, 1, 0] = 1.0
        report = validate_algebra(LieAlgebraSpec(k=2, c=c), tolerances)
        assert report.get("antisymmetry").status == CheckStatus.FAIL
