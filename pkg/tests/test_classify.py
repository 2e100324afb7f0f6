import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwdiffract.classify import (
    GENUINELY_NONLINEAR,
    INDETERMINATE,
    LINEARLY_DEGENERATE,
    ClassificationError,
    VariationalSystem,
    build_system,
    characteristic_covectors,
    characteristic_data,
    characteristic_samples,
    classify_characteristic,
    coefficient_array,
    decoupled_wave_system,
    eikonal_matrix,
    lambda_tensor,
    null_space,
    polynomial_system,
    scalar_wave_system,
    transport_coefficients,
)

DIRS_2D = [np.array([1.0, 0.0]), np.array([0.6, 0.8]), np.array([-0.28, 0.96])]


def symmetric_random_system(rng, d=1, m=2):
    A0 = rng.normal(size=(d + 1, d + 1, m, m))
    A0 = A0 + A0.transpose(1, 0, 2, 3)
    A0 = A0 + A0.transpose(0, 1, 3, 2)
    A1 = rng.normal(size=(m, d + 1, d + 1, m, m))
    A1 = A1 + A1.transpose(0, 2, 1, 3, 4)
    A1 = A1 + A1.transpose(0, 1, 2, 4, 3)
    return polynomial_system(A0, A1)


class TestSystem:
    def test_symmetry_violation_rejected(self):
        def A(g):
            out = coefficient_array(1, 1)
            out[0, 1, 0, 0] = 1.0
            return out

        with pytest.raises(ClassificationError):
            VariationalSystem(1, 1, A)

    def test_dual_derivatives_match_analytic(self):
        s = scalar_wave_system((1.0, 2.0, 3.0), d=1)
        g = 0.4
        c, dc = 1 + 2 * g + 3 * g * g, 2 + 6 * g
        assert s.coefficient_derivatives([g])[0, 1, 1, 0, 0] == pytest.approx(-c * dc)

    @pytest.mark.parametrize("name,params", [("nope", {}), ("scalar-wave", {"speed": 1})])
    def test_registry_is_strict(self, name, params):
        with pytest.raises(ClassificationError):
            build_system(name, params)

    def test_registry_builds(self):
        assert build_system("decoupled-waves", {"speeds": [1, 3]}).m == 2


class TestEikonalAndNullSpace:
    def test_time_only_covector(self):
        s = decoupled_wave_system((1.0, 2.0))
        assert np.allclose(eikonal_matrix(s, [0.1, 0.2], [1.0, 0.0]), s.coefficients([0.1, 0.2])[0, 0])

    def test_vanishing_coefficients(self):
        s = polynomial_system(np.zeros((2, 2, 1, 1)))
        assert not eikonal_matrix(s, [0.0], [1.0, 1.0]).any()

    def test_simple_kernel(self):
        r = null_space(np.diag([0.0, 1.0]))
        assert r.multiplicity == 1 and np.allclose(r.null_basis, [[1.0, 0.0]])

    def test_zero_matrix(self):
        assert null_space(np.zeros((2, 2))).multiplicity == 2

    def test_threshold(self):
        assert null_space(np.array([[1e-14, 0.0], [0.0, 2.0]]), 1e-8).multiplicity == 1

    def test_asymmetric_rejected(self):
        with pytest.raises(ClassificationError, match="symmetric"):
            null_space(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_scalar_kernel_uses_system_scale(self):
        s = scalar_wave_system((1.0,), d=1)
        assert characteristic_data(s, [0.0], [1.0, 1.0]).multiplicity == 1
        assert characteristic_data(s, [0.0], [1.0, 0.5]).multiplicity == 0

    def test_covectors_of_decoupled_waves(self):
        s = decoupled_wave_system((1.0, 2.0))
        roots = sorted(characteristic_covectors(s, [0.0, 0.0], [1.0])[:, 0])
        assert np.allclose(roots, [-2.0, -1.0, 1.0, 2.0])


class TestLambda:
    def test_scalar_wave_value(self):
        s = scalar_wave_system((1.0, 1.0), d=2)
        du = np.array([1.0, 0.6, 0.8])
        assert lambda_tensor(s, [0.0], du, [[1.0]])[0, 0, 0] == pytest.approx(-1.0)

    @given(st.floats(-0.5, 0.5), st.floats(-2, 2), st.floats(-2, 2))
    def test_constant_speed_is_degenerate(self, g0, kx, ky):
        s = scalar_wave_system((1.7,), d=2)
        du = np.array([1.7 * np.hypot(kx, ky) + 1e-3, kx, ky])
        assert lambda_tensor(s, [g0], du, [[1.0]])[0, 0, 0] == 0.0

    def test_g_independent_pair(self):
        s = decoupled_wave_system((1.0, 2.0))
        assert not lambda_tensor(s, [0.3, -0.1], [1.0, 1.0], np.eye(2)).any()

    @given(st.floats(0.1, 5.0), st.integers(0, 100))
    def test_quadratic_scaling_in_covector(self, scale, seed):
        rng = np.random.default_rng(seed)
        s = symmetric_random_system(rng)
        du, g0 = rng.normal(size=2), rng.normal(size=2)
        R = rng.normal(size=(2, 2))
        assert np.allclose(lambda_tensor(s, g0, scale * du, R), scale**2 * lambda_tensor(s, g0, du, R))

    @given(st.integers(0, 100))
    def test_symmetric_in_last_two_indices(self, seed):
        rng = np.random.default_rng(seed)
        s = symmetric_random_system(rng)
        lam = lambda_tensor(s, rng.normal(size=2), rng.normal(size=2), rng.normal(size=(2, 2)))
        assert np.allclose(lam, lam.transpose(0, 2, 1))

    def test_empty_basis(self):
        s = scalar_wave_system()
        with pytest.raises(ClassificationError, match="not characteristic"):
            lambda_tensor(s, [0.0], [1.0, 1.0], np.zeros((0, 1)))


class TestTransport:
    def test_constant_coefficient_plane_phase(self):
        s = scalar_wave_system((1.0,), d=1)
        du = np.array([1.0, -1.0]) / np.sqrt(2)
        tc = transport_coefficients(s, lambda x: [0.0 * x[0]], du, [1.0], [0.3, 0.7])
        assert tc.N == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(tc.ray_vector / np.linalg.norm(tc.ray_vector), [1, 1] / np.sqrt(2))

    def test_g_independent_system_keeps_only_divergence(self):
        s = decoupled_wave_system((2.0, 1.0))
        tc = transport_coefficients(s, lambda x: [x[0], x[1]], lambda x: [1.0 + 0 * x[0], x[1]],
                                    [1.0, 0.0], [0.2, 0.4])
        assert tc.N == pytest.approx(-0.5 * 4.0)

    def test_manufactured_background(self):
        # c = 1 + g, g0 = 0.1 x + 0.2 t, du = (1, 1 + 0.3 x): N = -0.15 c(g0)^2
        s = scalar_wave_system((1.0, 1.0), d=1)
        tc = transport_coefficients(s, lambda x: [0.2 * x[0] + 0.1 * x[1]],
                                    lambda x: [1.0 + 0 * x[0], 1.0 + 0.3 * x[1]], [1.0], [0.0, 0.5])
        assert tc.N == pytest.approx(-0.15 * 1.05**2, abs=1e-12)


class TestClassify:
    def test_nonlinear_speed(self):
        s = scalar_wave_system((1.0, 1.0), d=2)
        samples = characteristic_samples(s, [[0.1], [0.3], [-0.4]], DIRS_2D)
        rep = classify_characteristic(s, samples)
        assert rep.verdict == GENUINELY_NONLINEAR
        assert rep.n_valid == len(samples)

    def test_constant_speed(self):
        s = scalar_wave_system((2.0,), d=2)
        rep = classify_characteristic(s, characteristic_samples(s, [[0.0], [0.5]], DIRS_2D))
        assert rep.verdict == LINEARLY_DEGENERATE

    def test_speed_with_critical_point(self):
        s = scalar_wave_system((1.0, 0.0, 1.0), d=2)
        rep = classify_characteristic(s, characteristic_samples(s, [[-0.3], [0.0], [0.3]], DIRS_2D))
        assert rep.verdict == INDETERMINATE

    def test_non_characteristic_samples_rejected(self):
        s = scalar_wave_system((1.0, 1.0), d=1)
        rep = classify_characteristic(s, [([0.0], [1.0, 1.0]), ([0.0], [2.0, 1.0])])
        assert rep.n_valid == 1 and rep.rejected[0]["reason"] == "non-characteristic"
        assert rep.as_dict()["verdict"] == GENUINELY_NONLINEAR

    def test_no_valid_samples(self):
        s = scalar_wave_system((1.0,), d=1)
        with pytest.raises(ClassificationError):
            classify_characteristic(s, [([0.0], [2.0, 1.0])])

    def test_double_characteristic_is_not_genuinely_nonlinear(self):
        s = polynomial_system(
            np.array([[np.eye(2) * 0.5, np.zeros((2, 2))], [np.zeros((2, 2)), -0.5 * np.eye(2)]]),
            np.array([np.array([[np.zeros((2, 2)), np.zeros((2, 2))],
                                [np.zeros((2, 2)), -np.eye(2)]])] * 2))
        rep = classify_characteristic(s, [([0.2, 0.1], [np.sqrt(1.6), 1.0])])
        assert rep.multiplicities == [2]
        assert rep.verdict != GENUINELY_NONLINEAR
