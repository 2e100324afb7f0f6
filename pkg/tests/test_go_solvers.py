import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwdiffract.errors import BlowupError, SolverError, StabilityError
from gwdiffract.go_solvers import (
    RayCoefficients,
    WaveState,
    diffraction_coefficient,
    solve_diffractive,
    solve_hs,
    solve_transport,
)
from gwdiffract.grid import Grid3, build_grid


class TestDiffractionCoefficient:
    def test_plane_case(self):
        s = 1 / np.sqrt(2)
        D, y_v = diffraction_coefficient([s, -s, 0, 0], [0, 0, 1, 0], 1.0)
        assert D == pytest.approx(-1.0)
        assert y_v == 0.0

    def test_zero_gradient(self):
        assert diffraction_coefficient([1, -1, 0, 0], [0, 0, 0, 0], 1.0)[0] == 0.0

    def test_direct_substitution(self):
        assert diffraction_coefficient([1, 0, 0, 0], [1, 0, 1, 0], 2.0)[0] == pytest.approx(-3.0)

    @pytest.mark.parametrize("u,y,c0", [([1, 0], [1, 0, 0], 1.0), ([1, 0], [1, 0], 0.0), ([1], [1], 1.0)])
    def test_rejects_bad_input(self, u, y, c0):
        with pytest.raises(ValueError):
            diffraction_coefficient(u, y, c0)

    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.1, 3))
    def test_spatial_only_gradient_gives_nonpositive_D(self, y, c0):
        D, _ = diffraction_coefficient([1.0, 1.0, 0.0, 0.0], [0.0, *y], c0)
        assert D <= 0.0


class TestTransport:
    def test_zero_damping_keeps_amplitude(self):
        h = solve_transport(2.5, 0.0, 1.0, 50)
        assert np.all(h.A == 2.5) and h.blowup_at is None

    def test_unit_damping(self):
        assert solve_transport(1.0, 1.0, 1.0, 1000).A[-1] == pytest.approx(np.exp(-1.0), abs=1e-8)

    def test_caustic_growth_and_blowup_flag(self):
        h = solve_transport(1.0, lambda v: -1.0 / (1.0 - v), 0.999, 2000, cap=100.0)
        assert h.blowup_at is not None and 0.98 < h.blowup_at < 0.999
        mid = len(h.v) // 2
        assert h.A[mid] == pytest.approx(1.0 / (1.0 - h.v[mid]), rel=1e-8)

    def test_nonfinite_coefficient(self):
        with pytest.raises(ValueError, match="non-finite"):
            solve_transport(1.0, lambda v: np.nan, 1.0, 10)


def hs_grid(n=33, theta=(0.0, 1.0), v=(0.0, 1.0)):
    return Grid3.plane(theta, v, n, n)


class TestHunterSaxton:
    def test_zero_lambda_keeps_profile(self):
        g = hs_grid()
        f = lambda t: np.sin(3 * t) + t**2  # noqa: E731
        st_ = solve_hs(f, RayCoefficients(), "localized", g, boundary=lambda v: 0 * v)
        assert np.max(np.abs(st_.a.values[:, 0, :] - f(g.theta)[:, None])) < 1e-12

    def test_exact_family_at_v2(self):
        errs = []
        for n in (17, 33, 65):
            g = Grid3.plane((0, 1), (0, 2), n, n)
            a = solve_hs(lambda t: t, RayCoefficients(Lambda=1.0), "localized", g, boundary=lambda v: 0 * v)
            errs.append(abs(a.a.values[-1, 0, -1] - 0.5))
        assert errs[-1] < 1e-4
        assert errs[0] / errs[-1] > 10

    def test_periodic_mean_is_preserved(self):
        g = Grid3.plane((0, 2 * np.pi), (0, 1), 65, 33)
        st_ = solve_hs(lambda t: 0.05 * np.sin(t), RayCoefficients(Lambda=1.0), "periodic", g)
        assert st_.period == pytest.approx(2 * np.pi)
        assert np.max(np.abs(st_.theta_mean())) < 1e-10

    def test_nonzero_mean_rejected(self):
        g = Grid3.plane((0, 2 * np.pi), (0, 1), 33, 9)
        with pytest.raises(ValueError, match="non-zero-mean"):
            solve_hs(lambda t: 1 + np.sin(t), RayCoefficients(Lambda=1.0), "periodic", g)

    def test_diffraction_rejected(self):
        with pytest.raises(ValueError, match="D = 0"):
            solve_hs(lambda t: t, RayCoefficients(D=-1.0), "localized", hs_grid())

    def test_breaking_is_located(self):
        # the steepest descent of 0.5 sin(2 pi theta) sits at theta = 1/2 and breaks near v = 2/pi
        g = Grid3.plane((0, 1), (0, 1), 129, 401)
        with pytest.raises(BlowupError) as info:
            solve_hs(lambda t: 0.5 * np.sin(2 * np.pi * t), RayCoefficients(Lambda=1.0), "periodic", g, cap=50.0)
        cell = info.value.report["cell"]
        assert cell["theta"] == pytest.approx(0.5)
        assert 2 / np.pi < cell["v"] < 0.75

    def test_coarse_v_step_fails_loudly(self):
        g = Grid3.plane((0, 1), (0, 4), 33, 129)
        with pytest.raises(SolverError):
            solve_hs(lambda t: np.sin(2 * np.pi * t), RayCoefficients(Lambda=1.0), "periodic", g, cap=50.0)

    def test_localized_mean_is_rejected(self):
        st_ = solve_hs(lambda t: t, RayCoefficients(), "localized", hs_grid(9))
        with pytest.raises(ValueError):
            st_.theta_mean()

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            WaveState(hs_grid().zeros(), "other")


class TestDiffractive:
    def test_eta_independent_matches_hs(self):
        g3 = build_grid([(0, 1), (-1, 1), (0, 1)], (33, 9, 33))
        coeffs = RayCoefficients(Lambda=1.0, D=-1.0, N=0.3)
        full = solve_diffractive(lambda t, e: t + 0 * e, coeffs, g3, boundary=lambda e, v: 0 * e)
        plane = solve_hs(lambda t: t, RayCoefficients(Lambda=1.0, N=0.3), "localized", hs_grid(33),
                         boundary=lambda v: 0 * v)
        for j in range(g3.n_eta):
            assert np.max(np.abs(full.a.values[:, j, :] - plane.a.values[:, 0, :])) < 1e-12

    def test_no_diffraction_keeps_boundary_data(self):
        g = build_grid([(0, 1), (-1, 1), (0, 1)], (17, 9, 17))
        f = lambda t, e: np.sin(2 * t) * np.cos(e)  # noqa: E731
        st_ = solve_diffractive(f, RayCoefficients(), g, boundary=lambda e, v: 0 * e + 0 * v)
        th, et = np.meshgrid(g.theta, g.eta, indexing="ij")
        assert np.max(np.abs(st_.a.values - f(th, et)[..., None])) < 1e-12

    def test_plane_wave_second_order(self):
        errs = []
        for n in (17, 33):
            g = build_grid([(0, 1), (0, 2 * np.pi), (0, 1)], (n, n, int(2.5 * (n - 1)) * 3 + 1))
            ex = lambda t, e, v: np.cos(e + t + 0.5 * v)  # noqa: E731
            st_ = solve_diffractive(lambda t, e: ex(t, e, 0), RayCoefficients(D=-1.0), g,
                                    boundary=lambda e, v: ex(0, e, v), eta_bc="periodic")
            errs.append(np.max(np.abs(st_.a.values - g.sample(ex).values)))
        assert np.log2(errs[0] / errs[1]) > 1.7

    def test_stability_limit(self):
        g = build_grid([(0, 1), (-1, 1), (0, 1)], (9, 9, 3))
        with pytest.raises(StabilityError):
            solve_diffractive(lambda t, e: 0 * t, RayCoefficients(D=-1.0), g)

    def test_diffraction_needs_eta_points(self):
        g = build_grid([(0, 1), (-1, 1), (0, 1)], (9, 2, 9))
        with pytest.raises(ValueError, match="3 eta"):
            solve_diffractive(lambda t, e: 0 * t, RayCoefficients(D=-1.0), g)

    def test_blowup_reports_location(self):
        g = build_grid([(0, 1), (-1, 1), (0, 1)], (129, 5, 401))
        with pytest.raises(BlowupError) as info:
            solve_diffractive(lambda t, e: 0.5 * np.sin(2 * np.pi * t) + 0 * e, RayCoefficients(Lambda=1.0),
                              g, mode="periodic", cap=50.0)
        assert set(info.value.report["cell"]) >= {"theta", "eta", "v"}
