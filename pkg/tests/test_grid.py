import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gwdiffract.grid import (
    Grid3,
    GridFunction,
    build_grid,
    diff,
    diff_array,
    estimate_order,
    read_snapshot,
    trapezoid,
    write_snapshot,
)


class TestBuildGrid:
    def test_uniform_spacings(self):
        g = build_grid([(0, 1), (-1, 1), (0, 2)], (3, 3, 3))
        assert g.spacings == (0.5, 1.0, 1.0)

    def test_two_point_axis(self):
        g = build_grid([(0, 1), (0, 1), (0, 1)], (2, 2, 2))
        assert g.d_theta == 1.0

    @pytest.mark.parametrize("extents", [[(0, 0), (0, 1), (0, 1)], [(0, 1), (1, 0), (0, 1)]])
    def test_degenerate_interval(self, extents):
        with pytest.raises(ValueError, match="degenerate interval"):
            build_grid(extents, (3, 3, 3))

    @pytest.mark.parametrize("counts", [(1, 3, 3), (3, 0, 3), (3, 3, 2.5)])
    def test_bad_counts(self, counts):
        with pytest.raises(ValueError):
            build_grid([(0, 1), (0, 1), (0, 1)], counts)

    def test_nonpositive_spacing_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            Grid3(3, 3, 3, 0, 0, 0, 0.1, -1.0, 0.1)

    @given(st.integers(0, 20), st.integers(0, 4), st.integers(0, 7))
    def test_coordinate_is_origin_plus_index_times_spacing(self, i, j, k):
        g = build_grid([(0.3, 1.7), (-2, 2), (0, 0.9)], (21, 5, 8))
        assert g.coordinate(i, j, k) == (0.3 + i * g.d_theta, -2.0 + j * g.d_eta, 0.0 + k * g.d_v)

    def test_plane_grid_has_single_eta_station(self):
        g = Grid3.plane((0, 1), (0, 2), 5, 9, eta=0.25)
        assert g.shape == (5, 1, 9)
        assert g.eta.tolist() == [0.25]
        assert g.lengths == (1.0, 0.0, 2.0)


class TestGridFunction:
    def test_shape_mismatch(self):
        g = build_grid([(0, 1)] * 3, (3, 3, 3))
        with pytest.raises(ValueError, match="shape"):
            GridFunction(g, np.zeros(26))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite_rejected(self, bad):
        g = build_grid([(0, 1)] * 3, (3, 3, 3))
        vals = np.zeros(g.shape)
        vals[1, 1, 1] = bad
        with pytest.raises(ValueError, match="non-finite"):
            GridFunction(g, vals)

    def test_storage_order_theta_fastest(self):
        g = build_grid([(0, 1)] * 3, (3, 2, 2))
        f = g.sample(lambda t, e, v: t + 10 * e + 100 * v)
        assert f.flat()[:4].tolist() == [0.0, 0.5, 1.0, 10.0]

    def test_arithmetic_checks_grid(self):
        g1 = build_grid([(0, 1)] * 3, (3, 3, 3))
        g2 = build_grid([(0, 2)] * 3, (3, 3, 3))
        with pytest.raises(ValueError, match="grid mismatch"):
            g1.zeros() + g2.zeros()


class TestDiff:
    def test_constant_has_zero_derivative(self):
        g = build_grid([(0, 1), (0, 1), (0, 1)], (6, 5, 4))
        f = g.sample(lambda t, e, v: 3.0 + 0 * t)
        for axis in ("theta", "eta", "v"):
            for order in (1, 2):
                assert np.max(np.abs(diff(f, axis, order).values)) < 1e-12

    def test_quadratic_second_derivative_exact(self):
        g = build_grid([(0, 1), (0, 1), (0, 1)], (9, 3, 3))
        f = g.sample(lambda t, e, v: t**2)
        assert np.allclose(diff(f, "theta", 2).values[1:-1], 2.0, atol=1e-12, rtol=0)

    def test_sine_derivative_order_two(self):
        errs, hs = [], []
        for h in (0.1, 0.05, 0.025):
            n = int(round(2.0 / h)) + 1
            g = build_grid([(0, 2), (0, 1), (0, 1)], (n, 3, 3))
            f = g.sample(lambda t, e, v: np.sin(t))
            err = np.max(np.abs(diff(f, "theta").values - np.cos(g.mesh()[0])))
            errs.append(err)
            hs.append(g.d_theta)
        assert abs(estimate_order(hs, errs).observed_order - 2.0) < 0.1

    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
    def test_stencils_exact_on_quadratics(self, c):
        x = np.linspace(-1, 1, 7)
        f = c[0] + c[1] * x + c[2] * x**2
        assert np.allclose(diff_array(f, x[1] - x[0], 0, 1), c[1] + 2 * c[2] * x, atol=1e-9)
        assert np.allclose(diff_array(f, x[1] - x[0], 0, 2), 2 * c[2], atol=1e-9)

    def test_periodic_matches_analytic(self):
        x = np.linspace(0, 2 * np.pi, 65)
        d = diff_array(np.sin(x), x[1] - x[0], 0, 1, periodic=True)
        assert np.max(np.abs(d - np.cos(x))) < 2e-3
        assert d[0] == d[-1]

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="too few"):
            diff_array(np.zeros(2), 0.1, 0)

    def test_unknown_axis(self):
        g = build_grid([(0, 1)] * 3, (3, 3, 3))
        with pytest.raises(ValueError, match="unknown axis"):
            diff(g.zeros(), "x")


class TestEstimateOrder:
    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_exact_power_law(self, p):
        hs = [0.1, 0.05, 0.025]
        assert estimate_order(hs, [h**p for h in hs]).observed_order == pytest.approx(p)

    def test_hand_computed(self):
        r = estimate_order([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4])
        assert r.observed_order == pytest.approx(2.0)

    def test_pairs_form(self):
        r = estimate_order([(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4)])
        assert r.observed_order == pytest.approx(2.0)

    def test_zero_error_is_infinite_order(self):
        r = estimate_order([0.1, 0.05, 0.025], [0.0, 0.0, 0.0])
        assert math.isinf(r.observed_order)
        assert r.as_dict()["observed_order"] == "inf"

    @pytest.mark.parametrize("hs,errs", [([0.1, 0.05], [1, 2]), ([0.1, 0.05, 0.1], [1, 2, 3]),
                                         ([0.1, 0.05, 0.02], [1, -2, 3]), ([0.1, 0.05], [1, 2, 3])])
    def test_invalid(self, hs, errs):
        with pytest.raises(ValueError):
            estimate_order(hs, errs)


class TestQuadratureAndIO:
    def test_trapezoid_linear_exact(self):
        g = build_grid([(0, 1), (0, 2), (0, 3)], (5, 4, 3))
        f = g.sample(lambda t, e, v: 1 + t + e + v)
        exact = 6.0 * (1 + 0.5 + 1.0 + 1.5)
        assert trapezoid(f) == pytest.approx(exact)

    def test_trapezoid_skips_singleton_axis(self):
        g = Grid3.plane((0, 1), (0, 1), 3, 3)
        assert trapezoid(g.sample(lambda t, e, v: 1 + 0 * t)) == pytest.approx(1.0)

    def test_snapshot_round_trip_and_determinism(self, tmp_path):
        g = build_grid([(0, 1), (-1, 1), (0, 2)], (4, 3, 5))
        f = g.sample(lambda t, e, v: np.sin(t + 2 * e) * np.exp(v) / 3)
        f.name = "demo"
        p1, side = write_snapshot(f, tmp_path / "a" / "f.csv")
        p2, _ = write_snapshot(f, tmp_path / "b" / "f.csv")
        assert p1.read_bytes() == p2.read_bytes()
        back = read_snapshot(p1)
        assert back.grid == g and back.name == "demo"
        assert np.array_equal(back.values, f.values)
        assert side.exists()
