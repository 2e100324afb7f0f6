import warnings

import numpy as np
import pytest
import sympy as sp

from gwdiffract.einstein import (
    BoundaryData,
    CollidingData,
    FieldSet,
    apply_D_eta,
    aux_fields,
    constraint_consistent_u0,
    constraint_residual,
    equation_residuals,
    evolve,
    linearization_check,
    monitor_constraint,
    solve_colliding,
    solve_y,
)
from gwdiffract.errors import BlowupError
from gwdiffract.grid import Grid3, build_grid, estimate_order
from gwdiffract.mms import einstein_manufactured, eta, theta, v
from gwdiffract.studies import colliding_exact_fields, pulse_grid, pulse_profiles


def small_grid(n=9, n_eta=5, n_v=None):
    return build_grid([(0, 1), (-1, 1), (0, 1)], (n, n_eta, n_v or n))


def const(c):
    return lambda t, e, s: c + 0.0 * t


class TestApplyDEta:
    def test_reduces_to_eta_derivative(self):
        g = small_grid()
        fs = FieldSet.zeros(g)
        f = g.sample(lambda t, e, s: e**2 + t)
        assert np.allclose(apply_D_eta(fs, f).values, 2 * g.mesh()[1])

    def test_constant_in_theta_and_eta(self):
        g = small_grid()
        fs = FieldSet.from_functions(g, const(0.3), const(0), const(0), const(1.5))
        assert np.max(np.abs(apply_D_eta(fs, g.sample(lambda t, e, s: s**2)).values)) == 0.0

    def test_hand_substitution(self):
        g = small_grid()
        fs = FieldSet.from_functions(g, const(1.0), const(0), const(0), const(2.0))
        out = apply_D_eta(fs, g.sample(lambda t, e, s: t + e))
        assert np.allclose(out.values, 3 * np.e)
        assert out.values[4, 2, 4] == pytest.approx(8.1548, abs=1e-4)

    def test_grid_mismatch(self):
        fs = FieldSet.zeros(small_grid())
        with pytest.raises(ValueError):
            apply_D_eta(fs, small_grid(11).zeros())

    def test_aux_fields_vanish_on_flat_fields(self):
        aux = aux_fields(FieldSet.zeros(small_grid()))
        assert not aux.phi.values.any() and not aux.psi.values.any()


class TestConstraintResidual:
    def test_flat(self):
        assert not constraint_residual(FieldSet.zeros(small_grid())).F.values.any()

    def test_exact_constraint_solution_second_order(self):
        errs, hs = [], []
        for n in (17, 33, 65):
            g = small_grid(n, 3, 3)
            fs = FieldSet.from_functions(g, lambda t, e, s: -2 * np.log(1 - t / 2), const(0), const(0), const(0))
            errs.append(np.max(np.abs(constraint_residual(fs).F.values)))
            hs.append(g.d_theta)
        assert errs[-1] < 5e-3
        assert estimate_order(hs, errs).observed_order == pytest.approx(2.0, abs=0.3)

    def test_hand_evaluation(self):
        g = small_grid()
        fs = FieldSet.from_functions(g, lambda t, e, s: t, lambda t, e, s: t, const(0), const(0))
        cf = constraint_residual(fs)
        assert np.allclose(cf.F.values, -1.0)
        assert np.allclose(cf.max_abs_by_v, 1.0)

    def test_consistent_initial_data(self):
        g = small_grid(65, 5, 3)
        V0, M0 = pulse_profiles(0.3)
        U0 = constraint_consistent_u0(V0, M0, g.theta, g.eta)
        fs = FieldSet.from_functions(g, lambda t, e, s: 0 * t, lambda t, e, s: V0(t, e),
                                     lambda t, e, s: M0(t, e), const(0))
        fs.U.values[...] = U0[..., None]
        assert np.max(np.abs(constraint_residual(fs).F.values)) < 5e-3


class TestSolveY:
    def test_zero_data(self):
        g = small_grid()
        fs = FieldSet.from_functions(g, lambda t, e, s: 0.1 * t**2, lambda t, e, s: 0.2 * t, const(0), const(0))
        assert not solve_y(fs.U, fs.V, fs.M, 0.0, 0.0).values.any()

    def test_linear_in_theta(self):
        g = small_grid()
        z = g.zeros()
        Y = solve_y(z, z, z, 0.0, 1.0)
        assert np.allclose(Y.values, g.mesh()[0], atol=1e-14)

    def test_manufactured_fourth_order(self):
        t, e, s = theta, eta, v
        mm = einstein_manufactured(t**2 / 5 + t * e / 10, 3 * t / 10 + e * t / 20, -t**2 / 10 + e / 5,
                                   sp.sin(2 * t) * sp.cos(e) + s * t)
        f = mm.fields
        errs, hs = [], []
        for n in (9, 17, 33):
            g = small_grid(n, 5, 3)
            Y = solve_y(g.sample(f["U"]), g.sample(f["V"]), g.sample(f["M"]),
                        lambda a, b: f["Y"](0 * a, a, b), lambda a, b: f["Yt"](0 * a, a, b),
                        source=mm.sources.Y)
            errs.append(np.max(np.abs(Y.values - g.sample(f["Y"]).values)))
            hs.append(g.d_theta)
        assert estimate_order(hs, errs).observed_order == pytest.approx(4.0, abs=0.3)

    def test_nonfinite_boundary(self):
        z = small_grid().zeros()
        with pytest.raises(ValueError, match="non-finite"):
            solve_y(z, z, z, np.nan, 0.0)


class TestEvolve:
    def test_zero_data(self):
        fs = evolve(BoundaryData(), small_grid())
        for f in (fs.U, fs.V, fs.M, fs.Y):
            assert not f.values.any()
        assert max(fs.report["constraint_max_by_v"]) == 0.0

    def test_eta_independent_matches_colliding(self):
        g = small_grid(33, 5, 33)
        fields = colliding_exact_fields
        fs = evolve(BoundaryData(
            U0=lambda t, e: fields(t, 0)[0] + 0 * e, M0=lambda t, e: fields(t, 0)[2] + 0 * e,
            U1=lambda e, s: fields(0, s)[0] + 0 * e, M1=lambda e, s: fields(0, s)[2] + 0 * e), g)
        col = solve_colliding(CollidingData(U0=lambda t: fields(t, 0)[0], M0=lambda t: fields(t, 0)[2],
                                            U1=lambda s: fields(0, s)[0], M1=lambda s: fields(0, s)[2]),
                              Grid3.plane((0, 1), (0, 1), 33, 33))
        for j in range(g.n_eta):
            assert np.max(np.abs(fs.U.values[:, j] - col.U.values[:, 0])) < 1e-10
            assert np.max(np.abs(fs.M.values[:, j] - col.M.values[:, 0])) < 1e-10
        assert not fs.Y.values.any()

    def test_manufactured_convergence(self):
        from gwdiffract.studies import einstein_mms_study

        reps = einstein_mms_study((17, 33, 65), n_eta=9)
        for rep in reps.values():
            assert rep.observed_order == pytest.approx(2.0, abs=0.3)

    def test_seeded_constraint_is_carried_when_U_is_static(self):
        # eta-independent, Y = 0 and U_v = 0 on theta = 0 keep U_v = 0, so F(v) = F(0)
        g = small_grid(33, 3, 33)
        fs = evolve(BoundaryData(U0=lambda t, e: t + 0 * e, V0=lambda t, e: t + 0 * e), g,
                    require_constraint=False)
        rep = monitor_constraint(fs)
        assert np.max(np.abs(fs.U.values - g.mesh()[0])) < 1e-12
        assert np.allclose(rep.max_abs_by_v, 1.0, atol=1e-10)
        assert rep.predicted_defect < 1e-10

    def test_constraint_violation_rejected(self):
        with pytest.raises(ValueError, match="theta-constraint"):
            evolve(BoundaryData(U0=lambda t, e: t + 0 * e, V0=lambda t, e: t + 0 * e), small_grid())

    def test_corner_incompatibility(self):
        with pytest.raises(ValueError, match="corner"):
            evolve(BoundaryData(V0=lambda t, e: 0 * t + 1.0), small_grid(), require_constraint=False)

    def test_bad_eta_bc(self):
        with pytest.raises(ValueError):
            evolve(BoundaryData(), small_grid(), eta_bc="reflecting")

    def test_blowup_cap(self):
        V0, M0 = pulse_profiles(0.05)
        g = pulse_grid(16)
        U0 = constraint_consistent_u0(V0, M0, g.theta, g.eta)
        with pytest.raises(BlowupError) as info:
            evolve(BoundaryData(U0=U0, V0=V0, M0=M0), g, blowup_cap=1e-3)
        assert "cell" in info.value.report

    def test_constraint_preserved_at_second_order(self):
        from gwdiffract.studies import constraint_study

        rep = constraint_study((16, 32, 64))
        assert rep.observed_order == pytest.approx(2.0, abs=0.3)

    def test_residuals_of_flat_fields_vanish(self):
        res = equation_residuals(FieldSet.zeros(small_grid()))
        assert all(not r.values.any() for r in res.values())


class TestColliding:
    def test_zero(self):
        r = solve_colliding(CollidingData(), Grid3.plane((0, 1), (0, 1), 9, 9))
        assert not (r.U.values.any() or r.V.values.any() or r.M.values.any())

    def test_v_independent_data(self):
        g = Grid3.plane((0, 1), (0, 1), 33, 33)
        V0 = lambda t: 0.3 * np.sin(np.pi * t) ** 4  # noqa: E731
        U0 = constraint_consistent_u0(lambda t, e: V0(t) + 0 * e, None, g.theta, [0.0])[:, 0]
        r = solve_colliding(CollidingData(U0=U0, V0=V0), g)
        for f in (r.U, r.V, r.M):
            assert np.max(np.abs(f.values - f.values[..., :1])) < 1e-12

    def test_exact_family_second_order(self):
        from gwdiffract.studies import colliding_exact_study

        rep = colliding_exact_study((17, 33, 65))
        assert rep.observed_order == pytest.approx(2.0, abs=0.3)
        assert rep.meta["finest_error"] < 1e-5

    def test_violated_data_warns_and_reports(self):
        g = Grid3.plane((0, 1), (0, 1), 9, 9)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            r = solve_colliding(CollidingData(U0=lambda t: t, V0=lambda t: t), g)
        assert any("theta-constraint" in str(w.message) for w in caught)
        assert r.report["warnings"] and "v_constraint_max" in r.report


class TestLinearization:
    def test_zero_amplitude(self):
        g = pulse_grid(8)
        rep = linearization_check([0.0], lambda t, e: np.sin(np.pi * t) ** 4 * np.exp(-e * e), g)
        assert rep.defect_abs == [0.0] and rep.order_abs is None

    def test_quadratic_defect(self):
        from gwdiffract.studies import linearization_study

        rep = linearization_study(m=16)
        assert rep.order_abs == pytest.approx(2.0, abs=0.3)
        assert max(rep.u_over_eps2) < 2 * min(rep.u_over_eps2)
