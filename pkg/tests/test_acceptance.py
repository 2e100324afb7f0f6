"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly with
``python3 tests/test_acceptance.py``.  Lines are also collected into the
terminal summary by ``conftest.py``.
"""

import time

import numpy as np
import pytest

from gwdiffract import studies
from gwdiffract.classify import (
    LINEARLY_DEGENERATE,
    characteristic_samples,
    classify_characteristic,
    decoupled_wave_system,
    lambda_tensor,
    scalar_wave_system,
)

RESULTS = {}


def report(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return ok


def within_order(order, target=2.0, tol=0.3):
    return abs(order - target) <= tol


def criterion_1():
    t0 = time.perf_counter()
    reps = studies.einstein_mms_study((33, 65, 129), n_eta=33)
    elapsed = time.perf_counter() - t0
    orders = {k: r.observed_order for k, r in reps.items()}
    ok = all(within_order(o) for o in orders.values()) and elapsed < 120.0
    detail = ", ".join(f"{k} {o:.3f}" for k, o in orders.items()) + f"; {elapsed:.1f} s"
    return report(1, "manufactured Einstein orders 2.0 +- 0.3 in < 2 min", ok, detail)


def criterion_2():
    rep = studies.constraint_study((32, 64, 128), amplitude=0.01)
    finest = rep.meta["finest_max_abs"]
    ok = within_order(rep.observed_order) and finest < 1e-4
    return report(2, "constraint preservation order 2.0 +- 0.3, finest < 1e-4", ok,
                  f"order {rep.observed_order:.3f}, finest {finest:.3g}")


def criterion_3():
    t0 = time.perf_counter()
    out = studies.reduction_consistency(65)
    elapsed = time.perf_counter() - t0
    diff = out["max_abs_difference"]
    ok = diff < 1e-10 and elapsed < 10.0
    return report(3, "eta-independent evolve equals colliding solver within 1e-10 in < 10 s", ok,
                  f"max difference {diff:.3g}; {elapsed:.1f} s")


def criterion_4():
    rep = studies.colliding_exact_study()
    finest = rep.meta["finest_error"]
    ok = within_order(rep.observed_order) and finest < 1e-5
    return report(4, "exact colliding family order 2.0 +- 0.3, finest < 1e-5", ok,
                  f"order {rep.observed_order:.3f}, finest {finest:.3g}")


def criterion_5():
    rep = studies.hs_exact_study()
    finest = rep.meta["finest_error"]
    ok = within_order(rep.observed_order) and finest < 1e-5
    return report(5, "Hunter-Saxton exact solution order 2.0 +- 0.3, finest < 1e-5", ok,
                  f"order {rep.observed_order:.3f}, finest {finest:.3g}")


def criterion_6():
    rep = studies.parabolic_study()
    ok = within_order(rep.observed_order)
    return report(6, "parabolic plane wave order 2.0 +- 0.3", ok,
                  f"order {rep.observed_order:.3f}, finest {rep.meta['finest_error']:.3g}")


def criterion_7():
    rep = studies.linearization_study((1e-2, 5e-3, 2.5e-3))
    ratios = rep.u_over_eps2
    bounded = max(ratios) <= 2.0 * min(ratios)
    ok = within_order(rep.order_abs) and bounded
    return report(7, "linearization defect ~ eps^(2.0 +- 0.3), max|U|/eps^2 bounded", ok,
                  f"slope {rep.order_abs:.3f}, max|U|/eps^2 " + ", ".join(f"{r:.4g}" for r in ratios))


def criterion_8():
    t0 = time.perf_counter()
    out = studies.ricci_sweep(100, seed=0)
    elapsed = time.perf_counter() - t0
    ok = out["max_defect"] < 1e-6 and out["max_abs_zero"] < 1e-10 and elapsed < 60.0
    return report(8, "order formulas vs Richardson extraction on 100 points", ok,
                  f"worst defect {out['max_defect']:.3g} ({out['worst_component']}), "
                  f"largest declared zero {out['max_abs_zero']:.3g}; {elapsed:.1f} s")


def criterion_9():
    out = studies.reduced_match_study(20, seed=0)
    spreads = {k: v["relative_spread"] for k, v in out["factors"].items()}
    nonzero = all(v["all_nonzero"] for v in out["factors"].values())
    ok = out["plane_wave_max"] < 1e-9 and nonzero and max(spreads.values()) < 0.01
    return report(9, "reduced equations match Ricci components", ok,
                  f"plane wave max {out['plane_wave_max']:.3g}, largest factor spread "
                  f"{max(spreads.values()):.3g}, violations detected {nonzero}")


def criterion_10():
    reps = studies.stationarity_study((16, 32, 64), n_probes=10, seed=0)
    orders = {d: r.observed_order for d, r in reps.items()}
    oracle = studies.t_oracle_check()
    ok = all(o >= 2.0 for o in orders.values()) and oracle["max_difference"] < 1e-6
    detail = ", ".join(f"{d} {o:.2f}" for d, o in orders.items())
    return report(10, "variational stationarity order >= 2 and T-oracle within 1e-6", ok,
                  f"orders {detail}; oracle difference {oracle['max_difference']:.3g}")


def criterion_11():
    rng = np.random.default_rng(0)
    wave = scalar_wave_system((1.0, 1.0), d=2)
    worst, count = 0.0, 0
    while count < 50:
        g0 = rng.uniform(-0.5, 0.5)
        k = rng.normal(size=2)
        c = 1.0 + g0
        du = np.array([rng.choice([-1.0, 1.0]) * c * np.linalg.norm(k), *k])
        lam = lambda_tensor(wave, [g0], du, np.array([[1.0]]))[0, 0, 0]
        expected = -float(k @ k) * c * 1.0
        worst = max(worst, abs(lam - expected))
        count += 1
    dirs = [np.array([1.0, 0.0]), np.array([0.6, 0.8])]
    const = scalar_wave_system((1.5,), d=2)
    v_const = classify_characteristic(const, characteristic_samples(const, [[0.0], [0.3]], dirs))
    toy = decoupled_wave_system((1.0, 2.0), d=1)
    v_toy = classify_characteristic(
        toy, characteristic_samples(toy, [[0.0, 0.0], [0.4, -0.2]], [np.array([1.0])]))
    ok = worst < 1e-12 and v_const.verdict == LINEARLY_DEGENERATE and v_toy.verdict == LINEARLY_DEGENERATE
    return report(11, "classifier reproduces Lambda and degenerate verdicts", ok,
                  f"Lambda error {worst:.3g} on 50 samples, constant c '{v_const.verdict}', "
                  f"g-independent pair '{v_toy.verdict}'")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 12)])
def test_acceptance(criterion):
    assert criterion(), RESULTS.get(CRITERIA.index(criterion) + 1)


if __name__ == "__main__":
    passed = [c() for c in CRITERIA]
    raise SystemExit(0 if all(passed) else 1)
