"""Refinement studies against exact, manufactured and oracle solutions.

Each study returns plain data (a :class:`ConvergenceReport` or a dict) so the
command-line front end and the test-suite share one implementation.
"""

from __future__ import annotations

import numpy as np

from .einstein import (
    BoundaryData,
    CollidingData,
    FieldSet,
    constraint_consistent_u0,
    evolve,
    linearization_check,
    monitor_constraint,
    solve_colliding,
)
from .go_solvers import RayCoefficients, solve_diffractive, solve_hs
from .grid import ConvergenceReport, Grid3, build_grid, estimate_order
from .mms import reference_einstein_solution

__all__ = [
    "pulse_profiles",
    "pulse_grid",
    "evolve_pulse",
    "einstein_mms_study",
    "constraint_study",
    "reduction_consistency",
    "colliding_exact_fields",
    "colliding_exact_study",
    "hs_exact_solution",
    "hs_exact_study",
    "parabolic_plane_wave",
    "parabolic_study",
    "linearization_study",
    "stationarity_study",
    "t_oracle_check",
    "ricci_sweep",
    "single_plane_wave",
    "reduced_match_study",
]


# -- reference pulse ------------------------------------------------------------


def pulse_profiles(amplitude: float = 0.01, m_ratio: float = 0.5, width: float = 1.0):
    """``V0 = A sin^4(pi theta) exp(-(eta/w)^2)`` and ``M0 = m_ratio V0`` on ``v = 0``."""

    def V0(t, e):
        return amplitude * np.sin(np.pi * t) ** 4 * np.exp(-((e / width) ** 2))

    def M0(t, e):
        return m_ratio * V0(t, e)

    return V0, M0


def pulse_grid(m: int, half_width: float = 4.0, step_ratio: float = 0.4, v_end: float = 1.0) -> Grid3:
    """``(m+1)^2`` nodes on ``[0,1] x [-L, L]`` and ``k = step_ratio h_eta^2`` in ``v``."""
    he = 2.0 * half_width / m
    k = step_ratio * he * he
    nv = int(np.ceil(v_end / k)) + 1
    return build_grid([(0.0, 1.0), (-half_width, half_width), (0.0, v_end)], [m + 1, m + 1, nv])


def evolve_pulse(grid: Grid3, amplitude: float = 0.01, m_ratio: float = 0.5, width: float = 1.0,
                 **kwargs) -> FieldSet:
    """Evolve the reference pulse with ``U0`` from the theta-constraint."""
    V0, M0 = pulse_profiles(amplitude, m_ratio, width)
    U0 = constraint_consistent_u0(V0, M0, grid.theta, grid.eta)
    return evolve(BoundaryData(U0=U0, V0=V0, M0=M0), grid, **kwargs)


# -- studies --------------------------------------------------------------------


def einstein_mms_study(ladder=(33, 65, 129), n_eta: int = 33, v_end: float = 0.5) -> dict:
    """Max-norm errors of ``U, V, M, Y`` against the manufactured solution.

    Returns
    -------
    dict
        Field name to :class:`ConvergenceReport`.
    """
    ref = reference_einstein_solution()
    errs = {k: [] for k in "UVMY"}
    hs = []
    for n in ladder:
        g = build_grid([(0.0, 1.0), (-4.0, 4.0), (0.0, v_end)], [n, n_eta, n])
        fs = evolve(ref.boundary_data(), g, sources=ref.sources, require_constraint=False)
        th, e, v = g.mesh()
        for k in "UVMY":
            errs[k].append(float(np.max(np.abs(getattr(fs, k).values - ref.fields[k](th, e, v)))))
        hs.append(g.d_theta)
    return {k: estimate_order(hs, errs[k], field=k) for k in "UVMY"}


def constraint_study(ladder=(32, 64, 128), amplitude: float = 0.01) -> ConvergenceReport:
    """Max over the grid of the discrete theta-constraint for the reference pulse.

    ``meta['finest_max_abs']`` is the residual on the finest grid.
    """
    errs, hs = [], []
    for m in ladder:
        g = pulse_grid(m)
        fs = evolve_pulse(g, amplitude)
        errs.append(monitor_constraint(fs).max_abs)
        hs.append(g.d_eta)
    return estimate_order(hs, errs, finest_max_abs=errs[-1], amplitude=amplitude,
                          ladder=list(ladder))


def reduction_consistency(n: int = 65, n_eta: int = 5) -> dict:
    """Evolve eta-independent data and compare every eta slice with the plane solver."""
    V0 = lambda t, e: 0.4 * np.sin(np.pi * t) ** 2 + 0.0 * e  # noqa: E731
    M0 = lambda t, e: 0.1 * t + 0.0 * e  # noqa: E731
    M1 = lambda e, v: 0.0 * e + 0.2 * v  # noqa: E731
    g = build_grid([(0.0, 1.0), (-1.0, 1.0), (0.0, 1.0)], [n, n_eta, n])
    U0 = constraint_consistent_u0(V0, M0, g.theta, g.eta)
    fs = evolve(BoundaryData(U0=U0, V0=V0, M0=M0, M1=M1), g)
    plane = Grid3.plane((0.0, 1.0), (0.0, 1.0), n, n)
    cd = CollidingData(U0=U0[:, 0], V0=lambda t: V0(t, 0.0), M0=lambda t: M0(t, 0.0),
                       M1=lambda v: M1(0.0, v))
    col = solve_colliding(cd, plane)
    diffs = {k: float(np.max(np.abs(getattr(fs, k).values - getattr(col, k).values)))
             for k in "UVM"}
    return {"max_abs_difference": max(diffs.values()), "by_field": diffs,
            "max_abs_Y": float(np.max(np.abs(fs.Y.values)))}


def colliding_exact_fields(t, v):
    """``U = -ln(2 + theta + v)``, ``V = 0``, ``M = ln(2 + theta + v) / 2``."""
    s = 2.0 + t + v
    return -np.log(s), 0.0 * s, 0.5 * np.log(s)


def colliding_exact_study(ladder=(17, 33, 65, 129)) -> ConvergenceReport:
    errs, hs = [], []
    for n in ladder:
        g = Grid3.plane((0.0, 1.0), (0.0, 1.0), n, n)
        cd = CollidingData(
            U0=lambda t: colliding_exact_fields(t, 0.0)[0], M0=lambda t: colliding_exact_fields(t, 0.0)[2],
            U1=lambda v: colliding_exact_fields(0.0, v)[0], M1=lambda v: colliding_exact_fields(0.0, v)[2],
        )
        r = solve_colliding(cd, g)
        th, _, v = g.mesh()
        U, V, M = colliding_exact_fields(th, v)
        errs.append(max(float(np.max(np.abs(r.U.values - U))), float(np.max(np.abs(r.V.values - V))),
                        float(np.max(np.abs(r.M.values - M)))))
        hs.append(g.d_theta)
    return estimate_order(hs, errs, finest_error=errs[-1])


def hs_exact_solution(t, v, c0: float = 1.0):
    """``a = c0 theta / (1 + c0 v / 2)`` solves the localized equation with ``Lambda = 1``."""
    return c0 * t / (1.0 + 0.5 * c0 * v)


def hs_exact_study(ladder=(17, 33, 65, 129), c0: float = 1.0) -> ConvergenceReport:
    errs, hs = [], []
    for n in ladder:
        g = Grid3.plane((0.0, 1.0), (0.0, 1.0), n, n)
        st = solve_hs(lambda t: hs_exact_solution(t, 0.0, c0), RayCoefficients(Lambda=1.0),
                      "localized", g, boundary=lambda v: hs_exact_solution(0.0, v, c0))
        th, _, v = g.mesh()
        errs.append(float(np.max(np.abs(st.a.values - hs_exact_solution(th, v, c0)))))
        hs.append(g.d_theta)
    return estimate_order(hs, errs, finest_error=errs[-1])


def parabolic_plane_wave(t, e, v):
    """``a = cos(eta + theta + v/2)`` solves ``a_{theta v} = a_{eta eta}/2``."""
    return np.cos(e + t + 0.5 * v)


def parabolic_study(ladder=(17, 33, 65), step_ratio: float = 0.4) -> ConvergenceReport:
    """Diffractive solver with ``Lambda = N = 0``, ``D = -1`` against the plane wave.

    Eta covers one period ``[0, 2 pi]`` with periodic ends.  The v step is
    tied to ``step_ratio h_eta^2`` so the explicit diffraction bound holds on
    every grid and all spacings shrink together.
    """
    errs, hs = [], []
    for n in ladder:
        he = 2.0 * np.pi / (n - 1)
        nv = int(np.ceil(1.0 / (step_ratio * he * he))) + 1
        g = build_grid([(0.0, 1.0), (0.0, 2.0 * np.pi), (0.0, 1.0)], [n, n, nv])
        st = solve_diffractive(
            lambda t, e: parabolic_plane_wave(t, e, 0.0), RayCoefficients(D=-1.0), g,
            boundary=lambda e, v: parabolic_plane_wave(0.0, e, v), eta_bc="periodic",
        )
        th, e, v = g.mesh()
        errs.append(float(np.max(np.abs(st.a.values - parabolic_plane_wave(th, e, v)))))
        hs.append(g.d_theta)
    return estimate_order(hs, errs, finest_error=errs[-1])


def linearization_study(eps=(1e-2, 5e-3, 2.5e-3), m: int = 32):
    """Linearized-limit defect on the reference pulse geometry."""
    prof = lambda t, e: np.sin(np.pi * t) ** 4 * np.exp(-(e**2))  # noqa: E731
    return linearization_check(list(eps), prof, pulse_grid(m))


def stationarity_study(ladder=(16, 32, 64), n_probes: int = 10, seed: int = 0,
                       amplitude: float = 0.01, step: float = 1e-5) -> dict:
    """Largest probe residual per direction at solver output on each grid.

    Returns
    -------
    dict
        Direction name to :class:`ConvergenceReport`.
    """
    from .variational import DIRECTIONS, probe_margin, random_probes, variational_residual, with_gauge_T

    res = {d: [] for d in DIRECTIONS}
    hs = []
    margin = probe_margin(pulse_grid(min(ladder)))
    for m in ladder:
        g = pulse_grid(m)
        fs = with_gauge_T(evolve_pulse(g, amplitude))
        probes = random_probes(g, n_probes, seed, margin)
        for d in DIRECTIONS:
            res[d].append(max(abs(variational_residual(fs, d, p, step)) for p in probes))
        hs.append(g.d_eta)
    return {d: estimate_order(hs, res[d], direction=d) for d in DIRECTIONS}


def _trig_field(rng):
    a, b, c = rng.uniform(0.5, 2.0, 3)
    p = rng.uniform(0.2, 0.5)

    def value(t, e, v):
        return p * np.sin(a * t + b * e + c * v + 1.0)

    def jet(t, e, v):
        s = a * t + b * e + c * v + 1.0
        return p * np.sin(s), a * p * np.cos(s), -a * a * p * np.sin(s)

    return value, jet


def t_oracle_check(n_cases: int = 5, seed: int = 0, shape=(801, 61, 61), n_nodes: int = 128) -> dict:
    """T-direction residual at random trigonometric fields against quadrature."""
    from .variational import bump_probe, t_variation_oracle, variational_residual

    g = build_grid([(0.0, 1.0), (-1.0, 1.0), (0.0, 1.0)], list(shape))
    cases = []
    for case in range(n_cases):
        rng = np.random.default_rng(seed + case)
        vals, jets = {}, {}
        for name in "UVMY":
            vals[name], jets[name] = _trig_field(rng)
        fs = FieldSet.from_functions(g, vals["U"], vals["V"], vals["M"], vals["Y"],
                                     T=lambda t, e, v: 0.0 * t)
        centre = (rng.uniform(0.4, 0.6), rng.uniform(-0.2, 0.2), rng.uniform(0.4, 0.6))
        width = (0.3, 0.6, 0.35)
        numeric = variational_residual(fs, "T", bump_probe(g, centre, width))
        oracle = t_variation_oracle(jets["U"], jets["V"], jets["M"], centre, width, n_nodes)
        cases.append({"numeric": numeric, "oracle": oracle, "difference": abs(numeric - oracle)})
    return {"cases": cases, "max_difference": max(c["difference"] for c in cases)}


# -- curvature ----------------------------------------------------------------


def ricci_sweep(n_points: int = 100, seed: int = 0, step: float = 1e-4, amplitude: float = 0.5) -> dict:
    """Order formulas against the brute-force oracle at random plane-polarized points.

    Every other point carries a non-zero ``T``.  Returns the largest defect,
    the component where it occurs, and the largest entry that must vanish.
    """
    from .ricci import (metric_jets, plane_polarized_metric, random_plane_polarized_fields,
                        verify_point, zero_pattern)

    rng = np.random.default_rng(seed)
    worst, worst_name, worst_zero, worst_zero_name = 0.0, None, 0.0, None
    for i in range(n_points):
        metric = plane_polarized_metric(random_plane_polarized_fields(rng, amplitude, with_T=i % 2 == 0))
        z = rng.uniform(-1.0, 1.0, 7)
        rep = verify_point(metric, z, step)
        name, entry = max(rep["per_component"].items(), key=lambda kv: kv[1]["defect"])
        if entry["defect"] >= worst:
            worst, worst_name = entry["defect"], name
        zeros = zero_pattern(metric_jets(metric, z))
        zname = max(zeros, key=lambda k: abs(zeros[k]))
        if abs(zeros[zname]) >= worst_zero:
            worst_zero, worst_zero_name = abs(zeros[zname]), zname
    return {"n_points": n_points, "seed": seed, "step": step, "max_defect": worst,
            "worst_component": worst_name, "max_abs_zero": worst_zero,
            "worst_zero_component": worst_zero_name}


def single_plane_wave(k: float = 0.7, a: float = 0.4):
    """Exact theta-only plane wave: ``sigma = (1 - e^{-a theta})/a``, ``U = -2 ln cos(k sigma)``,
    ``V = 2 k sigma``, ``M = a theta``, ``Y = 0``."""
    from .ricci import PlaneWaveFields

    def sigma(t):
        return (1.0 - np.exp(-a * t)) / a

    return PlaneWaveFields(
        U=lambda t, e, v: -2.0 * np.log(np.cos(k * sigma(t))),
        V=lambda t, e, v: 2.0 * k * sigma(t),
        M=lambda t, e, v: a * t + 0.0 * e,
        Y=lambda t, e, v: 0.0 * t,
    )


def reduced_match_study(n_points: int = 20, seed: int = 0) -> dict:
    """Targeted Ricci components on an exact plane wave and on violated data.

    Returns
    -------
    dict
        ``plane_wave_max`` is the largest targeted component on the exact
        wave; ``factors`` lists, per component, the ratio to its matched
        residual at ``n_points`` random violated points with its relative
        spread.
    """
    from .ricci import MATCHED_COMPONENTS, random_plane_polarized_fields, reduced_equation_match

    rng = np.random.default_rng(seed)
    wave = single_plane_wave()
    pw_max = 0.0
    for _ in range(n_points):
        point = (rng.uniform(0.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        r = reduced_equation_match(wave, point)
        pw_max = max(pw_max, max(abs(c["ricci"]) for c in r["components"].values()))
    factors = {k: [] for k in MATCHED_COMPONENTS}
    nonzero = {k: True for k in MATCHED_COMPONENTS}
    for _ in range(n_points):
        fields = random_plane_polarized_fields(rng, with_T=False)
        r = reduced_equation_match(fields, rng.uniform(-1.0, 1.0, 3))
        for k, c in r["components"].items():
            factors[k].append(c["factor"])
            nonzero[k] &= abs(c["ricci"]) > 1e-9 and c["factor"] is not None
    out = {}
    for k, fs in factors.items():
        vals = np.array([np.nan if f is None else f for f in fs])
        mean = float(np.nanmean(vals))
        spread = float(np.nanmax(np.abs(vals - mean)) / abs(mean)) if mean else float("inf")
        out[k] = {"mean_factor": mean, "relative_spread": spread, "all_nonzero": bool(nonzero[k])}
    return {"plane_wave_max": pw_max, "factors": out, "n_points": n_points, "seed": seed}
