"""Named analytic data profiles addressable from scenario files.

A profile is looked up by name and instantiated with keyword parameters;
unknown names or parameters raise :class:`ProfileError`.  Builders return
the solver inputs for one grid, plus an exact solution where one is known.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .einstein import BoundaryData, CollidingData, Sources, constraint_consistent_u0
from .go_solvers import RayCoefficients
from .grid import Grid3

__all__ = [
    "ProfileError",
    "Profile",
    "EinsteinSetup",
    "CollidingSetup",
    "WaveSetup",
    "PROFILES",
    "get_profile",
    "profile_names",
]


class ProfileError(ValueError):
    """Unknown profile, wrong kind, or bad parameters."""


@dataclass
class EinsteinSetup:
    data: BoundaryData
    sources: Sources | None = None
    exact: dict | None = None
    require_constraint: bool = True


@dataclass
class CollidingSetup:
    data: CollidingData
    exact: Callable | None = None


@dataclass
class WaveSetup:
    initial: Callable
    coefficients: RayCoefficients
    boundary: Callable | None = None
    mode: str = "localized"
    eta_bc: str = "one-sided"
    exact: Callable | None = None


@dataclass(frozen=True)
class Profile:
    name: str
    kind: str
    defaults: dict
    builder: Callable
    description: str = ""
    meta: dict = field(default_factory=dict)

    def build(self, params: dict | None, grid: Grid3):
        params = dict(params or {})
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ProfileError(f"unknown parameters for profile {self.name!r}: {sorted(unknown)}")
        merged = {**self.defaults, **params}
        for key, val in merged.items():
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not np.isfinite(val):
                raise ProfileError(f"parameter {key!r} of profile {self.name!r} must be a finite number")
        return self.builder(grid, **{k: float(v) for k, v in merged.items()})


# -- einstein ---------------------------------------------------------------------


def _einstein_zero(grid):
    return EinsteinSetup(BoundaryData())


def _einstein_pulse(grid, amplitude, m_ratio, width):
    def V0(t, e):
        return amplitude * np.sin(np.pi * t) ** 4 * np.exp(-((e / width) ** 2))

    def M0(t, e):
        return m_ratio * V0(t, e)

    U0 = constraint_consistent_u0(V0, M0, grid.theta, grid.eta)
    return EinsteinSetup(BoundaryData(U0=U0, V0=V0, M0=M0))


def _einstein_gaussian(grid, amplitude, centre, sigma, m_ratio, width):
    def V0(t, e):
        return amplitude * np.exp(-(((t - centre) / sigma) ** 2)) * np.exp(-((e / width) ** 2))

    def M0(t, e):
        return m_ratio * V0(t, e)

    U0 = constraint_consistent_u0(V0, M0, grid.theta, grid.eta)
    t0 = grid.theta0
    return EinsteinSetup(BoundaryData(
        U0=U0, V0=V0, M0=M0,
        V1=lambda e, v: V0(t0, e) + 0.0 * v, M1=lambda e, v: M0(t0, e) + 0.0 * v,
    ))


def _einstein_manufactured(grid):
    from .mms import reference_einstein_solution

    ref = reference_einstein_solution()
    return EinsteinSetup(ref.boundary_data(), ref.sources,
                         {k: ref.fields[k] for k in "UVMY"}, require_constraint=False)


# -- colliding --------------------------------------------------------------------


def _colliding_zero(grid):
    return CollidingSetup(CollidingData())


def _colliding_exact(grid, shift):
    def fields(t, v):
        s = shift + t + v
        return -np.log(s), 0.0 * s, 0.5 * np.log(s)

    return CollidingSetup(
        CollidingData(U0=lambda t: fields(t, grid.v0)[0], M0=lambda t: fields(t, grid.v0)[2],
                      U1=lambda v: fields(grid.theta0, v)[0], M1=lambda v: fields(grid.theta0, v)[2]),
        exact=fields,
    )


def _colliding_pulses(grid, amplitude_theta, amplitude_v):
    t0, v0 = grid.theta0, grid.v0
    lt, lv = grid.lengths[0], grid.lengths[2]

    def Vt(t, e=0.0):
        return amplitude_theta * np.sin(np.pi * (t - t0) / lt) ** 4 + 0.0 * e

    def Vv(v, e=0.0):
        return amplitude_v * np.sin(np.pi * (v - v0) / lv) ** 4 + 0.0 * e

    one = np.array([0.0])
    U0 = constraint_consistent_u0(Vt, None, grid.theta, one)[:, 0]
    U1 = constraint_consistent_u0(Vv, None, grid.v, one)[:, 0]
    return CollidingSetup(CollidingData(U0=U0, V0=Vt, U1=U1, V1=Vv))


# -- model waves ------------------------------------------------------------------


def _wave_zero(grid):
    return WaveSetup(lambda *x: 0.0 * x[0], RayCoefficients(), lambda *x: 0.0 * x[0])


def _hs_exact(grid, c0):
    def exact(t, e, v):
        return c0 * t / (1.0 + 0.5 * c0 * v)

    return WaveSetup(lambda t: exact(t, 0.0, grid.v0), RayCoefficients(Lambda=1.0),
                     lambda v: exact(grid.theta0, 0.0, v), exact=exact)


def _hs_periodic_sine(grid, amplitude, Lambda, N):
    period = grid.lengths[0]
    return WaveSetup(lambda t: amplitude * np.sin(2.0 * np.pi * (t - grid.theta0) / period),
                     RayCoefficients(N=N, Lambda=Lambda), mode="periodic")


def _parabolic_plane_wave(grid, D):
    # a = cos(eta + theta + c v) with c = -D/2 solves a_{theta v} = -D a_{eta eta}/2
    c = -0.5 * D

    def exact(t, e, v):
        return np.cos(e + t + c * v)

    return WaveSetup(lambda t, e: exact(t, e, grid.v0), RayCoefficients(D=D),
                     lambda e, v: exact(grid.theta0, e, v), eta_bc="periodic", exact=exact)


def _gaussian_beam(grid, amplitude, width, D, Lambda):
    lt = grid.lengths[0]

    def initial(t, e):
        return amplitude * np.sin(np.pi * (t - grid.theta0) / lt) ** 2 * np.exp(-((e / width) ** 2))

    return WaveSetup(initial, RayCoefficients(D=D, Lambda=Lambda), lambda e, v: 0.0 * e + 0.0 * v)


PROFILES = {
    p.name: p
    for p in [
        Profile("zero", "einstein", {}, _einstein_zero, "all fields zero"),
        Profile("pulse", "einstein", {"amplitude": 0.01, "m_ratio": 0.5, "width": 1.0},
                _einstein_pulse, "sin^4 pulse in theta with a Gaussian eta envelope"),
        Profile("gaussian-theta-pulse", "einstein",
                {"amplitude": 0.01, "centre": 0.5, "sigma": 0.1, "m_ratio": 0.5, "width": 1.0},
                _einstein_gaussian, "Gaussian pulse in theta with a Gaussian eta envelope"),
        Profile("manufactured", "einstein", {}, _einstein_manufactured,
                "smooth manufactured solution with forcing"),
        Profile("colliding-zero", "colliding", {}, _colliding_zero, "flat space"),
        Profile("colliding-exact", "colliding", {"shift": 2.0}, _colliding_exact,
                "U = -ln(shift + theta + v), M = ln(shift + theta + v)/2"),
        Profile("colliding-pulses", "colliding", {"amplitude_theta": 0.3, "amplitude_v": 0.3},
                _colliding_pulses, "two sin^4 pulses with constraint-consistent U"),
        Profile("wave-zero", "wave", {}, _wave_zero, "zero waveform"),
        Profile("hs-exact", "wave", {"c0": 1.0}, _hs_exact, "a = c0 theta / (1 + c0 v / 2)"),
        Profile("hs-periodic-sine", "wave", {"amplitude": 0.1, "Lambda": 1.0, "N": 0.0},
                _hs_periodic_sine, "one period of a sine; steepens and breaks"),
        Profile("parabolic-plane-wave", "wave", {"D": -1.0}, _parabolic_plane_wave,
                "a = cos(eta + theta - D v / 2), periodic in eta"),
        Profile("gaussian-beam", "wave", {"amplitude": 1.0, "width": 1.0, "D": -1.0, "Lambda": 0.0},
                _gaussian_beam, "sin^2 pulse in theta with a Gaussian eta profile"),
    ]
}


def profile_names(kind: str | None = None) -> list:
    return sorted(n for n, p in PROFILES.items() if kind is None or p.kind == kind)


def get_profile(name: str, kind: str | None = None) -> Profile:
    if name not in PROFILES:
        raise ProfileError(f"unknown profile {name!r}; known: {profile_names(kind)}")
    prof = PROFILES[name]
    if kind is not None and prof.kind != kind:
        raise ProfileError(f"profile {name!r} is a {prof.kind} profile; expected one of "
                           f"{profile_names(kind)}")
    return prof
