"""Geometrical-optics model equations: transport, parabolic and Hunter–Saxton.

The wave solvers integrate

    a_{theta v} = -1/2 Lambda a_theta^2 - Lambda a a_{theta theta} - N a_theta
                  - 1/2 D a_{eta eta} + s(theta, eta, v)

on a characteristic grid with the shared corner scheme of :mod:`.goursat`.
With ``D = 0`` and no eta dependence this is the localized Hunter–Saxton
equation; in periodic mode the mean of the right-hand side over a period is
removed, which keeps the theta-mean of ``a`` fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlowupError, StabilityError
from .goursat import MarchOptions, avg4, march, mid_dtheta
from .grid import Grid3, GridFunction, diff_array

__all__ = [
    "RayCoefficients",
    "WaveState",
    "TransportHistory",
    "diffraction_coefficient",
    "solve_transport",
    "solve_hs",
    "solve_diffractive",
]


def _as_fn(c):
    if callable(c):
        return c
    val = float(c)
    return lambda v: val + 0.0 * np.asarray(v, dtype=float)


@dataclass
class RayCoefficients:
    """Coefficients along a ray, each a function of ``v`` (or a constant)."""

    N: Callable | float = 0.0
    Lambda: Callable | float = 0.0
    D: Callable | float = 0.0

    def __post_init__(self):
        self.N = _as_fn(self.N)
        self.Lambda = _as_fn(self.Lambda)
        self.D = _as_fn(self.D)

    def at(self, v):
        vals = tuple(float(f(v)) for f in (self.N, self.Lambda, self.D))
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite ray coefficient at v={v}")
        return vals


@dataclass
class WaveState:
    """Amplitude waveform on a characteristic grid."""

    a: GridFunction
    waveform_mode: str
    period: float | None = None
    iterations: list = field(default_factory=list)

    def __post_init__(self):
        if self.waveform_mode not in ("periodic", "localized"):
            raise ValueError("waveform_mode must be 'periodic' or 'localized'")

    def theta_mean(self) -> np.ndarray:
        """Mean over one period for each ``(eta, v)``; periodic mode only."""
        if self.waveform_mode != "periodic":
            raise ValueError("theta mean is defined for periodic waveforms")
        return self.a.values[:-1].mean(axis=0)


@dataclass
class TransportHistory:
    v: np.ndarray
    A: np.ndarray
    blowup_at: float | None = None


def diffraction_coefficient(u_gradient, y_gradient, c0: float):
    """Diffraction coefficient and transversality defect of a ray family.

    Parameters
    ----------
    u_gradient, y_gradient : array_like, shape (d+1,)
        Space-time gradients ``(f_t, grad f)`` of the phase and of the
        transverse coordinate.
    c0 : float
        Wave speed.

    Returns
    -------
    D : float
        ``y_t**2 - c0**2 |grad y|**2``.
    y_v : float
        ``u_t y_t - c0**2 grad u . grad y``; zero when ``y`` is constant on rays.
    """
    du = np.asarray(u_gradient, dtype=float)
    dy = np.asarray(y_gradient, dtype=float)
    if du.shape != dy.shape or du.ndim != 1 or du.size < 2:
        raise ValueError("dimension mismatch between phase and transverse gradients")
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    D = dy[0] ** 2 - c0**2 * float(dy[1:] @ dy[1:])
    y_v = du[0] * dy[0] - c0**2 * float(du[1:] @ dy[1:])
    return float(D), float(y_v)


def solve_transport(A0: float, N, v_end: float, n_steps: int = 1000, cap: float = 1e12):
    """Integrate ``A_v + N(v) A = 0`` with classical RK4.

    Stops early and records ``blowup_at`` when ``|A|`` exceeds ``cap``.

    Raises
    ------
    ValueError
        If ``N`` is non-finite at an evaluation point.
    """
    N = _as_fn(N)
    k = float(v_end) / n_steps

    def rate(v, a):
        n = float(N(v))
        if not np.isfinite(n):
            raise ValueError(f"non-finite N at v={v}")
        return -n * a

    vs = [0.0]
    As = [float(A0)]
    a, v = float(A0), 0.0
    for i in range(n_steps):
        k1 = rate(v, a)
        k2 = rate(v + 0.5 * k, a + 0.5 * k * k1)
        k3 = rate(v + 0.5 * k, a + 0.5 * k * k2)
        k4 = rate(v + k, a + k * k3)
        a = a + k * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        v = (i + 1) * k
        vs.append(v)
        As.append(a)
        if not np.isfinite(a) or abs(a) > cap:
            return TransportHistory(np.array(vs), np.array(As), blowup_at=v)
    return TransportHistory(np.array(vs), np.array(As))


def _sample_profile(spec, *coords):
    if callable(spec):
        return np.asarray(spec(*coords), dtype=float)
    return np.asarray(spec, dtype=float)


def _check_stability(grid, coeffs, n_eta_active):
    if not n_eta_active:
        return
    k, he = grid.d_v, grid.d_eta
    vm = grid.v0 + (np.arange(grid.n_v - 1) + 0.5) * k
    dmax = max(abs(coeffs.at(v)[2]) for v in vm)
    ratio = k * dmax / he**2
    if ratio > 0.5:
        raise StabilityError(
            f"diffraction step ratio k|D|/h_eta^2 = {ratio:.4g} exceeds 1/2",
            {"ratio": ratio, "d_v": k, "d_eta": he, "max_abs_D": dmax},
        )


def _march_wave(
    grid: Grid3,
    a0: np.ndarray,
    edge,
    coeffs: RayCoefficients,
    *,
    periodic: bool,
    eta_periodic: bool,
    source,
    cap: float,
    options: MarchOptions,
    use_eta: bool,
):
    h, k = grid.d_theta, grid.d_v
    theta_mid = grid.theta[:-1] + 0.5 * h
    eta = grid.eta
    tm, em = np.meshgrid(theta_mid, eta, indexing="ij")
    cache = {}

    def nodal(n, a):
        att = diff_array(a, h, 0, 2, periodic) if grid.n_theta >= 3 else np.zeros_like(a)
        aee = diff_array(a, grid.d_eta, 1, 2, eta_periodic) if use_eta else np.zeros_like(a)
        return att, aee

    def rhs(n, old, new):
        a_old, a_new = old[0], new[0]
        if n not in cache:
            cache.clear()
            cache[n] = nodal(n, a_old)
        att_o, aee_o = cache[n]
        att_n, aee_n = nodal(n + 1, a_new)
        vm = grid.v0 + (n + 0.5) * k
        N, lam, D = coeffs.at(vm)
        am = avg4(old, new)[0]
        ath = mid_dtheta(old, new, h)[0]
        q = -N * ath
        if lam != 0.0:
            attm = avg4(att_o[None], att_n[None])[0]
            q = q - 0.5 * lam * ath**2 - lam * am * attm
        if D != 0.0 and use_eta:
            q = q - 0.5 * D * avg4(aee_o[None], aee_n[None])[0]
        if source is not None:
            q = q + np.broadcast_to(source(tm, em, vm + 0.0 * tm), tm.shape)
        return q[None]

    def check(n, w):
        a = w[0]
        ath = diff_array(a, h, 0, 1, periodic) if grid.n_theta >= 3 else np.diff(a, axis=0) / h
        bad = ~np.isfinite(ath) | (np.abs(ath) > cap)
        if np.any(bad):
            i, j = np.unravel_index(int(np.argmax(np.where(np.isfinite(ath), np.abs(ath), np.inf))), ath.shape)
            th, et, v = grid.coordinate(int(i), int(j), n)
            raise BlowupError(
                f"gradient blow-up at (theta={th:.6g}, eta={et:.6g}, v={v:.6g})",
                {"cell": {"theta": th, "eta": et, "v": v, "i_theta": int(i), "i_eta": int(j), "level": n},
                 "max_abs_a_theta": float(np.nanmax(np.abs(ath))) if np.any(np.isfinite(ath)) else None,
                 "cap": cap},
            )

    def coords(idx):
        th, et, v = grid.coordinate(*idx)
        return {"theta": th, "eta": et, "v": v}

    res = march(
        a0[None], h, k, grid.n_v, rhs,
        edge=None if periodic else (lambda n: edge(n)[None]),
        periodic=periodic, options=options, check=check, coords=coords,
    )
    return GridFunction(grid, res.values[0], "a"), res.iterations


def solve_hs(
    initial,
    coefficients: RayCoefficients,
    mode: str,
    grid: Grid3,
    boundary=None,
    *,
    source=None,
    cap: float = 1e6,
    options: MarchOptions = MarchOptions(),
    mean_tol: float = 1e-10,
) -> WaveState:
    """Hunter–Saxton equation on a ``(theta, v)`` grid.

    Parameters
    ----------
    initial : callable or array
        ``a(theta, v0)``.
    coefficients : RayCoefficients
        ``D`` must vanish identically.
    mode : {'periodic', 'localized'}
        Periodic mode treats the theta extent as one period (last node equals
        first) and requires zero-mean data.
    grid : Grid3
        Its eta axis is ignored; usually built with :meth:`Grid3.plane`.
    boundary : callable or array, optional
        ``a(theta0, v)`` for localized mode; defaults to the constant corner
        value.
    source : callable, optional
        Forcing ``s(theta, eta, v)`` added to the right-hand side.
    """
    if mode not in ("periodic", "localized"):
        raise ValueError("mode must be 'periodic' or 'localized'")
    vm = grid.v0 + (np.arange(grid.n_v - 1) + 0.5) * grid.d_v
    if any(coefficients.at(v)[2] != 0.0 for v in vm):
        raise ValueError("solve_hs requires D = 0; use solve_diffractive")
    plane = Grid3(grid.n_theta, 1, grid.n_v, grid.theta0, grid.eta0, grid.v0,
                  grid.d_theta, grid.d_eta, grid.d_v)
    a0 = np.broadcast_to(_sample_profile(initial, plane.theta), (plane.n_theta,)).astype(float)
    periodic = mode == "periodic"
    if periodic:
        _check_periodic_data(a0, mean_tol)
        edge = None
    else:
        bvals = (np.full(plane.n_v, a0[0]) if boundary is None
                 else np.broadcast_to(_sample_profile(boundary, plane.v), (plane.n_v,)))
        edge = lambda n: np.array([bvals[n]])  # noqa: E731
    src = None
    if source is not None:
        src = lambda t, e, v: source(t, plane.eta0 + 0.0 * t, v)  # noqa: E731
    a, its = _march_wave(
        plane, a0[:, None], edge, coefficients, periodic=periodic, eta_periodic=False,
        source=src, cap=cap, options=options, use_eta=False,
    )
    period = plane.d_theta * (plane.n_theta - 1) if periodic else None
    a = GridFunction(plane, a.values, "a")
    return WaveState(a, mode, period, its)


def _check_periodic_data(a0, mean_tol):
    scale = 1.0 + float(np.max(np.abs(a0)))
    if abs(a0[-1] - a0[0]) > 1e-9 * scale:
        raise ValueError("periodic data must repeat: last theta node must equal the first")
    if abs(float(np.mean(a0[:-1]))) > mean_tol * scale:
        raise ValueError("non-zero-mean periodic data")


def solve_diffractive(
    initial,
    coefficients: RayCoefficients,
    grid: Grid3,
    boundary=None,
    *,
    mode: str = "localized",
    eta_bc: str = "one-sided",
    source=None,
    cap: float = 1e6,
    options: MarchOptions = MarchOptions(),
    mean_tol: float = 1e-10,
) -> WaveState:
    """Diffractive Hunter–Saxton equation on a ``(theta, eta, v)`` grid.

    Parameters
    ----------
    initial : callable or array
        ``a(theta, eta)`` on ``v = v0``; array shape ``(n_theta, n_eta)``.
    boundary : callable or array, optional
        ``a(eta, v)`` on ``theta = theta0``; array shape ``(n_eta, n_v)``.
        Defaults to the corner values held constant in ``v``.
    eta_bc : {'one-sided', 'periodic'}
        Treatment of the eta ends in the diffraction stencil.

    Raises
    ------
    StabilityError
        When ``k |D| / h_eta**2 > 1/2`` somewhere on the v range.
    BlowupError
        When ``|a_theta|`` exceeds ``cap``.
    """
    if eta_bc not in ("one-sided", "periodic"):
        raise ValueError("eta_bc must be 'one-sided' or 'periodic'")
    if mode not in ("periodic", "localized"):
        raise ValueError("mode must be 'periodic' or 'localized'")
    th, et = np.meshgrid(grid.theta, grid.eta, indexing="ij")
    a0 = np.broadcast_to(_sample_profile(initial, th, et), th.shape).astype(float)
    vm = grid.v0 + (np.arange(grid.n_v - 1) + 0.5) * grid.d_v
    has_D = any(coefficients.at(v)[2] != 0.0 for v in vm)
    use_eta = grid.n_eta >= 3
    if has_D and not use_eta:
        raise ValueError("diffraction needs at least 3 eta points")
    _check_stability(grid, coefficients, use_eta and has_D)
    periodic = mode == "periodic"
    if periodic:
        for j in range(grid.n_eta):
            _check_periodic_data(a0[:, j], mean_tol)
        edge = None
    else:
        if boundary is None:
            bvals = np.repeat(a0[0][:, None], grid.n_v, axis=1)
        else:
            e2, v2 = np.meshgrid(grid.eta, grid.v, indexing="ij")
            bvals = np.broadcast_to(_sample_profile(boundary, e2, v2), e2.shape)
        edge = lambda n: bvals[:, n]  # noqa: E731
    a, its = _march_wave(
        grid, a0, edge, coefficients, periodic=periodic, eta_periodic=eta_bc == "periodic",
        source=source, cap=cap, options=options, use_eta=use_eta,
    )
    period = grid.d_theta * (grid.n_theta - 1) if periodic else None
    return WaveState(a, mode, period, its)
