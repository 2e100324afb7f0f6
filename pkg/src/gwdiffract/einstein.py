"""Plane-polarized diffractive Einstein system in characteristic coordinates.

Unknowns are the metric functions ``U, V, M`` (leading order) and ``Y``
(first order) on a ``(theta, eta, v)`` grid.  The evolution marches the
combinations ``Q = U+V+M``, ``P = U+V`` and ``U`` in ``v``:

    Q_{theta v} = 1/2 P_theta P_v + G1
    P_{theta v} = 1/2 (U_theta P_v + U_v P_theta) + G2
    U_{theta v} = U_theta U_v + G3

with transverse terms ``G1..G3`` built from ``D = e^U (d_eta + Y d_theta)``,
``phi = D M - e^U Y_theta`` and ``psi = D P``.  On every v-level ``Y`` is
recovered from its linear second-order ODE in ``theta``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlowupError, StabilityError
from .go_solvers import RayCoefficients, solve_diffractive
from .goursat import MarchOptions, avg4, march, mid_dtheta, mid_dv
from .grid import Grid3, GridFunction, diff_array, estimate_order

__all__ = [
    "FieldSet",
    "AuxFields",
    "ConstraintField",
    "BoundaryData",
    "CollidingData",
    "CollidingResult",
    "ConstraintReport",
    "LinearizationReport",
    "Sources",
    "apply_D_eta",
    "aux_fields",
    "constraint_residual",
    "solve_y",
    "evolve",
    "solve_colliding",
    "monitor_constraint",
    "linearization_check",
    "constraint_consistent_u0",
    "equation_residuals",
]


# -- data types -------------------------------------------------------------------


@dataclass
class FieldSet:
    """Metric functions on one grid.  ``T`` absent means the ``T = 0`` gauge."""

    U: GridFunction
    V: GridFunction
    M: GridFunction
    Y: GridFunction
    T: GridFunction | None = None
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        g = self.U.grid
        for name in ("V", "M", "Y", "T"):
            f = getattr(self, name)
            if f is not None and f.grid != g:
                raise ValueError(f"field {name} is on a different grid")

    @property
    def grid(self) -> Grid3:
        return self.U.grid

    @classmethod
    def zeros(cls, grid: Grid3, with_T: bool = False) -> "FieldSet":
        z = lambda n: grid.zeros(n)  # noqa: E731
        return cls(z("U"), z("V"), z("M"), z("Y"), z("T") if with_T else None)

    @classmethod
    def from_functions(cls, grid: Grid3, U, V, M, Y, T=None) -> "FieldSet":
        """Sample vectorized callables ``f(theta, eta, v)`` on ``grid``."""
        s = grid.sample
        return cls(s(U, "U"), s(V, "V"), s(M, "M"), s(Y, "Y"), None if T is None else s(T, "T"))

    def arrays(self):
        return self.U.values, self.V.values, self.M.values, self.Y.values

    def T_values(self) -> np.ndarray:
        return np.zeros(self.grid.shape) if self.T is None else self.T.values


@dataclass
class AuxFields:
    """``phi``, ``psi`` and a handle applying ``D_eta``, always recomputed."""

    fields: FieldSet
    eta_periodic: bool = False

    def D_eta(self, f: GridFunction) -> GridFunction:
        return apply_D_eta(self.fields, f, eta_periodic=self.eta_periodic)

    @property
    def phi(self) -> GridFunction:
        fs = self.fields
        D = self.D_eta(fs.M).values
        Yth = _dth(fs.Y.values, fs.grid)
        return GridFunction(fs.grid, D - np.exp(fs.U.values) * Yth, "phi")

    @property
    def psi(self) -> GridFunction:
        fs = self.fields
        return GridFunction(fs.grid, self.D_eta(fs.U + fs.V).values, "psi")


def aux_fields(fields: FieldSet, eta_periodic: bool = False) -> AuxFields:
    return AuxFields(fields, eta_periodic)


@dataclass
class ConstraintField:
    F: GridFunction
    max_abs_by_v: np.ndarray


def _fn2(spec, a, b):
    """Evaluate a two-argument profile (callable or array) on a mesh."""
    if spec is None:
        return np.zeros(np.broadcast_shapes(np.shape(a), np.shape(b)))
    if callable(spec):
        out = np.asarray(spec(a, b), dtype=float)
    else:
        out = np.asarray(spec, dtype=float)
    return np.broadcast_to(out, np.broadcast_shapes(np.shape(a), np.shape(b))).astype(float)


@dataclass
class BoundaryData:
    """Characteristic data for :func:`evolve`.

    ``U0, V0, M0`` are functions of ``(theta, eta)`` on ``v = v0``;
    ``U1, V1, M1, Y0, Y1`` are functions of ``(eta, v)`` on ``theta = theta0``,
    with ``Y1`` the theta-derivative of ``Y`` there.  Each entry may be a
    vectorized callable, an array already sampled on the grid face, or None
    for zero.
    """

    U0: Callable | np.ndarray | None = None
    V0: Callable | np.ndarray | None = None
    M0: Callable | np.ndarray | None = None
    U1: Callable | np.ndarray | None = None
    V1: Callable | np.ndarray | None = None
    M1: Callable | np.ndarray | None = None
    Y0: Callable | np.ndarray | None = None
    Y1: Callable | np.ndarray | None = None

    def initial(self, grid: Grid3):
        th, et = np.meshgrid(grid.theta, grid.eta, indexing="ij")
        return tuple(_fn2(s, th, et) for s in (self.U0, self.V0, self.M0))

    def edge(self, grid: Grid3):
        et, v = np.meshgrid(grid.eta, grid.v, indexing="ij")
        return tuple(_fn2(s, et, v) for s in (self.U1, self.V1, self.M1, self.Y0, self.Y1))


@dataclass
class Sources:
    """Optional forcing for manufactured solutions, each ``s(theta, eta, v)``.

    ``Q``, ``P`` and ``U`` force the three marched equations; ``Y`` forces the
    right-hand side of the ``Y`` equation.
    """

    Q: Callable | None = None
    P: Callable | None = None
    U: Callable | None = None
    Y: Callable | None = None


# -- stencil helpers ------------------------------------------------------------------


def _dth(a, grid, order=1):
    return diff_array(a, grid.d_theta, 0, order)


def _deta(a, grid, order=1, periodic=False):
    if grid.n_eta < 3:
        return np.zeros_like(a)
    return diff_array(a, grid.d_eta, 1, order, periodic)


def apply_D_eta(fields: FieldSet, f: GridFunction, eta_periodic: bool = False) -> GridFunction:
    """``e^U (f_eta + Y f_theta)`` with second-order stencils."""
    if f.grid != fields.grid:
        raise ValueError("grid mismatch")
    g = f.grid
    U, Y = fields.U.values, fields.Y.values
    out = np.exp(U) * (_deta(f.values, g, 1, eta_periodic) + Y * _dth(f.values, g))
    return GridFunction(g, out, "D_eta " + f.name)


def constraint_residual(fields: FieldSet) -> ConstraintField:
    """``F = U_tt - (U_t^2 + V_t^2)/2 + U_t M_t`` pointwise."""
    g = fields.grid
    U, V, M = fields.U.values, fields.V.values, fields.M.values
    F = _constraint_array(U, V, M, g.d_theta)
    return ConstraintField(GridFunction(g, F, "F"), np.abs(F).max(axis=(0, 1)))


def _relative_constraint(U, V, M, h) -> float:
    """``max |F|`` divided by the largest size of the terms composing ``F``."""
    Ut, Vt, Mt = (diff_array(f, h, 0, 1) for f in (U, V, M))
    F = diff_array(U, h, 0, 2) - 0.5 * (Ut**2 + Vt**2) + Ut * Mt
    scale = np.abs(diff_array(U, h, 0, 2)) + 0.5 * (Ut**2 + Vt**2) + np.abs(Ut * Mt)
    fmax, smax = float(np.max(np.abs(F))), float(np.max(scale))
    return 0.0 if fmax == 0.0 else fmax / smax


def _constraint_array(U, V, M, h):
    Ut = diff_array(U, h, 0, 1)
    return (diff_array(U, h, 0, 2) - 0.5 * (Ut**2 + diff_array(V, h, 0, 1) ** 2)
            + Ut * diff_array(M, h, 0, 1))


class _Level:
    """Nodal derivative bundle of ``U, V, M`` on one or more v-levels."""

    def __init__(self, U, V, M, grid, eta_periodic):
        self.grid, self.ep = grid, eta_periodic
        self.U, self.V, self.M = U, V, M
        self.P = U + V
        self.Q = self.P + M
        t = lambda f, o=1: _dth(f, grid, o)  # noqa: E731
        e = lambda f, o=1: _deta(f, grid, o, eta_periodic)  # noqa: E731
        self.Ut, self.Ue = t(U), e(U)
        self.Vt = t(V)
        self.Mt, self.Me = t(M), e(M)
        self.Pt, self.Pe, self.Ptt, self.Pee = t(self.P), e(self.P), t(self.P, 2), e(self.P, 2)
        self.Pte = e(self.Pt)
        self.Qt, self.Qe, self.Qtt, self.Qee = t(self.Q), e(self.Q), t(self.Q, 2), e(self.Q, 2)
        self.Qte = e(self.Qt)

    def y_coefficients(self):
        """``b, c, r`` of ``Y'' - (bY)' + cY = r``, equivalent to the psi-form.

        ``c = -(U_t^2/2 - U_t V_t - V_t^2/2) - F``; the constraint residual
        ``F`` vanishes for admissible data but keeping it makes the
        ``(phi + psi)_theta = psi (U+V)_theta`` form hold identically.
        """
        Ut, Vt = self.Ut, self.Vt
        F = _dth(self.U, self.grid, 2) - 0.5 * (Ut**2 + Vt**2) + Ut * self.Mt
        b = Vt + self.Mt
        c = -(0.5 * Ut**2 - Ut * Vt - 0.5 * Vt**2) - F
        r = self.Qte + self.Me * Ut - self.Pe * Vt
        return b, c, r

    def transverse(self, Y, y1=None, y_source=None):
        """The three transverse terms and ``phi, psi`` for a given ``Y``.

        When ``y1`` (the value of ``Y_theta`` on ``theta = theta0``) is given,
        ``phi + psi`` is integrated in theta from its own equation
        ``(phi + psi)_theta = psi (U+V)_theta - e^U s_Y`` instead of being
        differenced from ``Y``.  This keeps the cancellation between
        ``D_eta (U+V+M)`` and ``e^U Y_theta`` exact at linear order.
        """
        g = self.grid
        Yt = _dth(Y, g)
        Ye = _deta(Y, g, 1, self.ep)
        E = np.exp(self.U)
        E2 = E * E
        a = self.Ue + Y * self.Ut
        psi = E * (self.Pe + Y * self.Pt)
        if y1 is None:
            s = E * (self.Me + Y * self.Mt - Yt) + psi
        else:
            rate = psi * self.Pt
            if y_source is not None:
                rate = rate - E * y_source
            s = np.empty_like(rate)
            s[0] = E[0] * (self.Qe[0] + Y[0] * self.Qt[0] - y1)
            s[1:] = s[0] + np.cumsum(0.5 * g.d_theta * (rate[1:] + rate[:-1]), axis=0)
        phi = s - psi

        def d2(ft, fe, ftt, fte, fee):
            return E2 * (a * (fe + Y * ft) + fee + 2.0 * Y * fte + Y * Y * ftt + (Ye + Y * Yt) * ft)

        d2P = d2(self.Pt, self.Pe, self.Ptt, self.Pte, self.Pee)
        Ds = E * (_deta(s, g, 1, self.ep) + Y * _dth(s, g))
        w = 0.5 * np.exp(-self.Q)
        pp = phi * psi
        G1 = w * (-0.5 * phi**2 - pp)
        G2 = w * (d2P - pp - psi**2)
        G3 = w * (Ds - 0.5 * phi**2 - pp - psi**2)
        return G1, G2, G3, phi, psi


def _interp_mid(f):
    """Cubic Lagrange interpolation of nodal values to theta midpoints."""
    n = f.shape[0]
    if n < 4:
        return 0.5 * (f[:-1] + f[1:])
    out = np.empty((n - 1,) + f.shape[1:])
    out[1:-1] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    out[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    out[-1] = (f[-4] - 5.0 * f[-3] + 15.0 * f[-2] + 5.0 * f[-1]) / 16.0
    return out


def _integrate_y(b, c, r, y0, z0, h, s_node=None, s_mid=None):
    """RK4 along axis 0 for ``Y' = Z + bY``, ``Z' = r + s - cY``."""
    if s_node is not None:
        r = r + s_node
    bm, cm, rm = _interp_mid(b), _interp_mid(c), _interp_mid(r)
    if s_mid is not None:
        rm = rm + s_mid - _interp_mid(s_node)
    n = b.shape[0]
    Y = np.empty_like(b)
    Y[0] = y0
    y, z = np.asarray(y0, dtype=float), np.asarray(z0, dtype=float)
    for i in range(n - 1):
        k1y = z + b[i] * y
        k1z = r[i] - c[i] * y
        y2, z2 = y + 0.5 * h * k1y, z + 0.5 * h * k1z
        k2y = z2 + bm[i] * y2
        k2z = rm[i] - cm[i] * y2
        y3, z3 = y + 0.5 * h * k2y, z + 0.5 * h * k2z
        k3y = z3 + bm[i] * y3
        k3z = rm[i] - cm[i] * y3
        y4, z4 = y + h * k3y, z + h * k3z
        k4y = z4 + b[i + 1] * y4
        k4z = r[i + 1] - c[i + 1] * y4
        y = y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        z = z + h * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
        Y[i + 1] = y
    return Y


def _y_source_arrays(grid, src, v_values):
    """Source for the ``Y`` equation at theta nodes and midpoints."""
    if src is None:
        return None, None
    th_mid = grid.theta[:-1] + 0.5 * grid.d_theta
    tn, en, vn = np.meshgrid(grid.theta, grid.eta, v_values, indexing="ij")
    tm, em, vmm = np.meshgrid(th_mid, grid.eta, v_values, indexing="ij")
    sn = np.broadcast_to(src(tn, en, vn), tn.shape)
    sm = np.broadcast_to(src(tm, em, vmm), tm.shape)
    if np.ndim(v_values) == 0:
        sn, sm = sn[..., 0], sm[..., 0]
    return np.asarray(sn, dtype=float), np.asarray(sm, dtype=float)


def _solve_y_arrays(lev: _Level, y0, y1, grid, src_n, src_m):
    b, c, r = lev.y_coefficients()
    z0 = y1 - b[0] * y0
    Y = _integrate_y(b, c, r, y0, z0, grid.d_theta, src_n, src_m)
    if not np.all(np.isfinite(Y)):
        raise ValueError("non-finite coefficients in the Y equation")
    return Y


def solve_y(U: GridFunction, V: GridFunction, M: GridFunction, Y0, Y1, *,
            source=None, eta_periodic: bool = False) -> GridFunction:
    """Integrate the linear ``Y`` equation in theta on every ``(eta, v)`` column.

    Parameters
    ----------
    U, V, M : GridFunction
        Leading-order fields on a common grid.
    Y0, Y1 : callable or array
        ``Y`` and ``Y_theta`` on ``theta = theta0`` as functions of ``(eta, v)``.
    source : callable, optional
        Extra forcing ``s(theta, eta, v)`` on the right-hand side.

    Notes
    -----
    The equation is ``Y'' - ((V+M)_theta Y)' + cY = r`` with
    ``c = U_t V_t + V_t^2/2 - U_t^2/2 - F`` and
    ``r = (U+V+M)_{theta eta} + M_eta U_theta - (U+V)_eta V_theta``, which is
    the ``(phi + psi)_theta = psi (U+V)_theta`` equation divided by ``-e^U``.
    It is integrated in the first-order form ``Y' = Z + bY``, ``Z' = r - cY``
    with classical RK4; coefficients at half steps come from cubic
    interpolation of the nodal values.
    """
    grid = U.grid
    if V.grid != grid or M.grid != grid:
        raise ValueError("grid mismatch")
    et, v = np.meshgrid(grid.eta, grid.v, indexing="ij")
    y0, y1 = _fn2(Y0, et, v), _fn2(Y1, et, v)
    if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(y1))):
        raise ValueError("non-finite Y boundary values")
    lev = _Level(U.values, V.values, M.values, grid, eta_periodic)
    sn, sm = _y_source_arrays(grid, source, grid.v)
    return GridFunction(grid, _solve_y_arrays(lev, y0, y1, grid, sn, sm), "Y")


# -- evolution ------------------------------------------------------------------------


def _corner_check(data_initial, data_edge, tol):
    U0, V0, M0 = data_initial
    U1, V1, M1 = data_edge[:3]
    for name, a, b in (("U", U0[0], U1[:, 0]), ("V", V0[0], V1[:, 0]), ("M", M0[0], M1[:, 0])):
        gap = float(np.max(np.abs(a - b)))
        if gap > tol * (1.0 + float(np.max(np.abs(a)))):
            raise ValueError(f"corner incompatibility in {name}: {gap:.3g}")


def evolve(
    data: BoundaryData,
    grid: Grid3,
    *,
    eta_bc: str = "one-sided",
    sources: Sources | None = None,
    options: MarchOptions = MarchOptions(),
    blowup_cap: float = 30.0,
    require_constraint: bool = True,
    constraint_tol: float = 5e-2,
    constraint_drift: float | None = None,
    corner_tol: float = 1e-8,
) -> FieldSet:
    """March the diffractive system from characteristic data.

    Parameters
    ----------
    data : BoundaryData
    grid : Grid3
        ``n_eta == 1`` or ``2`` disables transverse terms.
    eta_bc : {'one-sided', 'periodic'}
    sources : Sources, optional
        Manufactured forcing.
    blowup_cap : float
        Any ``|U|, |V|, |M|, |Y|`` above this halts with :class:`BlowupError`.
    require_constraint : bool
        Reject initial data whose discrete theta-constraint residual, relative
        to the size of its terms, exceeds ``constraint_tol``.
    constraint_drift : float, optional
        Emit a warning when the constraint residual exceeds this on any level.

    Returns
    -------
    FieldSet
        ``report`` holds ``constraint_max_by_v``, ``iterations`` and
        ``blowup`` (always None on return; blow-up raises).
    """
    if eta_bc not in ("one-sided", "periodic"):
        raise ValueError("eta_bc must be 'one-sided' or 'periodic'")
    ep = eta_bc == "periodic"
    src = sources or Sources()
    h, k = grid.d_theta, grid.d_v
    use_eta = grid.n_eta >= 3
    init = data.initial(grid)
    edge = data.edge(grid)
    _corner_check(init, edge, corner_tol)
    U0, V0, M0 = init
    U1, V1, M1, Y0b, Y1b = edge
    if require_constraint:
        rel = _relative_constraint(U0, V0, M0, h)
        if rel > constraint_tol:
            raise ValueError(
                f"initial data violates the theta-constraint (relative residual {rel:.3g})"
            )

    th_mid = grid.theta[:-1] + 0.5 * h
    tm, em = np.meshgrid(th_mid, grid.eta, indexing="ij")

    def mid_source(fn, vm):
        if fn is None:
            return 0.0
        return np.broadcast_to(fn(tm, em, vm + 0.0 * tm), tm.shape)

    def level_state(n, w):
        Q, P, U = w
        lev = _Level(U, P - U, Q - P, grid, ep)
        sn, sm = _y_source_arrays(grid, src.Y, grid.v[n])
        Y = _solve_y_arrays(lev, Y0b[:, n], Y1b[:, n], grid, sn, sm)
        G1, G2, G3, _, _ = lev.transverse(Y, Y1b[:, n], sn)
        return Y, np.stack([G1, G2, G3])

    cache = {}

    def rhs(n, old, new):
        if n not in cache:
            cache.clear()
            cache[n] = level_state(n, old)[1]
        G_old = cache[n]
        G_new = level_state(n + 1, new)[1]
        G = avg4(G_old, G_new)
        dt = mid_dtheta(old, new, h)
        dv = mid_dv(old, new, k)
        vm = grid.v0 + (n + 0.5) * k
        rq = 0.5 * dt[1] * dv[1] + G[0] + mid_source(src.Q, vm)
        rp = 0.5 * (dt[2] * dv[1] + dv[2] * dt[1]) + G[1] + mid_source(src.P, vm)
        ru = dt[2] * dv[2] + G[2] + mid_source(src.U, vm)
        return np.stack([rq, rp, ru])

    def check(n, w):
        Q, P, U = w
        V, M = P - U, Q - P
        stack = np.stack([U, V, M])
        bad = ~np.isfinite(stack) | (np.abs(stack) > blowup_cap)
        if np.any(bad):
            _, i, j = np.unravel_index(int(np.argmax(bad)), stack.shape)
            th, et, v = grid.coordinate(int(i), int(j), n)
            raise BlowupError(
                f"field blow-up at (theta={th:.6g}, eta={et:.6g}, v={v:.6g})",
                {"cell": {"theta": th, "eta": et, "v": v, "i_theta": int(i), "i_eta": int(j),
                          "level": n}, "cap": blowup_cap},
            )
        if use_eta:
            ratio = k * float(np.max(np.exp(U - V - M))) / grid.d_eta**2
            if ratio > 0.5:
                raise StabilityError(
                    f"diffraction step ratio {ratio:.4g} exceeds 1/2 at level {n}",
                    {"ratio": ratio, "level": n, "d_v": k, "d_eta": grid.d_eta},
                )

    def coords(idx):
        th, et, v = grid.coordinate(*idx)
        return {"theta": th, "eta": et, "v": v}

    Q1, P1 = U1 + V1 + M1, U1 + V1
    w0 = np.stack([U0 + V0 + M0, U0 + V0, U0])
    res = march(
        w0, h, k, grid.n_v, rhs, edge=lambda n: np.stack([Q1[:, n], P1[:, n], U1[:, n]]),
        options=options, check=check, coords=coords,
    )
    Q, P, U = res.values
    V, M = P - U, Q - P
    lev = _Level(U, V, M, grid, ep)
    sn, sm = _y_source_arrays(grid, src.Y, grid.v)
    Y = _solve_y_arrays(lev, Y0b, Y1b, grid, sn, sm)
    if np.any(np.abs(Y) > blowup_cap):
        i, j, n = np.unravel_index(int(np.argmax(np.abs(Y))), Y.shape)
        th, et, v = grid.coordinate(int(i), int(j), int(n))
        raise BlowupError(f"field blow-up in Y at (theta={th:.6g}, eta={et:.6g}, v={v:.6g})",
                          {"cell": {"theta": th, "eta": et, "v": v}, "cap": blowup_cap})
    fs = FieldSet(GridFunction(grid, U, "U"), GridFunction(grid, V, "V"),
                  GridFunction(grid, M, "M"), GridFunction(grid, Y, "Y"))
    cmax = np.abs(_constraint_array(U, V, M, h)).max(axis=(0, 1))
    fs.report = {
        "constraint_max_by_v": [float(x) for x in cmax],
        "iterations": list(res.iterations),
        "blowup": None,
        "warnings": [],
    }
    if constraint_drift is not None and float(cmax.max()) > constraint_drift:
        msg = f"constraint residual reached {cmax.max():.3g} (threshold {constraint_drift:.3g})"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        fs.report["warnings"].append(msg)
    return fs


# -- colliding plane waves -----------------------------------------------------------------


@dataclass
class CollidingData:
    """Data on ``v = v0`` (functions of theta) and ``theta = theta0`` (of v)."""

    U0: Callable | np.ndarray | float = 0.0
    V0: Callable | np.ndarray | float = 0.0
    M0: Callable | np.ndarray | float = 0.0
    U1: Callable | np.ndarray | float = 0.0
    V1: Callable | np.ndarray | float = 0.0
    M1: Callable | np.ndarray | float = 0.0


@dataclass
class CollidingResult:
    U: GridFunction
    V: GridFunction
    M: GridFunction
    report: dict = field(default_factory=dict)


def _fn1(spec, x):
    out = spec(x) if callable(spec) else spec
    return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).astype(float)


def solve_colliding(
    data: CollidingData,
    grid: Grid3,
    *,
    options: MarchOptions = MarchOptions(),
    blowup_cap: float = 30.0,
    constraint_tol: float = 5e-2,
) -> CollidingResult:
    """Colliding plane-wave equations on a ``(theta, v)`` grid.

    The theta-constraint is checked on the initial line (a warning is issued
    above ``constraint_tol``) and monitored on every level; the v-constraint
    ``U_vv - (U_v^2 + V_v^2)/2 + U_v M_v`` is evaluated and reported only.
    """
    th, v = grid.theta, grid.v
    h, k = grid.d_theta, grid.d_v
    w0 = np.stack([_fn1(data.U0, th), _fn1(data.V0, th), _fn1(data.M0, th)])[:, :, None]
    e = np.stack([_fn1(data.U1, v), _fn1(data.V1, v), _fn1(data.M1, v)])
    report = {"warnings": []}
    rel = _relative_constraint(w0[0], w0[1], w0[2], h) if grid.n_theta >= 3 else 0.0
    if rel > constraint_tol:
        msg = f"initial data violates the theta-constraint (relative residual {rel:.3g})"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        report["warnings"].append(msg)

    def rhs(n, old, new):
        dt = mid_dtheta(old, new, h)
        dv = mid_dv(old, new, k)
        ru = dt[0] * dv[0]
        rv = 0.5 * (dt[0] * dv[1] + dv[0] * dt[1])
        rm = -0.5 * (dt[0] * dv[0] - dt[1] * dv[1])
        return np.stack([ru, rv, rm])

    def check(n, w):
        bad = ~np.isfinite(w) | (np.abs(w) > blowup_cap)
        if np.any(bad):
            _, i, _ = np.unravel_index(int(np.argmax(bad)), w.shape)
            t, _, vv = grid.coordinate(int(i), 0, n)
            raise BlowupError(f"field blow-up at (theta={t:.6g}, v={vv:.6g})",
                              {"cell": {"theta": t, "v": vv, "i_theta": int(i), "level": n},
                               "cap": blowup_cap})

    res = march(w0, h, k, grid.n_v, rhs, edge=lambda n: e[:, n][:, None], options=options,
                check=check)
    U, V, M = (res.values[c, :, 0, :] for c in range(3))
    plane = Grid3(grid.n_theta, 1, grid.n_v, grid.theta0, grid.eta0, grid.v0,
                  grid.d_theta, grid.d_eta, grid.d_v)
    gf = lambda a, n: GridFunction(plane, a[:, None, :], n)  # noqa: E731
    F = _constraint_array(U, V, M, h)
    report["constraint_max_by_v"] = [float(x) for x in np.abs(F).max(axis=0)]
    if grid.n_v >= 3:
        Uv = diff_array(U, k, 1, 1)
        G = diff_array(U, k, 1, 2) - 0.5 * (Uv**2 + diff_array(V, k, 1, 1) ** 2) + Uv * diff_array(M, k, 1, 1)
        report["v_constraint_max"] = float(np.abs(G).max())
    report["iterations"] = list(res.iterations)
    report["blowup"] = None
    return CollidingResult(gf(U, "U"), gf(V, "V"), gf(M, "M"), report)


# -- diagnostics ---------------------------------------------------------------------------


@dataclass
class ConstraintReport:
    F: GridFunction
    max_abs_by_v: np.ndarray
    predicted_defect: float
    max_abs: float

    def as_dict(self) -> dict:
        return {
            "constraint_max_by_v": [float(x) for x in self.max_abs_by_v],
            "max_abs": self.max_abs,
            "predicted_defect": self.predicted_defect,
        }


def monitor_constraint(fields: FieldSet) -> ConstraintReport:
    """Constraint residual per v-slice and the defect against ``F(0) e^{U - U(0)}``.

    Along each ``(theta, eta)`` column the residual should obey
    ``F_v = U_v F``, so ``F(v) = F(v0) exp(U(v) - U(v0))``.
    """
    cf = constraint_residual(fields)
    F = cf.F.values
    U = fields.U.values
    pred = F[..., :1] * np.exp(U - U[..., :1])
    defect = float(np.max(np.abs(F - pred)))
    return ConstraintReport(cf.F, cf.max_abs_by_v, defect, float(np.max(np.abs(F))))


def equation_residuals(fields: FieldSet, eta_periodic: bool = False) -> dict:
    """Discrete residuals (left minus right) of the reduced equations.

    Keys ``E1`` to ``E5`` are the constraint, the ``Y`` equation in the
    ``(phi + psi)_theta = psi (U+V)_theta`` form, and the ``U``, ``V``, ``M``
    evolution equations; ``ee1`` to ``ee3`` are the marched combinations.
    All derivatives, including ``v``, use second-order stencils.
    """
    g = fields.grid
    U, V, M, Y = fields.arrays()
    aux = aux_fields(fields, eta_periodic)
    phi, psi = aux.phi, aux.psi
    Dphi = aux.D_eta(phi).values
    Dpsi = aux.D_eta(psi).values
    phi, psi = phi.values, psi.values
    t = lambda f: diff_array(f, g.d_theta, 0, 1)  # noqa: E731
    vv = lambda f: diff_array(f, g.d_v, 2, 1)  # noqa: E731
    tv = lambda f: vv(t(f))  # noqa: E731
    w = 0.5 * np.exp(-(U + V + M))
    P = U + V
    E1 = _constraint_array(U, V, M, g.d_theta)
    E2 = t(phi + psi) - psi * t(P)
    E3 = tv(U) - t(U) * vv(U) - w * (Dphi + Dpsi - 0.5 * phi**2 - phi * psi - psi**2)
    E4 = tv(V) - 0.5 * (t(U) * vv(V) + vv(U) * t(V)) - w * (-Dphi + 0.5 * phi**2)
    E5 = tv(M) + 0.5 * (t(U) * vv(U) - t(V) * vv(V)) - w * (-Dpsi - 0.5 * phi**2 + psi**2)
    lev = _Level(U, V, M, g, eta_periodic)
    G1, G2, G3, _, _ = lev.transverse(Y)
    Q = P + M
    ee1 = tv(Q) - 0.5 * t(P) * vv(P) - G1
    ee2 = tv(P) - 0.5 * (t(U) * vv(P) + vv(U) * t(P)) - G2
    ee3 = tv(U) - t(U) * vv(U) - G3
    out = dict(E1=E1, E2=E2, E3=E3, E4=E4, E5=E5, ee1=ee1, ee2=ee2, ee3=ee3)
    return {key: GridFunction(g, val, key) for key, val in out.items()}


# -- constraint-consistent data and linearization ----------------------------------------


def constraint_consistent_u0(V0, M0, theta, eta, u_edge=0.0, du_edge=0.0):
    """Solve the theta-constraint for ``U`` on ``v = v0``.

    Integrates ``U'' = (U'^2 + V'^2)/2 - U' M'`` in theta for every eta with
    ``U(theta0) = u_edge`` and ``U'(theta0) = du_edge``.  ``V0`` and ``M0``
    are callables of ``(theta, eta)`` written with numpy ufuncs; their
    theta-derivatives are taken exactly with dual numbers.

    Returns
    -------
    ndarray, shape ``(len(theta), len(eta))``
    """
    from scipy.integrate import solve_ivp

    from .dual import Dual, tangent_of

    theta = np.asarray(theta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    ne = eta.size

    def dtheta(fn, t):
        if fn is None:
            return np.zeros(ne)
        out = tangent_of(fn(Dual(t, 1.0), eta))
        return np.broadcast_to(np.asarray(out, dtype=float), (ne,))

    def rate(t, y):
        u, du = y[:ne], y[ne:]
        vt, mt = dtheta(V0, t), dtheta(M0, t)
        return np.concatenate([du, 0.5 * (du**2 + vt**2) - du * mt])

    y0 = np.concatenate([np.broadcast_to(np.asarray(u_edge, float), (ne,)),
                         np.broadcast_to(np.asarray(du_edge, float), (ne,))])
    sol = solve_ivp(rate, (theta[0], theta[-1]), y0, t_eval=theta, method="DOP853",
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise ValueError(f"constraint integration failed: {sol.message}")
    return sol.y[:ne].T.copy()


@dataclass
class LinearizationReport:
    eps: list
    defect_abs: list
    defect_rescaled: list
    u_over_eps2: list
    order_abs: float | None
    order_rescaled: float | None

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "defect_abs": self.defect_abs,
            "defect_rescaled": self.defect_rescaled,
            "max_abs_U_over_eps2": self.u_over_eps2,
            "order_abs": self.order_abs,
            "order_rescaled": self.order_rescaled,
        }


def linearization_check(
    eps_list,
    profile: Callable,
    grid: Grid3,
    *,
    eta_bc: str = "one-sided",
    options: MarchOptions = MarchOptions(),
) -> LinearizationReport:
    """Compare small-amplitude evolution with the linear parabolic equation.

    The full system is run with ``V = eps Vhat``, ``M = -eps Vhat``, ``Y = 0``
    on the initial line and ``U`` from the theta-constraint (so ``U`` is
    second order in ``eps``); the linear problem ``V_{theta v} = V_{eta eta}/2``
    is solved with the diffractive solver on the same grid.  The profile
    ``Vhat(theta, eta)`` must vanish on ``theta = theta0``.

    ``defect_abs`` is ``max |V_full - eps V_lin|`` (expected order 2 in eps);
    ``defect_rescaled`` is the same divided by eps.
    """
    lin = solve_diffractive(
        profile, RayCoefficients(D=-1.0), grid, boundary=0.0,
        eta_bc=eta_bc, options=options,
    ).a.values
    d_abs, d_res, u_ratio = [], [], []
    for eps in eps_list:
        eps = float(eps)
        if eps == 0.0:
            d_abs.append(0.0)
            d_res.append(0.0)
            u_ratio.append(0.0)
            continue
        V0 = lambda t, e, s=eps: s * profile(t, e)  # noqa: E731
        M0 = lambda t, e, s=eps: -s * profile(t, e)  # noqa: E731
        U0 = constraint_consistent_u0(V0, M0, grid.theta, grid.eta)
        data = BoundaryData(U0=U0, V0=V0, M0=M0)
        fs = evolve(data, grid, eta_bc=eta_bc, options=options, require_constraint=False)
        dv = float(np.max(np.abs(fs.V.values - eps * lin)))
        d_abs.append(dv)
        d_res.append(dv / eps)
        u_ratio.append(float(np.max(np.abs(fs.U.values))) / eps**2)
    pos = [(e, a, r) for e, a, r in zip(eps_list, d_abs, d_res) if e > 0]
    oa = orr = None
    if len(pos) >= 3:
        oa = estimate_order([p[0] for p in pos], [p[1] for p in pos]).observed_order
        orr = estimate_order([p[0] for p in pos], [p[2] for p in pos]).observed_order
    return LinearizationReport([float(e) for e in eps_list], d_abs, d_res, u_ratio, oa, orr)
