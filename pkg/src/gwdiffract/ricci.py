"""Multiple-scale expansion of the connection and Ricci tensor, and its checks.

A metric ``g(theta, eta^2, eta^3, x; eps) = g0 + eps g1 + eps^2 g2`` is
evaluated on fast variables ``theta = u.x / eps^2`` and ``eta^a = y^a.x / eps``.
This module evaluates

* the general order formulas for ``Gamma`` at orders ``eps^-2, eps^-1, eps^0``
  and ``Ricci`` at orders ``eps^-4, eps^-3, eps^-2``;
* the component lists for metrics in the characteristic block form
  ``2 g0_01 dx^0 dx^1 + g0_ab dx^a dx^b + eps (2 g1_1a dx^1 dx^a + g1_ab dx^a dx^b) + eps^2 g2_ij``;
* a brute-force oracle computing the exact connection and curvature of the
  assembled metric at several values of ``eps`` and extracting coefficients
  by Richardson extrapolation.

Points are 7-vectors ``z = (theta, eta^2, eta^3, x^0, x^1, x^2, x^3)``.
Exact derivatives of the metric come from nested dual numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dual import Dual

__all__ = [
    "Jet",
    "MetricExpansion",
    "MetricJets",
    "RicciOrders",
    "metric_jets",
    "christoffel_orders",
    "ricci_orders",
    "block_christoffel",
    "block_ricci",
    "assembled_curvature",
    "extract_orders",
    "bruteforce_orders",
    "verify_point",
    "zero_pattern",
    "plane_polarized_metric",
    "PlaneWaveFields",
    "random_plane_polarized_fields",
    "random_block_metric",
    "field_jets",
    "equation_residuals_at",
    "reduced_equation_match",
    "MATCHED_COMPONENTS",
]

NZ = 7
THETA = 0
ETA = (1, 2)
SLOW = (3, 4, 5, 6)


# -- first-order jets -----------------------------------------------------------------


class Jet:
    """Array value together with its gradient in the 7 point coordinates.

    ``d`` has shape ``(7,) + val.shape``.  Products follow the product rule,
    so an expression built from jets carries one exact derivative.
    """

    __slots__ = ("val", "d")

    def __init__(self, val, d=None):
        self.val = np.asarray(val, dtype=float)
        self.d = np.zeros((NZ,) + self.val.shape) if d is None else np.asarray(d, dtype=float)

    @property
    def ndim(self):
        return self.val.ndim

    def _pad(self, nd):
        return self.d.reshape((NZ,) + (1,) * (nd - self.val.ndim) + self.val.shape)

    def __getitem__(self, idx):
        idx = idx if isinstance(idx, tuple) else (idx,)
        return Jet(self.val[idx], self.d[(slice(None),) + idx])

    def __add__(self, other):
        o = as_jet(other)
        nd = max(self.ndim, o.ndim)
        return Jet(self.val + o.val, self._pad(nd) + o._pad(nd))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_jet(other)
        nd = max(self.ndim, o.ndim)
        return Jet(self.val - o.val, self._pad(nd) - o._pad(nd))

    def __rsub__(self, other):
        return as_jet(other) - self

    def __neg__(self):
        return Jet(-self.val, -self.d)

    def __mul__(self, other):
        o = as_jet(other)
        nd = max(self.ndim, o.ndim)
        return Jet(self.val * o.val, self._pad(nd) * o.val + self.val * o._pad(nd))

    __rmul__ = __mul__

    def deriv(self, k: int) -> np.ndarray:
        return self.d[k]

    @property
    def T(self):
        return Jet(self.val.T, np.swapaxes(self.d, -1, -2))


def as_jet(x) -> Jet:
    return x if isinstance(x, Jet) else Jet(x)


def jeinsum(spec: str, *ops):
    """``np.einsum`` with the product rule applied to :class:`Jet` operands."""
    if not any(isinstance(o, Jet) for o in ops):
        return np.einsum(spec, *ops)
    ins, out = spec.split("->")
    terms = ins.split(",")
    vals = [o.val if isinstance(o, Jet) else np.asarray(o, float) for o in ops]
    val = np.einsum(spec, *vals)
    d = np.zeros((NZ,) + val.shape)
    for i, o in enumerate(ops):
        if not isinstance(o, Jet):
            continue
        t = list(terms)
        t[i] = "Z" + t[i]
        args = list(vals)
        args[i] = o.d
        d = d + np.einsum(",".join(t) + "->Z" + out, *args)
    return Jet(val, d)


def jinv(a: Jet) -> Jet:
    inv = np.linalg.inv(a.val)
    return Jet(inv, -np.einsum("ij,Zjk,kl->Zil", inv, a.d, inv))


# -- metric expansion -------------------------------------------------------------------


@dataclass
class MetricExpansion:
    """Three metric orders and the phase covectors.

    Parameters
    ----------
    g0, g1, g2 : callable
        ``g(z)`` maps a sequence of 7 coordinates (floats or duals) to a 4x4
        nested sequence of covariant components.
    u : array_like, shape (4,)
        Gradient of the phase.
    y : array_like, shape (2, 4)
        Gradients of the two transverse variables.
    block_form : bool
        Require the characteristic block structure: ``g0`` has only the
        ``01`` and ``ab`` blocks, ``g1`` only ``1a`` and ``ab``, ``g2`` only
        ``ij`` with ``i, j >= 1``.
    """

    g0: Callable
    g1: Callable
    g2: Callable
    u: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    y: np.ndarray = field(default_factory=lambda: np.array([[0.0, 0.0, 1.0, 0.0],
                                                             [0.0, 0.0, 0.0, 1.0]]))
    block_form: bool = True

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float).reshape(4)
        self.y = np.asarray(self.y, dtype=float).reshape(2, 4)


_ALLOWED = {
    0: {(0, 1), (1, 0)} | {(a, b) for a in (2, 3) for b in (2, 3)},
    1: {(1, a) for a in (2, 3)} | {(a, 1) for a in (2, 3)} | {(a, b) for a in (2, 3) for b in (2, 3)},
    2: {(i, j) for i in (1, 2, 3) for j in (1, 2, 3)},
}


@dataclass
class MetricJets:
    """Values, gradients and Hessians of the three metric orders at a point."""

    z: np.ndarray
    val: tuple
    grad: tuple
    hess: tuple
    u: np.ndarray
    y: np.ndarray

    def g(self, k: int) -> Jet:
        return Jet(self.val[k], self.grad[k])

    def dg(self, k: int) -> Jet:
        """First derivatives as a jet of shape ``(7, 4, 4)``."""
        return Jet(self.grad[k], self.hess[k])


def _component_jets(f, z):
    n = NZ
    eye, zero = np.eye(n), np.zeros(n)
    val = np.zeros((4, 4))
    grad = np.zeros((n, 4, 4))
    hess = np.zeros((n, n, 4, 4))
    for a in range(n):
        args = [Dual(Dual(float(z[c]), eye[c]), Dual(float(c == a), zero)) for c in range(n)]
        out = f(args)
        for i in range(4):
            for j in range(4):
                x = out[i][j]
                if not isinstance(x, Dual):
                    val[i, j] = float(x)
                    continue
                inner, outer = x.re, x.du
                if isinstance(inner, Dual):
                    val[i, j] = float(inner.re)
                    grad[:, i, j] = inner.du
                else:
                    val[i, j] = float(inner)
                if isinstance(outer, Dual):
                    hess[a, :, i, j] = outer.du
    return val, grad, hess


def metric_jets(metric: MetricExpansion, z) -> MetricJets:
    """Exact values and first and second derivatives of ``g0, g1, g2`` at ``z``.

    Raises
    ------
    ValueError
        If ``g0`` is singular or the block structure is violated.
    """
    z = np.asarray(z, dtype=float).reshape(NZ)
    vals, grads, hesss = [], [], []
    for k, f in enumerate((metric.g0, metric.g1, metric.g2)):
        v, g, h = _component_jets(f, z)
        if not (np.allclose(v, v.T, rtol=0, atol=0) and np.all(np.isfinite(v))):
            raise ValueError(f"metric order {k} is not symmetric and finite at the point")
        if metric.block_form:
            mask = np.ones((4, 4), bool)
            for ij in _ALLOWED[k]:
                mask[ij] = False
            if np.any(v[mask] != 0) or np.any(g[:, mask] != 0) or np.any(h[:, :, mask] != 0):
                raise ValueError(f"metric order {k} violates the block structure")
        vals.append(v)
        grads.append(g)
        hesss.append(h)
    det = np.linalg.det(vals[0])
    if not np.isfinite(det) or abs(det) < 1e-14 * max(1.0, np.abs(vals[0]).max() ** 4):
        raise ValueError("leading metric order is singular at the point")
    return MetricJets(z, tuple(vals), tuple(grads), tuple(hesss), metric.u, metric.y)


# -- general order formulas -----------------------------------------------------------


def _bracket_fast(dg, w):
    """``dg_{b m} w_a + dg_{a m} w_b - dg_{a b} w_m`` for one fast direction."""
    return (jeinsum("bm,a->abm", dg, w) + jeinsum("am,b->abm", dg, w)
            - jeinsum("ab,m->abm", dg, w))


def _bracket_eta(dg_eta, y):
    """Sum over transverse directions; ``dg_eta`` has shape ``(2, 4, 4)``."""
    return (jeinsum("cbm,ca->abm", dg_eta, y) + jeinsum("cam,cb->abm", dg_eta, y)
            - jeinsum("cab,cm->abm", dg_eta, y))


def _bracket_slow(dg_x):
    """``dg_x[n, i, j] = g_{ij, n}``."""
    return (jeinsum("abm->abm", dg_x) + jeinsum("bam->abm", dg_x)
            - jeinsum("mab->abm", dg_x))


def _raise(h, bracket):
    return jeinsum("lm,abm->lab", h, bracket) * 0.5


def _orders_from(g, dg, u, y):
    """Christoffel orders from jets or arrays of the metric and its derivatives."""
    g0, g1, g2 = g
    d0, d1, d2 = dg
    gi = jinv(g0) if isinstance(g0, Jet) else np.linalg.inv(g0)
    g1u = jeinsum("am,mn,bn->ab", gi, g1, gi)
    g2u = jeinsum("am,mn,bn->ab", gi, g2, gi)
    h2 = -(g2u - jeinsum("mn,am,bn->ab", g0, g1u, g1u))
    th0, th1, th2 = d0[THETA], d1[THETA], d2[THETA]
    et0, et1 = d0[1:3], d1[1:3]
    sl0 = d0[3:7]
    gm2 = _raise(gi, _bracket_fast(th0, u))
    gm1 = (_raise(gi, _bracket_eta(et0, y)) + _raise(gi, _bracket_fast(th1, u))
           - _raise(g1u, _bracket_fast(th0, u)))
    gz = (_raise(gi, _bracket_slow(sl0)) + _raise(gi, _bracket_eta(et1, y))
          - _raise(g1u, _bracket_eta(et0, y)) + _raise(gi, _bracket_fast(th2, u))
          - _raise(g1u, _bracket_fast(th1, u)) + _raise(h2, _bracket_fast(th0, u)))
    return gm2, gm1, gz


def christoffel_orders(jets: MetricJets):
    """``Gamma^l_ab`` at orders ``eps^-2, eps^-1, eps^0``, each of shape ``(4, 4, 4)``.

    Index order is ``[lambda, alpha, beta]``.  Indices are raised with the
    inverse of ``g0`` and the second-order inverse correction
    ``h2 = -(g2^.. - g0_mn g1^.m g1^.n)`` enters the ``eps^0`` term.
    """
    g = tuple(jets.val)
    dg = tuple(jets.grad)
    return _orders_from(g, dg, jets.u, jets.y)


def _christoffel_jets(jets: MetricJets):
    g = tuple(jets.g(k) for k in range(3))
    dg = tuple(jets.dg(k) for k in range(3))
    return _orders_from(g, dg, jets.u, jets.y)


@dataclass
class RicciOrders:
    """Coefficients of ``eps^-4, eps^-3, eps^-2`` in the Ricci tensor."""

    R4: np.ndarray
    R3: np.ndarray
    R2: np.ndarray

    def as_tuple(self):
        return self.R4, self.R3, self.R2


def _quad(a, b):
    """``a^m_ab b^n_mn - a^m_an b^n_bm``."""
    return np.einsum("mab,nmn->ab", a, b) - np.einsum("man,nbm->ab", a, b)


def _div_fast(dgam, w):
    """``dgam^m_ab w_m - dgam^m_bm w_a`` for the derivative along one fast variable."""
    return np.einsum("mab,m->ab", dgam, w) - np.einsum("mbm,a->ab", dgam, w)


def ricci_orders(jets: MetricJets) -> RicciOrders:
    """Ricci coefficients from the order formulas of the connection.

    The ``eps^-2`` term includes the slow divergence of the leading
    connection, ``Gamma^m_ab,m - Gamma^m_bm,a`` with respect to ``x``.
    """
    gm2, gm1, gz = _christoffel_jets(jets)
    u, y = jets.u, jets.y
    a2, a1, a0 = gm2.val, gm1.val, gz.val

    def div_eta(j):
        return sum(_div_fast(j.d[ETA[c]], y[c]) for c in range(2))

    def div_slow(j):
        d = j.d[3:7]
        return np.einsum("mmab->ab", d) - np.einsum("ambm->ab", d)

    R4 = _div_fast(gm2.d[THETA], u) + _quad(a2, a2)
    R3 = (_div_fast(gm1.d[THETA], u) + div_eta(gm2) + _quad(a2, a1) + _quad(a1, a2))
    R2 = (_div_fast(gz.d[THETA], u) + div_eta(gm1) + div_slow(gm2)
          + _quad(a2, a0) + _quad(a0, a2) + _quad(a1, a1))
    return RicciOrders(R4, R3, R2)


# -- component lists for the block form --------------------------------------------------


class _Block:
    """Named pieces of a block-form metric used by the component lists."""

    def __init__(self, jets: MetricJets):
        g0, g1, g2 = (jets.g(k) for k in range(3))
        d0, d1, d2 = (jets.dg(k) for k in range(3))
        self.g0, self.g1, self.g2 = g0, g1, g2
        self.d0, self.d1, self.d2 = d0, d1, d2
        gi = jinv(g0)
        self.gi = gi
        self.g01 = gi[0, 1]
        self.gab = gi[2:, 2:]
        self.gT = g0[2:, 2:]
        g1u = jeinsum("am,mn,bn->ab", gi, g1, gi)
        g2u = jeinsum("am,mn,bn->ab", gi, g2, gi)
        self.g1u = g1u
        self.h2 = -(g2u - jeinsum("mn,am,bn->ab", g0, g1u, g1u))

    # derivatives of the metric, returned as jets
    def th(self, k):
        return (self.d0, self.d1, self.d2)[k][THETA]

    def bar(self, k):
        """``[c, i, j] -> g_ij,c-bar`` for the two transverse fast variables."""
        return (self.d0, self.d1, self.d2)[k][1:3]

    def slow(self, k):
        """``[n, i, j] -> g_ij,n``."""
        return (self.d0, self.d1, self.d2)[k][3:7]

    def dinv(self, d):
        """Derivative of ``g0^{-1}`` given the jet of a derivative of ``g0``."""
        return -jeinsum("ij,jk,kl->il", self.gi, d, self.gi)


def block_christoffel(jets: MetricJets):
    """Connection orders assembled from the explicit component list.

    Components that the list declares zero are left at zero, so the result
    can be compared entrywise with :func:`christoffel_orders`.
    """
    b = _Block(jets)
    g01 = b.g01.val
    gab = b.gab.val
    g1u = b.g1u.val
    h2 = b.h2.val
    th0, th1, th2 = (b.th(k).val for k in range(3))
    bar0, bar1 = b.bar(0).val, b.bar(1).val
    sl0 = b.slow(0).val
    T = slice(2, 4)
    m2 = np.zeros((4, 4, 4))
    m1 = np.zeros((4, 4, 4))
    z0 = np.zeros((4, 4, 4))

    def put(arr, lam, a, c, val):
        arr[lam, a, c] = val
        arr[lam, c, a] = val

    # order eps^-2
    m2[0, 0, 0] = g01 * th0[0, 1]
    m2[1, T, T] = -0.5 * g01 * th0[T, T]
    g_a0b = 0.5 * gab @ th0[T, T]
    for i in range(2):
        for j in range(2):
            put(m2, 2 + i, 0, 2 + j, g_a0b[i, j])

    # order eps^-1
    g01_bar = bar0[:, 0, 1]
    g1_1a_th = th1[1, T]
    g1_0a = g1u[0, T]
    v = 0.5 * g01 * (g01_bar + g1_1a_th) - 0.5 * th0[T, T] @ g1_0a
    for i in range(2):
        put(m1, 0, 0, 2 + i, v[i])
    v = 0.5 * g01 * (g01_bar - g1_1a_th)
    for i in range(2):
        put(m1, 1, 1, 2 + i, v[i])
    m1[1, T, T] = -0.5 * g01 * th1[T, T]
    v = -0.5 * gab @ (g01_bar - g1_1a_th)
    for i in range(2):
        put(m1, 2 + i, 0, 1, v[i])
    v = 0.5 * gab @ th1[T, T] - 0.5 * g1u[T, T] @ th0[T, T]
    for i in range(2):
        for j in range(2):
            put(m1, 2 + i, 0, 2 + j, v[i, j])
    cbar = bar0[:, T, T]  # [c, i, j] = g_ij,c
    low = (np.einsum("cbd->bcd", cbar) + np.einsum("bcd->bcd", cbar)
           - np.einsum("dbc->bcd", cbar))  # [b, c, d] = g_bd,c + g_cd,b - g_bc,d
    v = 0.5 * np.einsum("ad,bcd->abc", gab, low) + 0.5 * np.einsum("a,bc->abc", g1_0a, th0[T, T])
    m1[T, T, T] = v

    # order eps^0
    z0[0, 0, 0] = g01 * sl0[0, 0, 1]
    val = 0.5 * g1_0a @ (g01_bar - g1_1a_th) + 0.5 * g01 * th2[1, 1]
    put(z0, 0, 0, 1, val)
    g01_x = sl0[:, 0, 1]  # [n] = g01,n
    v = (0.5 * g01 * (th2[1, T] + g01_x[T]) - 0.5 * th1[T, T] @ g1_0a
         + 0.5 * th0[T, T] @ h2[0, T])
    for i in range(2):
        put(z0, 0, 0, 2 + i, v[i])
    g1_1_bar = bar1[:, 1, T]  # [c, b] = g1_1b,c-bar
    lowbar = (np.einsum("abc->bca", cbar) + np.einsum("bac->bca", cbar)
              - np.einsum("cab->bca", cbar))  # [b, c, a]: g_bc,a + g_ac,b - g_ab,c
    v = (0.5 * g01 * (g1_1_bar.T + g1_1_bar - sl0[1][T, T])
         - 0.5 * np.einsum("c,abc->ab", g1_0a, np.einsum("bca->abc", lowbar))
         - 0.5 * h2[0, 0] * th0[T, T])
    z0[0, T, T] = v
    z0[1, 1, 1] = 0.5 * g01 * (2.0 * sl0[1, 0, 1] - th2[1, 1])
    v = 0.5 * g01 * (g01_x[T] - th2[1, T])
    for i in range(2):
        put(z0, 1, 1, 2 + i, v[i])
    z0[1, T, T] = -0.5 * g01 * (sl0[0][T, T] + th2[T, T])
    v = 0.5 * gab @ (th2[1, T] - g01_x[T]) - 0.5 * g1u[T, T] @ (g1_1a_th - g01_bar)
    for i in range(2):
        put(z0, 2 + i, 0, 1, v[i])
    v = (0.5 * gab @ (th2[T, T] + sl0[0][T, T]) - 0.5 * g1u[T, T] @ th1[T, T]
         + 0.5 * h2[T, T] @ th0[T, T])
    for i in range(2):
        for j in range(2):
            put(z0, 2 + i, 0, 2 + j, v[i, j])
    # [c, b] entries of g1_1c,b-bar - g1_1b,c-bar
    skew = g1_1_bar.T - g1_1_bar
    v = (0.5 * gab @ (sl0[1][T, T] + skew)
         - 0.5 * np.einsum("a,b->ab", g1_0a, g01_bar - g1_1a_th))
    for i in range(2):
        for j in range(2):
            put(z0, 2 + i, 1, 2 + j, v[i, j])
    cbar1 = bar1[:, T, T]
    low1 = (np.einsum("cbd->bcd", cbar1) + np.einsum("bcd->bcd", cbar1)
            - np.einsum("dbc->bcd", cbar1))
    cx = sl0[T][:, T, T]  # [c, i, j] = g_ij,c for slow transverse coordinates
    lowx = (np.einsum("cbd->bcd", cx) + np.einsum("bcd->bcd", cx) - np.einsum("dbc->bcd", cx))
    v = (0.5 * np.einsum("a,bc->abc", g1_0a, th1[T, T])
         - 0.5 * np.einsum("a,bc->abc", h2[0, T], th0[T, T])
         + 0.5 * np.einsum("ad,bcd->abc", gab, low1)
         - 0.5 * np.einsum("ad,bcd->abc", g1u[T, T], low)
         + 0.5 * np.einsum("ad,bcd->abc", gab, lowx))
    z0[T, T, T] = v
    return m2, m1, z0


def _trace_log_block(b: _Block, d: Jet) -> Jet:
    """``g^{01} g_01,* + 1/2 g^{cd} g_cd,*`` for one derivative jet ``d``."""
    return b.g01 * d[0, 1] + jeinsum("cd,cd->", b.gab, d[2:, 2:]) * 0.5


def _raised_1(b: _Block, deriv: Jet | None = None, dgi: Jet | None = None) -> Jet:
    """``g1^c_1 = g^{cd} g1_d1`` or one of its derivatives as a jet of shape (2,)."""
    if deriv is None:
        return jeinsum("cd,d->c", b.gab, b.g1[2:, 1])
    return jeinsum("cd,d->c", dgi[2:, 2:], b.g1[2:, 1]) + jeinsum("cd,d->c", b.gab, deriv[2:, 1])


def block_ricci(jets: MetricJets) -> dict:
    """Ricci components from the explicit component lists.

    The ``eps^-2`` lists hold in the gauge ``g2_11 = 0``; they carry no
    ``g2`` terms.

    Returns
    -------
    dict
        Keys ``(order, alpha, beta)`` with order in ``{4, 3, 2}``; values are
        floats.  Only the listed components appear: ``R4_00``, ``R3_00``,
        ``R3_0a``, ``R2_01`` and ``R2_ab``.
    """
    b = _Block(jets)
    gab, gT = b.gab, b.gT
    g01 = b.g01
    th0, th1 = b.th(0), b.th(1)
    bar0 = b.bar(0)
    sl0 = b.slow(0)
    out = {}
    T = slice(2, 4)

    # eps^-4
    trth = jeinsum("ab,ab->", gab, th0[T, T])
    r = (-0.5 * trth.d[THETA] + 0.5 * g01.val * th0.val[0, 1] * trth.val
         - 0.25 * np.einsum("ac,bc,bd,ad->", gab.val, th0.val[T, T], gab.val, th0.val[T, T]))
    out[(4, 0, 0)] = float(r)

    # eps^-3, 00: trace of g1 raised, differentiated after raising
    dgi_th = b.dinv(th0)
    tr1_th = jeinsum("ab,ab->", dgi_th[T, T], b.g1[T, T]) + jeinsum("ab,ab->", gab, th1[T, T])
    mixed_th = (jeinsum("ce,ed->cd", dgi_th[T, T], b.g1[T, T])
                + jeinsum("ce,ed->cd", gab, th1[T, T]))  # (g1^c_d),theta
    r = (-0.5 * tr1_th.d[THETA] + 0.5 * g01.val * th0.val[0, 1] * tr1_th.val
         - 0.5 * np.einsum("bd,bc,cd->", gab.val, th0.val[T, T], mixed_th.val))
    out[(3, 0, 0)] = float(r)

    # eps^-3, 0a
    r1_th = _raised_1(b, th1, dgi_th)  # (g1^b_1),theta
    w = jeinsum("ab,b->a", gT, r1_th) * g01  # g_ab g^{01} g1^b_1,theta
    trab_th = jeinsum("cd,cd->", gab, th0[T, T])
    q = jeinsum("bc,ab->ac", gab, th0[T, T])  # [a, c]
    div_q = sum(q.d[ETA[c]][:, c] for c in range(2))
    s = g01 * bar0[:, 0, 1] + jeinsum("cd,ecd->e", gab, bar0[:, T, T])  # [a]
    trbar = np.einsum("de,cde->c", gab.val, bar0.val[:, T, T])  # [c]
    r = (0.5 * w.d[THETA] + 0.25 * trab_th.val * w.val + 0.5 * div_q
         - 0.5 * s.d[THETA]
         + 0.25 * np.einsum("bc,ab,c->a", gab.val, th0.val[T, T], trbar)
         + 0.25 * g01.val * bar0.val[:, 0, 1] * trab_th.val
         - 0.25 * np.einsum("bd,cd,ce,abe->a", gab.val, th0.val[T, T], gab.val, bar0.val[:, T, T]))
    for i in range(2):
        out[(3, 0, 2 + i)] = float(r[i])

    # eps^-2, 01
    sl1 = sl0[1]  # derivative in x^1
    tl = _trace_log_block(b, sl1)
    k = bar0[:, 0, 1] - th1[1, T]  # [a] = g01,a-bar - g1_1a,theta
    g1_0a = b.g1u[0, T]
    t1 = jeinsum("a,a->", k, g1_0a)
    t2 = jeinsum("a,ab->b", k, gab)  # [b]
    div_t2 = sum(t2.d[ETA[c]][c] for c in range(2))
    trth_v = np.einsum("cd,cd->", gab.val, th0.val[T, T])
    trbar_v = np.einsum("cd,bcd->b", gab.val, bar0.val[:, T, T])
    r = (-tl.d[THETA]
         - 0.25 * np.einsum("ab,bc,cd,ad->", gab.val, th0.val[T, T], gab.val, sl1.val[T, T])
         + 0.5 * t1.d[THETA] - 0.5 * div_t2
         + 0.25 * np.einsum("a,a->", k.val, g1_0a.val * trth_v - gab.val @ trbar_v))
    out[(2, 0, 1)] = float(r)

    # eps^-2, ab
    R = _ricci_star(b)
    lth = _trace_log_block(b, th0).val  # g^{01} g01,theta + 1/2 g^{de} g_de,theta
    lbar = np.array([_trace_log_block(b, bar0[c]).val for c in range(2)])
    sl1v = sl1.val[T, T]
    hab = th0[T, T]
    x1 = jeinsum("c,ab->cab", g1_0a, hab)  # g1^{0c} g_ab,theta
    div_x1 = sum(x1.d[ETA[c]][c] for c in range(2))
    x2 = jeinsum("c,cab->ab", g1_0a, bar0[:, T, T])  # g1^{0c} g_ab,c-bar
    # (g1^c_1),b-bar as jets [b][c]
    r1_bar = [_raised_1(b, b.bar(1)[c], b.dinv(bar0[c])) for c in range(2)]
    x3 = [jeinsum("ac,c->a", gT, r1_bar[c]) * g01 for c in range(2)]  # [b-index][a]
    g1_1_bar = b.bar(1).val[:, 1, T]  # [d, b] = g1_1b,d-bar
    q0 = jeinsum("c,c->", b.g1[1, T] * g01, g1_0a)  # g1^0_c g1^{0c}
    x4 = q0 * hab
    r1th_v = r1_th.val
    y1 = g01.val * (gT.val @ r1th_v)  # [a] = g^{01} g_ac g1^c_1,theta
    res = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            val = (-g01.val * sl1.d[THETA][2 + i, 2 + j]
                   + 0.5 * g01.val * np.einsum("cd,c,d->", gab.val, th0.val[2 + i, T], sl1v[j])
                   + 0.5 * g01.val * np.einsum("cd,c,d->", gab.val, sl1v[i], th0.val[2 + j, T])
                   - 0.25 * g01.val * np.einsum("cd,cd->", gab.val, sl1v) * th0.val[2 + i, 2 + j]
                   - 0.25 * g01.val * np.einsum("cd,cd->", gab.val, th0.val[T, T]) * sl1v[i, j]
                   + R[i, j]
                   + 0.5 * div_x1[i, j] + 0.5 * (g1_0a.val @ lbar) * hab.val[i, j]
                   + 0.5 * x2.d[THETA][i, j] + 0.5 * x2.val[i, j] * lth
                   + 0.5 * x3[j].d[THETA][i] + 0.5 * x3[j].val[i] * lth
                   + 0.5 * x3[i].d[THETA][j] + 0.5 * x3[i].val[j] * lth
                   - 0.5 * g01.val * np.einsum("cd,c,d->", gab.val, th0.val[2 + i, T], g1_1_bar[:, j])
                   + 0.5 * np.einsum("cd,e,c,de->", gab.val, g1_0a.val, th0.val[2 + i, T],
                                     bar0.val[:, 2 + j, T] - bar0.val[:, T, 2 + j].transpose())
                   - 0.5 * g01.val * np.einsum("cd,c,d->", gab.val, th0.val[2 + j, T], g1_1_bar[:, i])
                   + 0.5 * np.einsum("cd,e,c,de->", gab.val, g1_0a.val, th0.val[2 + j, T],
                                     bar0.val[:, 2 + i, T] - bar0.val[:, T, 2 + i].transpose())
                   - 0.5 * x4.d[THETA][i, j] - 0.5 * x4.val[i, j] * lth
                   + 0.5 * q0.val * np.einsum("cd,c,d->", gab.val, th0.val[2 + i, T], th0.val[2 + j, T])
                   - 0.5 * y1[i] * y1[j])
            res[i, j] = val
    for i in range(2):
        for j in range(2):
            out[(2, 2 + i, 2 + j)] = float(res[i, j])
    return out


def _ricci_star(b: _Block) -> np.ndarray:
    """Ricci tensor of ``g0`` regarded as a function of the transverse fast variables."""
    gab = b.gab
    bar = b.bar(0)
    T = slice(2, 4)
    cb = bar[:, T, T]  # [c, i, j] = g_ij,c-bar
    # [a, b, d] = g_bd,a + g_ad,b - g_ab,d
    low = (jeinsum("abd->abd", cb) + jeinsum("bad->abd", cb) - jeinsum("dab->abd", cb))
    s = jeinsum("cd,abd->cab", gab, low)  # [c, a, b]
    div_s = sum(s.d[ETA[c]][c] for c in range(2))
    lbar = [_trace_log_block(b, bar[c]) for c in range(2)]
    lvec = np.array([x.val for x in lbar])
    dl = np.array([[lbar[a].d[ETA[bb]] for bb in range(2)] for a in range(2)])  # [a, b]
    g01bar = b.g01.val * bar.val[:, 0, 1]
    # [c, d, a] = g_da,c... build G^c_{da} style factors
    lowv = low.val
    t5 = np.einsum("ce,ade,df,cbf->ab", gab.val, lowv, gab.val, lowv)
    return (0.5 * div_s + 0.5 * np.einsum("cab,c->ab", s.val, lvec)
            - dl - 0.5 * np.outer(g01bar, g01bar) - 0.25 * t5)


# -- brute-force oracle ---------------------------------------------------------------


def assembled_curvature(jets: MetricJets, eps: float):
    """Exact connection and Ricci tensor of ``g0 + eps g1 + eps^2 g2`` at the point.

    The fast variables are affine in ``x`` with gradients ``u/eps^2`` and
    ``y/eps``, so derivatives in ``x`` follow from the chain rule exactly.
    """
    J = np.zeros((NZ, 4))
    J[THETA] = jets.u / eps**2
    J[1:3] = jets.y / eps
    J[3:7] = np.eye(4)
    w = (1.0, eps, eps * eps)
    G = sum(w[k] * jets.val[k] for k in range(3))
    dG = sum(w[k] * np.einsum("an,aij->nij", J, jets.grad[k]) for k in range(3))
    ddG = sum(w[k] * np.einsum("an,bp,abij->npij", J, J, jets.hess[k]) for k in range(3))
    Gi = np.linalg.inv(G)
    low = 0.5 * (np.einsum("abm->mab", dG) + np.einsum("bam->mab", dG) - np.einsum("mab->mab", dG))
    gam = np.einsum("lm,mab->lab", Gi, low)
    dlow = 0.5 * (np.einsum("nabm->nmab", ddG) + np.einsum("nbam->nmab", ddG)
                  - np.einsum("nmab->nmab", ddG))
    dGi = -np.einsum("lr,nrs,sm->nlm", Gi, dG, Gi)
    dgam = np.einsum("nlm,mab->nlab", dGi, low) + np.einsum("lm,nmab->nlab", Gi, dlow)
    ric = (np.einsum("llab->ab", dgam) - np.einsum("albl->ab", dgam)
           + np.einsum("lab,mlm->ab", gam, gam) - np.einsum("mal,lbm->ab", gam, gam))
    return gam, ric


def extract_orders(f: Callable[[float], np.ndarray], step: float):
    """First three Taylor coefficients of ``f`` at ``eps = 0``.

    Uses the four samples ``+-step, +-step/2``: the even and odd parts are
    each Richardson-extrapolated once.

    Returns
    -------
    tuple of ndarray
        ``(c0, c1, c2)``.
    """
    fp, fm = f(step), f(-step)
    hp, hm = f(0.5 * step), f(-0.5 * step)
    even_full, even_half = 0.5 * (fp + fm), 0.5 * (hp + hm)
    odd_full, odd_half = 0.5 * (fp - fm) / step, (hp - hm) / step
    c0 = (4.0 * even_half - even_full) / 3.0
    c2 = (even_full - even_half) / (0.75 * step * step)
    c1 = (4.0 * odd_half - odd_full) / 3.0
    return c0, c1, c2


def bruteforce_orders(jets: MetricJets, step: float = 1e-4):
    """Connection and Ricci orders extracted from the assembled metric.

    Returns
    -------
    gammas : tuple of 3 ndarrays
        Coefficients of ``eps^-2, eps^-1, eps^0`` in the connection.
    ricci : RicciOrders
    """
    cache = {}

    def both(e):
        if e not in cache:
            cache[e] = assembled_curvature(jets, e)
        return cache[e]

    gam = extract_orders(lambda e: e * e * both(e)[0], step)
    ric = extract_orders(lambda e: e**4 * both(e)[1], step)
    return gam, RicciOrders(*ric)


# -- comparison report ------------------------------------------------------------------

_NAMES = {(4,): "R4", (3,): "R3", (2,): "R2"}


def verify_point(metric: MetricExpansion, z, step: float = 1e-4, block: bool | None = None) -> dict:
    """Compare order formulas, component lists and the brute-force oracle at ``z``.

    Returns
    -------
    dict
        ``per_component`` maps names such as ``"Gamma[-1]^0_02"``,
        ``"R2_01"`` or ``"block:R2_22"`` to ``{appendix_value, bruteforce_value,
        defect}``; ``max_defect`` is the largest defect.  The ``eps^-2``
        component lists are compared only where ``g2_11`` vanishes
        identically near the point; otherwise they are named in ``skipped``.
    """
    jets = metric_jets(metric, z)
    block = metric.block_form if block is None else block
    formula_gam = christoffel_orders(jets)
    formula_ric = ricci_orders(jets)
    bf_gam, bf_ric = bruteforce_orders(jets, step)
    per = {}
    skipped = []
    labels = ("-2", "-1", "0")
    for k in range(3):
        for idx in np.ndindex(4, 4, 4):
            l, a, c = idx
            if a > c:
                continue
            fv, bv = float(formula_gam[k][idx]), float(bf_gam[k][idx])
            per[f"Gamma[{labels[k]}]^{l}_{a}{c}"] = _entry(fv, bv)
    for name, fa, ba in zip(("R4", "R3", "R2"), formula_ric.as_tuple(), bf_ric.as_tuple()):
        for a in range(4):
            for c in range(a, 4):
                per[f"{name}_{a}{c}"] = _entry(float(fa[a, c]), float(ba[a, c]))
    if block:
        bg = block_christoffel(jets)
        for k in range(3):
            for idx in np.ndindex(4, 4, 4):
                l, a, c = idx
                if a > c:
                    continue
                per[f"block:Gamma[{labels[k]}]^{l}_{a}{c}"] = _entry(float(bg[k][idx]),
                                                                     float(bf_gam[k][idx]))
        br = block_ricci(jets)
        bfr = {4: bf_ric.R4, 3: bf_ric.R3, 2: bf_ric.R2}
        gauge = _g2_11_vanishes(jets)
        for (order, a, c), v in br.items():
            if order == 2 and not gauge:
                skipped.append(f"block:R{order}_{a}{c}")
                continue
            per[f"block:R{order}_{a}{c}"] = _entry(v, float(bfr[order][a, c]))
    return {
        "point": [float(x) for x in np.asarray(z).ravel()],
        "per_component": per,
        "max_defect": max(e["defect"] for e in per.values()),
        "skipped": skipped,
        "step": step,
    }


def _g2_11_vanishes(jets: MetricJets) -> bool:
    return (jets.val[2][1, 1] == 0.0 and not np.any(jets.grad[2][:, 1, 1])
            and not np.any(jets.hess[2][:, :, 1, 1]))


def _entry(formula, brute):
    return {"appendix_value": formula, "bruteforce_value": brute, "defect": abs(formula - brute)}


def zero_pattern(jets: MetricJets) -> dict:
    """Components that must vanish for a block-form metric and their values.

    Checked: every connection entry absent from the component lists, every
    ``R4`` entry except ``00``, every ``R3`` entry except ``00`` and ``0a``,
    and the ``R2`` entries ``11`` and ``1a``.
    """
    gam = christoffel_orders(jets)
    listed = _listed_gammas()
    ric = ricci_orders(jets)
    out = {}
    labels = ("-2", "-1", "0")
    for k in range(3):
        for l, a, c in np.ndindex(4, 4, 4):
            if a <= c and (l, a, c) not in listed[k]:
                out[f"Gamma[{labels[k]}]^{l}_{a}{c}"] = float(gam[k][l, a, c])
    allowed = {4: {(0, 0)}, 3: {(0, 0), (0, 2), (0, 3)},
               2: {(0, 0), (0, 1), (0, 2), (0, 3), (2, 2), (2, 3), (3, 3)}}
    for order, R in zip((4, 3, 2), ric.as_tuple()):
        for a in range(4):
            for c in range(a, 4):
                if (a, c) not in allowed[order]:
                    out[f"R{order}_{a}{c}"] = float(R[a, c])
    return out


def _listed_gammas():
    tr = (2, 3)
    m2 = {(0, 0, 0)} | {(1, a, b) for a in tr for b in tr} | {(a, 0, b) for a in tr for b in tr}
    m1 = ({(0, 0, a) for a in tr} | {(1, 1, a) for a in tr} | {(1, a, b) for a in tr for b in tr}
          | {(a, 0, 1) for a in tr} | {(a, 0, b) for a in tr for b in tr}
          | {(a, b, c) for a in tr for b in tr for c in tr})
    z0 = ({(0, 0, 0), (0, 0, 1), (1, 1, 1)} | {(0, 0, a) for a in tr}
          | {(0, a, b) for a in tr for b in tr} | {(1, 1, a) for a in tr}
          | {(1, a, b) for a in tr for b in tr} | {(a, 0, 1) for a in tr}
          | {(a, 0, b) for a in tr for b in tr} | {(a, 1, b) for a in tr for b in tr}
          | {(a, b, c) for a in tr for b in tr for c in tr})

    def sym(s):
        return s | {(l, c, a) for l, a, c in s}

    return sym(m2), sym(m1), sym(z0)


# -- plane-polarized metrics ------------------------------------------------------------


@dataclass
class PlaneWaveFields:
    """Scalar fields ``f(theta, eta, v)`` of a plane-polarized metric.

    Each callable must accept dual numbers.  ``T`` may be ``None`` (zero).
    """

    U: Callable
    V: Callable
    M: Callable
    Y: Callable
    T: Callable | None = None


def plane_polarized_metric(fields: PlaneWaveFields) -> MetricExpansion:
    """Metric ``-2 e^{-M}(du - eps Y dy - eps^2 T dv / 2) dv + e^{-U}(e^V dy^2 + e^{-V} dz^2)``.

    Coordinates are ``x = (u, v, y, z)``; the fields depend on ``theta``,
    the first transverse fast variable ``eta`` and the slow coordinate ``v``.
    """

    def args(z):
        return z[0], z[1], z[4]

    def g0(z):
        t, e, v = args(z)
        em = -np.exp(-fields.M(t, e, v))
        U, V = fields.U(t, e, v), fields.V(t, e, v)
        return [[0.0, em, 0.0, 0.0], [em, 0.0, 0.0, 0.0],
                [0.0, 0.0, np.exp(V - U), 0.0], [0.0, 0.0, 0.0, np.exp(-U - V)]]

    def g1(z):
        t, e, v = args(z)
        c = np.exp(-fields.M(t, e, v)) * fields.Y(t, e, v)
        return [[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, c, 0.0], [0.0, c, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]

    def g2(z):
        t, e, v = args(z)
        c = 0.0 if fields.T is None else np.exp(-fields.M(t, e, v)) * fields.T(t, e, v)
        return [[0.0, 0.0, 0.0, 0.0], [0.0, c, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]

    return MetricExpansion(g0, g1, g2)


def _random_trig(rng, amplitude, n_terms=3, n_vars=3):
    k = rng.uniform(-1.5, 1.5, (n_terms, n_vars))
    ph = rng.uniform(0, 2 * np.pi, n_terms)
    c = rng.uniform(-1, 1, n_terms) * amplitude / n_terms

    def f(*x):
        out = 0.0
        for i in range(n_terms):
            arg = ph[i]
            for j in range(n_vars):
                arg = arg + k[i, j] * x[j]
            out = out + c[i] * np.sin(arg)
        return out

    return f


def random_plane_polarized_fields(rng, amplitude: float = 0.5, with_T: bool = True) -> PlaneWaveFields:
    """Smooth random fields: short sums of sines in ``(theta, eta, v)``."""
    names = ["U", "V", "M", "Y"] + (["T"] if with_T else [])
    fs = {n: _random_trig(rng, amplitude) for n in names}
    return PlaneWaveFields(**fs)


def random_block_metric(rng, amplitude: float = 0.3, g1_transverse: bool = True,
                        g2_11: bool = True) -> MetricExpansion:
    """Random block-form metric depending on all seven point coordinates.

    ``g0_ab`` is kept positive definite by building it as ``exp`` of a
    symmetric 2x2 matrix in closed form.
    """
    f = {name: _random_trig(rng, amplitude, 3, NZ)
         for name in ("m", "p", "q", "r", "s1", "s2", "a22", "a23", "a33",
                      "b11", "b12", "b13", "b22", "b23", "b33")}

    def g0(z):
        m = f["m"](*z)
        em = -np.exp(-m)
        p, q, r = f["p"](*z), f["q"](*z), f["r"](*z)
        # transverse block e^{p} [[e^{q} cosh r, sinh r],[sinh r, e^{-q} cosh r]]
        ep = np.exp(p)
        a = ep * np.exp(q) * np.cosh(r)
        b = ep * np.sinh(r)
        c = ep * np.exp(-q) * np.cosh(r)
        return [[0.0, em, 0.0, 0.0], [em, 0.0, 0.0, 0.0], [0.0, 0.0, a, b], [0.0, 0.0, b, c]]

    def g1(z):
        s1, s2 = f["s1"](*z), f["s2"](*z)
        if g1_transverse:
            a, b, c = f["a22"](*z), f["a23"](*z), f["a33"](*z)
        else:
            a = b = c = 0.0
        return [[0.0, 0.0, 0.0, 0.0], [0.0, 0.0, s1, s2], [0.0, s1, a, b], [0.0, s2, b, c]]

    def g2(z):
        v = {k: f[k](*z) for k in ("b11", "b12", "b13", "b22", "b23", "b33")}
        if not g2_11:
            v["b11"] = 0.0
        return [[0.0, 0.0, 0.0, 0.0],
                [0.0, v["b11"], v["b12"], v["b13"]],
                [0.0, v["b12"], v["b22"], v["b23"]],
                [0.0, v["b13"], v["b23"], v["b33"]]]

    return MetricExpansion(g0, g1, g2)


# -- reduced equations ------------------------------------------------------------------

MATCHED_COMPONENTS = ("R4_00", "R3_02", "R2_01", "R2_22", "R2_33")


def field_jets(fields: PlaneWaveFields, theta: float, eta: float, v: float) -> dict:
    """Value, gradient and Hessian in ``(theta, eta, v)`` for every field."""
    from .dual import hessian

    out = {}
    for name in ("U", "V", "M", "Y"):
        f = getattr(fields, name)
        out[name] = hessian(lambda t, e, s, f=f: f(t, e, s) + 0.0 * t, [theta, eta, v])
    return out


def _fjet(j):
    """Scalar jet over ``(theta, eta, v)`` mapped into the 7-slot convention."""
    val, grad, hess = j
    d = np.zeros(NZ)
    d[[0, 1, 4]] = grad
    dd = np.zeros((NZ, NZ))
    idx = np.array([0, 1, 4])
    dd[np.ix_(idx, idx)] = hess
    return Jet(val, d), [Jet(grad[i], dd[idx[i]]) for i in range(3)]


def equation_residuals_at(fields: PlaneWaveFields, theta: float, eta: float, v: float) -> dict:
    """Residuals ``E1..E5`` (left minus right side) of the reduced system at a point.

    ``E1`` is the theta-constraint, ``E2`` the transverse equation for ``Y`` and
    ``E3..E5`` the evolution equations for ``U, V, M``.
    """
    jets = field_jets(fields, theta, eta, v)
    U, (Ut, Ue, Uv) = _fjet(jets["U"])
    V, (Vt, Ve, Vv) = _fjet(jets["V"])
    M, (Mt, Me, Mv) = _fjet(jets["M"])
    Y, (Yt, Ye, Yv) = _fjet(jets["Y"])
    E = Jet(np.exp(U.val), np.exp(U.val) * U.d)

    def D(f_eta, f_theta):
        return E * (f_eta + Y * f_theta)

    phi = D(Me, Mt) - E * Yt
    psi = D(Ue + Ve, Ut + Vt)
    e = float(E.val)
    D_phi = e * (phi.d[1] + Y.val * phi.d[0])
    D_psi = e * (psi.d[1] + Y.val * psi.d[0])
    ph, ps = float(phi.val), float(psi.val)
    w = 0.5 * np.exp(-(U.val + V.val + M.val))
    ut, vt, mt = Ut.val, Vt.val, Mt.val
    uv, vv, mv = Uv.val, Vv.val, Mv.val
    E1 = Ut.d[0] - 0.5 * (ut**2 + vt**2) + ut * mt
    E2 = phi.d[0] + psi.d[0] - ps * (ut + vt)
    E3 = Ut.d[4] - ut * uv - w * (D_phi + D_psi - 0.5 * ph**2 - ph * ps - ps**2)
    E4 = Vt.d[4] - 0.5 * (ut * vv + uv * vt) - w * (-D_phi + 0.5 * ph**2)
    E5 = Mt.d[4] + 0.5 * (ut * uv - vt * vv) - w * (-D_psi - 0.5 * ph**2 + ps**2)
    return {"E1": float(E1), "E2": float(E2), "E3": float(E3), "E4": float(E4), "E5": float(E5),
            "U": float(U.val), "V": float(V.val), "M": float(M.val), "Y": float(Y.val)}


def _matched_residuals(r: dict) -> dict:
    """Combinations of ``E1..E5`` that each targeted Ricci component is proportional to."""
    U, V, M, Y = r["U"], r["V"], r["M"], r["Y"]
    E1, E2, E3, E4, E5 = (r[f"E{i}"] for i in range(1, 6))
    eu = np.exp(-U)
    return {
        "R4_00": E1,
        "R3_02": eu * E2 - 2.0 * Y * E1,
        "R2_01": E3 + E5,
        "R2_22": np.exp(M - U + V) * (E4 - E3) - Y * eu * E2 + Y * Y * E1,
        "R2_33": np.exp(M - U - V) * (E3 + E4),
    }


def reduced_equation_match(fields: PlaneWaveFields, point, tol: float = 1e-9) -> dict:
    """Targeted Ricci components beside the reduced-equation residuals at a point.

    Parameters
    ----------
    fields : PlaneWaveFields
        ``T`` is ignored (the ``T = 0`` gauge is used).
    point : sequence
        ``(theta, eta, v)``; the remaining coordinates are irrelevant.

    Returns
    -------
    dict
        For each targeted component: its value, the matched residual
        combination, their ratio (``None`` if the residual vanishes), and
        whether both vanish together within ``tol``.
    """
    theta, eta, v = (float(x) for x in point)
    gauge = PlaneWaveFields(fields.U, fields.V, fields.M, fields.Y, None)
    jets = metric_jets(plane_polarized_metric(gauge), [theta, eta, 0.0, 0.0, v, 0.0, 0.0])
    ric = ricci_orders(jets)
    values = {"R4_00": ric.R4[0, 0], "R3_02": ric.R3[0, 2], "R2_01": ric.R2[0, 1],
              "R2_22": ric.R2[2, 2], "R2_33": ric.R2[3, 3]}
    res = equation_residuals_at(gauge, theta, eta, v)
    matched = _matched_residuals(res)
    out = {"point": [theta, eta, v], "residuals": {k: res[k] for k in ("E1", "E2", "E3", "E4", "E5")},
           "components": {}}
    for name in MATCHED_COMPONENTS:
        rv, mv = float(values[name]), float(matched[name])
        ratio = rv / mv if abs(mv) > tol else None
        out["components"][name] = {
            "ricci": rv,
            "matched_residual": mv,
            "factor": ratio,
            "vanish_together": (abs(rv) <= tol) == (abs(mv) <= tol),
        }
    return out
