"""Leading-order action of the plane-polarized system and its first variations.

The density is

    L = e^{-U} { 2 M_tv + 4 U_tv - V_t V_v - 3 U_t U_v
                 - T_tt + T_t (M_t + 2 U_t) + T (M_tt + 2 U_tt - 3/2 U_t^2 - 1/2 V_t^2)
                 + e^{-(U+V+M)} [ -2 D phi - D psi + 3/2 phi^2 + 2 phi psi + psi^2 ] }

with ``t = theta`` and ``D = e^U (d_eta + Y d_theta)``.  Variations are taken
numerically as centered Gateaux differences of the trapezoidal action, so the
module checks the solver without sharing its discretization of the equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .einstein import FieldSet, _deta, _dth
from .grid import Grid3, GridFunction, diff_array, trapezoid

__all__ = [
    "ActionEvaluation",
    "DIRECTIONS",
    "lagrangian_density",
    "action",
    "variational_residual",
    "with_gauge_T",
    "bump_probe",
    "random_probes",
    "probe_margin",
    "t_variation_oracle",
    "ActionReport",
    "action_report",
]

DIRECTIONS = ("U", "V", "M", "Y", "T")


@dataclass
class ActionEvaluation:
    density: GridFunction
    action: float


def with_gauge_T(fields: FieldSet) -> FieldSet:
    """Return ``fields`` with an explicit zero ``T`` if it has none."""
    if fields.T is not None:
        return fields
    return replace(fields, T=fields.grid.zeros("T"))


def _require_T(fields: FieldSet):
    if fields.T is None:
        raise ValueError("the action needs an explicit T field; use with_gauge_T for the T=0 gauge")


def _density_array(U, V, M, Y, T, grid: Grid3, eta_periodic: bool) -> np.ndarray:
    kv = grid.d_v

    def dt(a, order=1):
        return _dth(a, grid, order)

    def dv(a):
        return diff_array(a, kv, 2, 1)

    Ut, Vt, Mt = dt(U), dt(V), dt(M)
    E = np.exp(U)

    def D(f):
        return E * (_deta(f, grid, 1, eta_periodic) + Y * dt(f))

    P = U + V
    phi = D(M) - E * dt(Y)
    psi = D(P)
    bulk = 2.0 * dv(Mt) + 4.0 * dv(Ut) - Vt * dv(V) - 3.0 * Ut * dv(U)
    gauge = (-dt(T, 2) + dt(T) * (Mt + 2.0 * Ut)
             + T * (dt(M, 2) + 2.0 * dt(U, 2) - 1.5 * Ut**2 - 0.5 * Vt**2))
    transverse = np.exp(-(P + M)) * (-2.0 * D(phi) - D(psi) + 1.5 * phi**2
                                     + 2.0 * phi * psi + psi**2)
    return np.exp(-U) * (bulk + gauge + transverse)


def lagrangian_density(fields: FieldSet, eta_periodic: bool = False) -> GridFunction:
    """Pointwise action density with second-order stencils.

    Parameters
    ----------
    fields : FieldSet
        Must carry an explicit ``T`` (it may be zero).
    eta_periodic : bool
        Use periodic eta stencils.

    Returns
    -------
    GridFunction
        The density on the grid of ``fields``.
    """
    _require_T(fields)
    g = fields.grid
    if g.n_v < 3 or g.n_theta < 3:
        raise ValueError("the density needs at least 3 nodes in theta and v")
    vals = _density_array(fields.U.values, fields.V.values, fields.M.values,
                          fields.Y.values, fields.T.values, g, eta_periodic)
    return GridFunction(g, vals, "lagrangian density")


def action(fields: FieldSet, eta_periodic: bool = False) -> ActionEvaluation:
    """Trapezoidal integral of the density over ``theta, eta, v``."""
    dens = lagrangian_density(fields, eta_periodic)
    return ActionEvaluation(dens, trapezoid(dens))


def _touches_boundary(values: np.ndarray) -> bool:
    faces = []
    for axis in range(3):
        if values.shape[axis] == 1:
            continue
        faces.append(np.take(values, 0, axis=axis))
        faces.append(np.take(values, -1, axis=axis))
    return any(np.any(f != 0.0) for f in faces)


def variational_residual(
    fields: FieldSet,
    direction: str,
    probe: GridFunction,
    step: float = 1e-5,
    eta_periodic: bool = False,
) -> float:
    """Centered Gateaux derivative of the action along ``probe`` in one field.

    Parameters
    ----------
    fields : FieldSet
        Must carry an explicit ``T``.
    direction : {"U", "V", "M", "Y", "T"}
        The field that is perturbed.
    probe : GridFunction
        Perturbation shape; must vanish on every boundary face.
    step : float
        Perturbation size, positive.

    Returns
    -------
    float
        ``(S(f + step probe) - S(f - step probe)) / (2 step)``.
    """
    _require_T(fields)
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    if not step > 0.0:
        raise ValueError("step must be positive")
    if probe.grid != fields.grid:
        raise ValueError("probe is on a different grid")
    if _touches_boundary(probe.values):
        raise ValueError("probe must vanish on the boundary faces")
    base = getattr(fields, direction)
    plus = replace(fields, **{direction: base + probe * step})
    minus = replace(fields, **{direction: base - probe * step})
    return (action(plus, eta_periodic).action - action(minus, eta_periodic).action) / (2.0 * step)


# -- probes -------------------------------------------------------------------


def _bump1(x, centre, half_width):
    r = (np.asarray(x, float) - centre) / half_width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def bump_probe(grid: Grid3, centre, half_width) -> GridFunction:
    """Smooth compactly supported product bump ``b(theta) b(eta) b(v)``.

    Singleton axes get a constant factor of one.
    """
    th, et, vv = grid.mesh()
    out = np.ones(grid.shape)
    for axis, x in enumerate((th, et, vv)):
        if grid.shape[axis] > 1:
            out = out * _bump1(x, centre[axis], half_width[axis])
    return GridFunction(grid, out, "probe")


def _probe_boxes(grid: Grid3, n: int, seed: int, margin):
    rng = np.random.default_rng(seed)
    margins = np.broadcast_to(np.asarray(margin, dtype=float), (3,))
    boxes = []
    for _ in range(n):
        centre, half = [], []
        for lo, length, count, frac in zip(grid.origins, grid.lengths, grid.shape, margins):
            if count == 1:
                centre.append(lo)
                half.append(1.0)
                continue
            w_max = min(0.3, 0.45 - frac)
            if w_max <= 0.0:
                raise ValueError("grid too coarse for interior probes")
            w = rng.uniform(0.5 * w_max, w_max) * length
            c = rng.uniform(lo + frac * length + w, lo + (1 - frac) * length - w)
            centre.append(c)
            half.append(w)
        boxes.append((tuple(centre), tuple(half)))
    return boxes


def probe_margin(grid: Grid3, fraction: float = 0.05, nodes: float = 3.5) -> tuple:
    """Per-axis margin keeping probe supports ``nodes`` spacings off every face.

    The density nests two first differences and the one-sided end stencils
    reach two nodes inward, so a probe within three nodes of a face breaks the
    discrete integration by parts.
    """
    return tuple(max(fraction, nodes * h / length) if length > 0 else fraction
                 for h, length in zip(grid.spacings, grid.lengths))


def random_probes(grid: Grid3, n: int = 10, seed: int = 0, margin=None) -> list:
    """``n`` random bumps whose supports stay a fraction ``margin`` inside the grid.

    ``margin`` is a fraction of each axis length, a scalar or one per axis;
    it defaults to :func:`probe_margin` of ``grid``.  The supports are drawn
    in physical coordinates, so the same seed and margin give the same
    continuum probes on every refinement of a domain.
    """
    if margin is None:
        margin = probe_margin(grid)
    return [bump_probe(grid, c, w) for c, w in _probe_boxes(grid, n, seed, margin)]


# -- oracle -------------------------------------------------------------------


def t_variation_oracle(U, V, M, centre, half_width, n_nodes: int = 64) -> float:
    """Gauss-Legendre quadrature of ``probe e^{-U} F`` over the probe support.

    Parameters
    ----------
    U, V, M : callable
        ``f(theta, eta, v)`` returning ``(value, f_theta, f_theta_theta)``.
    centre, half_width : sequence of 3 floats
        The product bump, as given to :func:`bump_probe`.  A half width of
        ``None`` marks a singleton axis.

    Returns
    -------
    float
        The exact first variation of the action in the ``T`` direction.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    axes, weights = [], []
    for c, hw in zip(centre, half_width):
        if hw is None:
            axes.append(np.array([c]))
            weights.append(np.array([1.0]))
        else:
            axes.append(c + hw * x)
            weights.append(hw * w)
    th, et, vv = np.meshgrid(*axes, indexing="ij")
    u, ut, utt = U(th, et, vv)
    _, vt, _ = V(th, et, vv)
    _, mt, _ = M(th, et, vv)
    F = utt - 0.5 * (ut**2 + vt**2) + ut * mt
    probe = np.ones_like(th)
    for coord, c, hw in zip((th, et, vv), centre, half_width):
        if hw is not None:
            probe = probe * _bump1(coord, c, hw)
    integrand = probe * np.exp(-u) * F
    wt = weights[0][:, None, None] * weights[1][None, :, None] * weights[2][None, None, :]
    return float(np.sum(wt * integrand))


# -- report -------------------------------------------------------------------


@dataclass
class ActionReport:
    action: float
    residuals_by_direction: dict
    probe_seed: int
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "action": self.action,
            "residuals_by_direction": self.residuals_by_direction,
            "probe_seed": self.probe_seed,
            **self.meta,
        }


def action_report(fields: FieldSet, n_probes: int = 10, seed: int = 0, step: float = 1e-5,
                  eta_periodic: bool = False) -> ActionReport:
    """Action and the residuals of ``n_probes`` random probes in every direction."""
    fields = with_gauge_T(fields)
    probes = random_probes(fields.grid, n_probes, seed)
    res = {d: [variational_residual(fields, d, p, step, eta_periodic) for p in probes]
           for d in DIRECTIONS}
    return ActionReport(action(fields, eta_periodic).action, res, seed,
                        {"max_abs_residual": max(abs(r) for rs in res.values() for r in rs)})
