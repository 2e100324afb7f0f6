"""Shared marching engine for systems of the form ``w_{theta v} = Q``.

Each v-level is produced from the previous one by the cell-corner update

    w(i+1, n+1) = w(i+1, n) + w(i, n+1) - w(i, n) + h k Q(i+1/2, n+1/2),

which, summed along theta, reads ``w_new = w_old + (b_new - b_old) + hk cumsum(Q)``.
The midpoint right-hand side depends on the unknown level, so the whole
level is relaxed by a damped fixed-point iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonConvergenceError

__all__ = ["MarchOptions", "MarchResult", "march", "avg4", "mid_dtheta", "mid_dv"]


@dataclass(frozen=True)
class MarchOptions:
    """Fixed-point controls for the corner iteration."""

    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 1.0
    fallback_damping: float = 0.5


@dataclass
class MarchResult:
    values: np.ndarray
    iterations: list = field(default_factory=list)


def avg4(old: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Average of nodal values over the four corners of each theta-v cell."""
    return 0.25 * (old[:, :-1] + old[:, 1:] + new[:, :-1] + new[:, 1:])


def mid_dtheta(old, new, h):
    return 0.5 * ((old[:, 1:] - old[:, :-1]) + (new[:, 1:] - new[:, :-1])) / h


def mid_dv(old, new, k):
    return 0.5 * ((new[:, :-1] + new[:, 1:]) - (old[:, :-1] + old[:, 1:])) / k


def _sweep(w_old, q, hk, edge_new, periodic):
    incr = hk * q
    if periodic:
        incr = incr - incr.mean(axis=1, keepdims=True)
    s = np.zeros_like(w_old)
    np.cumsum(incr, axis=1, out=s[:, 1:])
    if periodic:
        shift = -s[:, :-1].mean(axis=1, keepdims=True)
        out = w_old + shift + s
        out[:, -1] = out[:, 0]
        return out
    return w_old + (edge_new - w_old[:, :1]) + s


def march(
    w0: np.ndarray,
    h: float,
    k: float,
    n_v: int,
    rhs: Callable[[int, np.ndarray, np.ndarray], np.ndarray],
    edge: Callable[[int], np.ndarray] | None = None,
    *,
    periodic: bool = False,
    options: MarchOptions = MarchOptions(),
    check: Callable[[int, np.ndarray], None] | None = None,
    coords: Callable[[tuple], dict] | None = None,
) -> MarchResult:
    """March ``w_{theta v} = Q`` from the level ``v = v0`` to ``n_v`` levels.

    Parameters
    ----------
    w0 : ndarray, shape ``(ncomp, n_theta, n_eta)``
        Values on the first v-level.
    h, k : float
        Theta and v spacings.
    n_v : int
        Number of v-levels to produce, including the first.
    rhs : callable
        ``rhs(n, w_old, w_new)`` returns the cell-midpoint right-hand side,
        shape ``(ncomp, n_theta - 1, n_eta)``, for the cells between levels
        ``n`` and ``n + 1``.
    edge : callable, optional
        ``edge(n)`` gives the ``theta = theta0`` values on level ``n``, shape
        ``(ncomp, n_eta)``.  Not used in periodic mode.
    periodic : bool
        Theta is periodic with the last node duplicating the first; the
        mean over one period is carried unchanged by the update.
    check : callable, optional
        Called as ``check(n, w)`` on every accepted level; may raise.
    coords : callable, optional
        Maps an index tuple ``(i_theta, i_eta, n)`` to a coordinate dict for
        error reports.
    """
    w0 = np.asarray(w0, dtype=float)
    out = np.empty(w0.shape + (n_v,))
    out[..., 0] = w0
    iterations = []
    hk = h * k
    if check is not None:
        check(0, w0)
    for n in range(n_v - 1):
        w_old = out[..., n]
        guess = 2.0 * w_old - out[..., n - 1] if n >= 1 else w_old.copy()
        edge_new = None
        if not periodic:
            edge_new = np.asarray(edge(n + 1), dtype=float)[:, None, :]
            guess[:, :1] = edge_new
        w_new, its = None, 0
        for damping in (options.damping, options.fallback_damping):
            w_new, its, ok, loc = _relax(
                n, w_old, guess.copy(), rhs, hk, edge_new, periodic, options, damping
            )
            if ok:
                break
        else:
            where = {"i_theta": int(loc[1]), "i_eta": int(loc[2]), "level": n + 1}
            if coords is not None:
                where.update(coords((int(loc[1]), int(loc[2]), n + 1)))
            raise NonConvergenceError(
                f"corner iteration did not converge at level {n + 1}",
                {"cell": where, "iterations": its},
            )
        out[..., n + 1] = w_new
        iterations.append(its)
        if check is not None:
            check(n + 1, w_new)
    return MarchResult(out, iterations)


def _relax(n, w_old, w, rhs, hk, edge_new, periodic, options, damping):
    loc = (0, 0, 0)
    for it in range(1, options.max_iter + 1):
        q = rhs(n, w_old, w)
        target = _sweep(w_old, q, hk, edge_new, periodic)
        delta = target - w
        if not np.all(np.isfinite(target)):
            return w, it, False, np.unravel_index(0, w.shape)
        err = np.abs(delta)
        emax = float(err.max())
        w = w + damping * delta
        if emax <= options.tol * (1.0 + float(np.abs(target).max())):
            return w, it, True, loc
        loc = np.unravel_index(int(np.argmax(err)), w.shape)
    return w, options.max_iter, False, loc
