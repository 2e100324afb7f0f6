"""Uniform characteristic grids, stencils, quadrature and order estimation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "AXES",
    "Grid3",
    "GridFunction",
    "ConvergenceReport",
    "build_grid",
    "diff",
    "diff_array",
    "estimate_order",
    "trapezoid",
    "write_snapshot",
    "read_snapshot",
]

AXES = {"theta": 0, "eta": 1, "v": 2}


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis in (0, 1, 2):
        return int(axis)
    raise ValueError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class Grid3:
    """Tensor-product grid in ``(theta, eta, v)``.

    Attributes
    ----------
    n_theta, n_eta, n_v : int
        Point counts.  ``n_eta == 1`` describes a ``(theta, v)`` plane.
    theta0, eta0, v0 : float
        Origins.
    d_theta, d_eta, d_v : float
        Spacings, strictly positive.
    """

    n_theta: int
    n_eta: int
    n_v: int
    theta0: float
    eta0: float
    v0: float
    d_theta: float
    d_eta: float
    d_v: float

    def __post_init__(self):
        for name in ("d_theta", "d_eta", "d_v"):
            h = getattr(self, name)
            if not (h > 0 and math.isfinite(h)):
                raise ValueError(f"{name} must be positive, got {h}")
        for name in ("n_theta", "n_eta", "n_v"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_theta < 2 or self.n_v < 2:
            raise ValueError("theta and v axes need at least 2 points")

    @classmethod
    def plane(cls, theta, v, n_theta: int, n_v: int, eta: float = 0.0) -> "Grid3":
        """A ``(theta, v)`` grid carrying a single eta station."""
        g = build_grid([theta, (eta, eta + 1.0), v], [n_theta, 2, n_v])
        return cls(g.n_theta, 1, g.n_v, g.theta0, eta, g.v0, g.d_theta, 1.0, g.d_v)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_theta, self.n_eta, self.n_v)

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (self.d_theta, self.d_eta, self.d_v)

    @property
    def origins(self) -> tuple[float, float, float]:
        return (self.theta0, self.eta0, self.v0)

    @property
    def lengths(self) -> tuple[float, float, float]:
        """Extent of each axis, ``(n - 1) * spacing``."""
        return tuple((n - 1) * h for n, h in zip(self.shape, self.spacings))

    @property
    def theta(self) -> np.ndarray:
        return self.theta0 + np.arange(self.n_theta) * self.d_theta

    @property
    def eta(self) -> np.ndarray:
        return self.eta0 + np.arange(self.n_eta) * self.d_eta

    @property
    def v(self) -> np.ndarray:
        return self.v0 + np.arange(self.n_v) * self.d_v

    def coordinate(self, i: int, j: int, k: int) -> tuple[float, float, float]:
        return (
            self.theta0 + i * self.d_theta,
            self.eta0 + j * self.d_eta,
            self.v0 + k * self.d_v,
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate arrays of shape ``(n_theta, n_eta, n_v)``."""
        return np.meshgrid(self.theta, self.eta, self.v, indexing="ij")

    def sample(self, func, name: str = "f") -> "GridFunction":
        """Evaluate a vectorized ``func(theta, eta, v)`` on the grid."""
        th, et, v = self.mesh()
        vals = np.broadcast_to(np.asarray(func(th, et, v), dtype=float), self.shape)
        return GridFunction(self, np.array(vals), name)

    def zeros(self, name: str = "f") -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape), name)

    def as_dict(self) -> dict:
        return {
            "n_theta": self.n_theta,
            "n_eta": self.n_eta,
            "n_v": self.n_v,
            "origins": list(self.origins),
            "spacings": list(self.spacings),
        }


def build_grid(extents, counts) -> Grid3:
    """Build a uniform grid from three closed intervals and three counts.

    Parameters
    ----------
    extents : sequence of three ``(lo, hi)`` pairs
    counts : sequence of three ints, each at least 2

    Raises
    ------
    ValueError
        On a degenerate interval or a count below 2.
    """
    if len(extents) != 3 or len(counts) != 3:
        raise ValueError("need three intervals and three counts")
    origins, spacings, ns = [], [], []
    for (lo, hi), n in zip(extents, counts):
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise ValueError(f"degenerate interval [{lo}, {hi}]")
        if int(n) != n or n < 2:
            raise ValueError(f"count must be an integer >= 2, got {n}")
        ns.append(int(n))
        origins.append(lo)
        spacings.append((hi - lo) / (int(n) - 1))
    return Grid3(*ns, *origins, *spacings)


@dataclass
class GridFunction:
    """Real values on a :class:`Grid3`, indexed ``(i_theta, i_eta, i_v)``."""

    grid: Grid3
    values: np.ndarray
    name: str = "f"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"grid function {self.name!r} has non-finite entries")

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values, self.name)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            other = other.values
        return GridFunction(self.grid, op(self.values, other), self.name)

    def flat(self) -> np.ndarray:
        """Values in storage order (theta fastest, then eta, then v)."""
        return self.values.ravel(order="F")


@dataclass
class ConvergenceReport:
    """Observed order from errors on a refinement ladder."""

    resolutions: list
    errors: list
    observed_order: float
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        order = self.observed_order
        return {
            "resolutions": [float(h) for h in self.resolutions],
            "errors": [float(e) for e in self.errors],
            "observed_order": order if math.isfinite(order) else "inf",
            **self.meta,
        }


# -- stencils ----------------------------------------------------------------


def _take(a, idx, axis):
    return np.take(a, idx, axis=axis)


def diff_array(a: np.ndarray, h: float, axis: int, order: int = 1, periodic: bool = False):
    """Second-order finite difference of an array along ``axis``.

    Centered in the interior.  At the ends either one-sided second-order
    stencils are used or, when ``periodic`` is set, the last node is taken to
    duplicate the first and the stencil wraps.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    a = np.asarray(a, dtype=float)
    n = a.shape[axis]
    if n < 3:
        raise ValueError(f"too few points along axis {axis}: need 3, have {n}")
    out = np.empty_like(a)
    sl = [slice(None)] * a.ndim

    def put(s, val):
        sl[axis] = s
        out[tuple(sl)] = val

    if periodic:
        m = n - 1
        core = _take(a, range(m), axis)
        fp = np.roll(core, -1, axis=axis)
        fm = np.roll(core, 1, axis=axis)
        if order == 1:
            d = (fp - fm) / (2.0 * h)
        else:
            d = (fp - 2.0 * core + fm) / (h * h)
        put(slice(0, m), d)
        put(slice(m, n), _take(d, [0], axis))
        return out

    f = lambda i: _take(a, i, axis)  # noqa: E731
    # end stencils in difference form so that constants give exactly zero
    d = lambda i, j: f([i]) - f([j])  # noqa: E731
    if order == 1:
        put(slice(1, n - 1), (f(range(2, n)) - f(range(0, n - 2))) / (2.0 * h))
        put(slice(0, 1), (4.0 * d(1, 0) - d(2, 0)) / (2.0 * h))
        put(slice(n - 1, n), (4.0 * d(n - 1, n - 2) - d(n - 1, n - 3)) / (2.0 * h))
        return out
    h2 = h * h
    put(slice(1, n - 1), (f(range(2, n)) - 2.0 * f(range(1, n - 1)) + f(range(0, n - 2))) / h2)
    if n >= 4:
        put(slice(0, 1), (-5.0 * d(1, 0) + 4.0 * d(2, 0) - d(3, 0)) / h2)
        put(slice(n - 1, n), (-5.0 * d(n - 2, n - 1) + 4.0 * d(n - 3, n - 1) - d(n - 4, n - 1)) / h2)
    else:
        put(slice(0, 1), _take(out, [1], axis))
        put(slice(n - 1, n), _take(out, [1], axis))
    return out


def diff(f: GridFunction, axis, order: int = 1, periodic: bool = False) -> GridFunction:
    """Differentiate a grid function along ``'theta'``, ``'eta'`` or ``'v'``.

    Examples
    --------
    >>> g = build_grid([(0, 1), (0, 1), (0, 1)], [5, 3, 3])
    >>> f = g.sample(lambda t, e, v: t**2)
    >>> float(diff(f, "theta", 2).values[2, 1, 1])
    2.0
    """
    ax = _axis_index(axis)
    h = f.grid.spacings[ax]
    return GridFunction(f.grid, diff_array(f.values, h, ax, order, periodic), f.name)


def estimate_order(spacings, errors=None, **meta) -> ConvergenceReport:
    """Least-squares slope of ``log(error)`` against ``log(spacing)``.

    Accepts either two sequences or a single sequence of ``(h, err)`` pairs.
    An exactly zero error means the sequence is resolved exactly; the
    observed order is then ``inf``.
    """
    if errors is None:
        pairs = list(spacings)
        spacings = [p[0] for p in pairs]
        errors = [p[1] for p in pairs]
    h = np.asarray(spacings, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape:
        raise ValueError("spacings and errors differ in length")
    if h.size < 3:
        raise ValueError("need at least 3 (spacing, error) pairs")
    if np.any(h <= 0) or len(np.unique(h)) != h.size:
        raise ValueError("spacings must be positive and distinct")
    if np.any(e < 0) or not np.all(np.isfinite(e)):
        raise ValueError("errors must be finite and non-negative")
    if np.any(e == 0):
        return ConvergenceReport(list(h), list(e), math.inf, dict(meta))
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return ConvergenceReport(list(h), list(e), float(slope), dict(meta))


def trapezoid(f: GridFunction) -> float:
    """Trapezoidal integral over all axes with more than one point."""
    out = f.values
    for ax in (2, 1, 0):
        n = out.shape[ax]
        if n == 1:
            out = np.take(out, 0, axis=ax)
            continue
        out = np.trapezoid(out, dx=f.grid.spacings[ax], axis=ax)
    return float(out)


# -- snapshot IO ---------------------------------------------------------------


def write_snapshot(f: GridFunction, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV) and ``path`` with ``.json`` suffix (sidecar)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    th, et, v = f.grid.mesh()
    rows = np.column_stack(
        [th.ravel(order="F"), et.ravel(order="F"), v.ravel(order="F"), f.flat()]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "eta", "v", "value"])
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
    side = path.with_suffix(".json")
    meta = f.grid.as_dict()
    meta["field_name"] = f.name
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_snapshot(path) -> GridFunction:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    g = Grid3(
        meta["n_theta"], meta["n_eta"], meta["n_v"], *meta["origins"], *meta["spacings"]
    )
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vals = data[:, 3].reshape(g.shape, order="F")
    return GridFunction(g, vals, meta["field_name"])
