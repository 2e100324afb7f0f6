"""Forward-mode dual numbers that compose with numpy ufuncs.

A :class:`Dual` carries a value and a tangent.  Both slots may hold floats,
numpy arrays, or further :class:`Dual` objects, so nesting two levels gives
exact second derivatives.  Functions written with ``np.exp``, ``np.sin`` and
friends accept duals unchanged through ``__array_ufunc__``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Dual", "derivative", "gradient", "hessian", "value_of", "tangent_of"]


def value_of(x):
    return x.re if isinstance(x, Dual) else x


def tangent_of(x):
    return x.du if isinstance(x, Dual) else 0.0


def _unary(name, x):
    f = getattr(np, name)
    re, du = x.re, x.du
    if name == "exp":
        e = f(re)
        return Dual(e, e * du)
    if name == "log":
        return Dual(f(re), du / re)
    if name == "sin":
        return Dual(f(re), np.cos(re) * du)
    if name == "cos":
        return Dual(f(re), -np.sin(re) * du)
    if name == "tan":
        t = f(re)
        return Dual(t, (1.0 + t * t) * du)
    if name == "sinh":
        return Dual(f(re), np.cosh(re) * du)
    if name == "cosh":
        return Dual(f(re), np.sinh(re) * du)
    if name == "tanh":
        t = f(re)
        return Dual(t, (1.0 - t * t) * du)
    if name == "sqrt":
        s = f(re)
        return Dual(s, du / (2.0 * s))
    if name == "arctan":
        return Dual(f(re), du / (1.0 + re * re))
    if name == "negative":
        return Dual(-re, -du)
    if name == "positive":
        return x
    if name == "square":
        return Dual(re * re, 2.0 * re * du)
    if name == "reciprocal":
        return Dual(1.0 / re, -du / (re * re))
    if name == "expm1":
        return Dual(f(re), np.exp(re) * du)
    if name == "log1p":
        return Dual(f(re), du / (1.0 + re))
    raise TypeError(f"ufunc {name} is not supported for Dual")


_UNARY = {
    "exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt",
    "arctan", "negative", "positive", "square", "reciprocal", "expm1", "log1p",
}
_BINARY = {"add", "subtract", "multiply", "true_divide", "divide", "power"}


class Dual:
    """Number ``re + du·ε`` with ``ε² = 0``.

    Parameters
    ----------
    re : float, ndarray or Dual
        Value part.
    du : float, ndarray or Dual, optional
        Tangent part (default 0).
    """

    __slots__ = ("re", "du")
    __array_priority__ = 1000

    def __init__(self, re, du=0.0):
        self.re = re
        self.du = du

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.du + other.du)
        return Dual(self.re + other, self.du)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.du - other.du)
        return Dual(self.re - other, self.du)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.du)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re, self.re * other.du + self.du * other.re)
        return Dual(self.re * other, self.du * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.re / other.re
            return Dual(q, (self.du - q * other.du) / other.re)
        return Dual(self.re / other, self.du / other)

    def __rtruediv__(self, other):
        q = other / self.re
        return Dual(q, -q * self.du / self.re)

    def __neg__(self):
        return Dual(-self.re, -self.du)

    def __pos__(self):
        return self

    def __pow__(self, p):
        if isinstance(p, Dual):
            return np.exp(p * np.log(self))
        if p == 0:
            return Dual(self.re ** 0, self.du * 0.0)
        return Dual(self.re ** p, p * self.re ** (p - 1) * self.du)

    def __rpow__(self, base):
        return np.exp(self * np.log(base))

    # numpy interop --------------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        name = ufunc.__name__
        if name in _UNARY and len(inputs) == 1:
            return _unary(name, inputs[0])
        if name in _BINARY and len(inputs) == 2:
            a, b = inputs
            if name == "add":
                return a + b if isinstance(a, Dual) else b.__radd__(a)
            if name == "subtract":
                return a - b if isinstance(a, Dual) else b.__rsub__(a)
            if name == "multiply":
                return a * b if isinstance(a, Dual) else b.__rmul__(a)
            if name in ("true_divide", "divide"):
                return a / b if isinstance(a, Dual) else b.__rtruediv__(a)
            if name == "power":
                return a ** b if isinstance(a, Dual) else b.__rpow__(a)
        return NotImplemented


def derivative(f, x):
    """Exact first derivative of a scalar function ``f`` at ``x``."""
    return tangent_of(f(Dual(x, 1.0)))


def gradient(f, point):
    """Value and gradient of ``f`` at ``point`` using a vector tangent.

    Returns
    -------
    value : object
        ``f(point)`` with dual parts stripped.
    grad : ndarray
        Shape ``(n,) + shape(value)``.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    eye = np.eye(n)
    args = [Dual(point[i], eye[i]) for i in range(n)]
    out = f(*args)
    return _split_first(out, n)


def _split_first(out, n):
    if isinstance(out, Dual):
        du = np.asarray(out.du, dtype=float)
        if du.ndim == 0:
            du = np.zeros(n)
        return float(out.re), du
    return float(out), np.zeros(n)


def hessian(f, point):
    """Value, gradient and Hessian of a scalar function of ``n`` variables.

    Uses one evaluation per variable with nested duals: the inner level
    carries a vector tangent, the outer level a scalar tangent.
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    eye = np.eye(n)
    zero = np.zeros(n)
    val = 0.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for a in range(n):
        args = [
            Dual(Dual(point[c], eye[c]), Dual(float(c == a), zero)) for c in range(n)
        ]
        out = f(*args)
        if not isinstance(out, Dual):
            return float(out), grad, hess
        inner, outer = out.re, out.du
        if a == 0:
            val, g = _split_first(inner, n)
            grad[:] = g
        if isinstance(outer, Dual):
            hess[a] = np.asarray(outer.du, dtype=float) if np.ndim(outer.du) else 0.0
        else:
            hess[a] = 0.0
    return val, grad, hess
