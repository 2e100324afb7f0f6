"""Manufactured solutions: symbolic forcing terms for the solvers.

Expressions are sympy objects in the symbols :data:`theta`, :data:`eta`,
:data:`v`; the returned callables are vectorized numpy functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .einstein import Sources

__all__ = ["theta", "eta", "v", "lambdify3", "ManufacturedEinstein", "einstein_manufactured",
           "wave_source", "reference_einstein_solution"]

theta, eta, v = sp.symbols("theta eta v", real=True)


def lambdify3(expr):
    """Vectorized ``f(theta, eta, v)`` that broadcasts constants."""
    f = sp.lambdify((theta, eta, v), expr, modules="numpy")

    def wrapped(t, e, vv):
        t, e, vv = np.broadcast_arrays(np.asarray(t, float), np.asarray(e, float),
                                       np.asarray(vv, float))
        return np.broadcast_to(np.asarray(f(t, e, vv), dtype=float), t.shape)

    return wrapped


@dataclass
class ManufacturedEinstein:
    exprs: dict
    fields: dict
    sources: Sources

    def boundary_data(self):
        from .einstein import BoundaryData

        f = self.fields
        z = 0.0
        return BoundaryData(
            U0=lambda t, e: f["U"](t, e, z), V0=lambda t, e: f["V"](t, e, z),
            M0=lambda t, e: f["M"](t, e, z),
            U1=lambda e, s: f["U"](z, e, s), V1=lambda e, s: f["V"](z, e, s),
            M1=lambda e, s: f["M"](z, e, s), Y0=lambda e, s: f["Y"](z, e, s),
            Y1=lambda e, s: f["Yt"](z, e, s),
        )


def einstein_manufactured(U, V, M, Y, theta0: float = 0.0, v0: float = 0.0) -> ManufacturedEinstein:
    """Forcing that makes ``(U, V, M, Y)`` an exact solution of the marched system.

    The ``Q``, ``P`` and ``U`` sources force the three characteristic wave
    equations; the ``Y`` source forces the linear ``Y`` equation.
    """
    U, V, M, Y = (sp.sympify(x) for x in (U, V, M, Y))
    t, e, s = theta, eta, v
    E = sp.exp(U)

    def D(f):
        return E * (sp.diff(f, e) + Y * sp.diff(f, t))

    P = U + V
    Q = P + M
    phi = D(M) - E * sp.diff(Y, t)
    psi = D(P)
    w = sp.Rational(1, 2) * sp.exp(-Q)
    G1 = w * (-phi**2 / 2 - phi * psi)
    G2 = w * (D(D(P)) - phi * psi - psi**2)
    G3 = w * (D(D(Q)) - D(E * sp.diff(Y, t)) - phi**2 / 2 - phi * psi - psi**2)
    d = sp.diff
    SQ = d(Q, t, s) - d(P, t) * d(P, s) / 2 - G1
    SP = d(P, t, s) - (d(U, t) * d(P, s) + d(U, s) * d(P, t)) / 2 - G2
    SU = d(U, t, s) - d(U, t) * d(U, s) - G3
    b = d(V + M, t)
    F = d(U, t, 2) - (d(U, t) ** 2 + d(V, t) ** 2) / 2 + d(U, t) * d(M, t)
    c = -(d(U, t) ** 2 / 2 - d(U, t) * d(V, t) - d(V, t) ** 2 / 2) - F
    r = d(Q, t, e) + d(M, e) * d(U, t) - d(P, e) * d(V, t)
    SY = d(Y, t, 2) - d(b * Y, t) + c * Y - r
    exprs = dict(U=U, V=V, M=M, Y=Y, SQ=SQ, SP=SP, SU=SU, SY=SY)
    fields = {k: lambdify3(x) for k, x in dict(U=U, V=V, M=M, Y=Y, Yt=d(Y, t)).items()}
    sources = Sources(Q=lambdify3(SQ), P=lambdify3(SP), U=lambdify3(SU), Y=lambdify3(SY))
    return ManufacturedEinstein(exprs, fields, sources)


def reference_einstein_solution() -> ManufacturedEinstein:
    """Smooth reference fields used for convergence studies.

    ``U`` does not depend on eta and ``V, M, Y`` are affine in eta, so every
    eta stencil is exact and errors come from theta and v alone.
    """
    t, e, s = theta, eta, v
    U = sp.Rational(1, 5) * sp.sin(t + 1) * sp.cos(s)
    V = sp.Rational(1, 10) * (1 + e / 10) * sp.sin(t + s / 2)
    M = sp.Rational(1, 10) * sp.cos(t - s) + e * t / 50
    Y = sp.Rational(1, 10) * (1 + e / 10) * sp.sin(t * (1 + s) + 1)
    return einstein_manufactured(U, V, M, Y)


def wave_source(a, Lambda=0, N=0, D=0):
    """Forcing making ``a(theta, eta, v)`` solve the diffractive HS equation.

    ``Lambda``, ``N``, ``D`` may be sympy expressions in ``v``.
    """
    a = sp.sympify(a)
    t, e, s = theta, eta, v
    d = sp.diff
    rhs = (-sp.Rational(1, 2) * Lambda * d(a, t) ** 2 - Lambda * a * d(a, t, 2)
           - N * d(a, t) - sp.Rational(1, 2) * D * d(a, e, 2))
    return lambdify3(d(a, t, s) - rhs)
