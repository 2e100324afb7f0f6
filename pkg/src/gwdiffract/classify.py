"""Genuine nonlinearity of characteristics of variational wave systems.

A system is given by coefficients ``A^{ab}_{pq}(g)`` of the quadratic
Lagrangian ``A^{ab}_{pq}(g) g^p_{,a} g^q_{,b}`` in ``d + 1`` space-time
dimensions with ``m`` unknowns.  Arrays are indexed ``A[a, b, p, q]`` and
``dA[p, a, b, q, r] = dA^{ab}_{qr} / dg^p``.

The ``g``-derivatives default to forward-mode duals, so an evaluator must be
written with arithmetic and numpy ufuncs only, and build its result with
``np.zeros(shape, dtype=object)`` (see :func:`coefficient_array`) or nested
lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .dual import Dual

__all__ = [
    "VariationalSystem",
    "CharacteristicData",
    "TransportCoefficients",
    "ClassificationReport",
    "ClassificationError",
    "coefficient_array",
    "eikonal_matrix",
    "null_space",
    "characteristic_data",
    "lambda_tensor",
    "transport_coefficients",
    "characteristic_covectors",
    "characteristic_samples",
    "classify_characteristic",
    "scalar_wave_system",
    "decoupled_wave_system",
    "polynomial_system",
    "SYSTEM_REGISTRY",
    "build_system",
    "LINEARLY_DEGENERATE",
    "GENUINELY_NONLINEAR",
    "INDETERMINATE",
]

LINEARLY_DEGENERATE = "linearly degenerate"
GENUINELY_NONLINEAR = "genuinely nonlinear candidate"
INDETERMINATE = "indeterminate"


class ClassificationError(ValueError):
    """No usable characteristic sample, or an inconsistent system."""


def coefficient_array(d: int, m: int) -> np.ndarray:
    """Zero object array of shape ``(d+1, d+1, m, m)`` that can hold duals."""
    out = np.empty((d + 1, d + 1, m, m), dtype=object)
    out.fill(0.0)
    return out


def _as_float(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=object)
    flat = [x.re if isinstance(x, Dual) else x for x in arr.ravel()]
    return np.asarray(flat, dtype=float).reshape(arr.shape)


def _tangents(arr, n: int) -> np.ndarray:
    """Stack the vector tangents of an object array; last axis has length ``n``."""
    arr = np.asarray(arr, dtype=object)
    out = np.zeros(arr.shape + (n,))
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, Dual):
            out[idx] = np.broadcast_to(np.asarray(x.du, dtype=float), (n,))
    return out


def _dual_vector(point: np.ndarray) -> np.ndarray:
    n = point.size
    eye = np.eye(n)
    vec = np.empty(n, dtype=object)
    for i in range(n):
        vec[i] = Dual(float(point[i]), eye[i])
    return vec


@dataclass
class VariationalSystem:
    """Quadratic variational wave system.

    Parameters
    ----------
    d : int
        Number of spatial dimensions; coordinates are ``x^0 = t, x^1..x^d``.
    m : int
        Number of dependent variables.
    A : callable
        ``A(g) -> array (d+1, d+1, m, m)``.
    dA : callable, optional
        ``dA(g) -> array (m, d+1, d+1, m, m)``.  Defaults to dual numbers.
    name : str
        Label used in reports.
    symmetry_tol : float
        Tolerance of the symmetry check run at construction.
    """

    d: int
    m: int
    A: Callable
    dA: Callable | None = None
    name: str = "custom"
    symmetry_tol: float = 1e-12
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise ClassificationError("need d >= 1 and m >= 1")
        self.check_symmetries(np.random.default_rng(0))

    @property
    def shape(self) -> tuple:
        return (self.d + 1, self.d + 1, self.m, self.m)

    def _g(self, g) -> np.ndarray:
        g = np.atleast_1d(np.asarray(g, dtype=float))
        if g.shape != (self.m,):
            raise ClassificationError(f"g must have length {self.m}, got shape {g.shape}")
        return g

    def coefficients(self, g) -> np.ndarray:
        """``A[a, b, p, q]`` at ``g`` as floats."""
        out = _as_float(self.A(self._g(g)))
        if out.shape != self.shape:
            raise ClassificationError(f"A returned shape {out.shape}, expected {self.shape}")
        return out

    def coefficient(self, g, alpha: int, beta: int, p: int, q: int) -> float:
        """A single entry ``A^{alpha beta}_{pq}(g)``."""
        return float(self.coefficients(g)[alpha, beta, p, q])

    def coefficient_derivatives(self, g) -> np.ndarray:
        """``dA[p, a, b, q, r] = dA^{ab}_{qr}/dg^p`` at ``g``."""
        g = self._g(g)
        if self.dA is not None:
            out = _as_float(self.dA(g))
        else:
            raw = np.asarray(self.A(_dual_vector(g)), dtype=object)
            out = np.moveaxis(_tangents(raw, self.m), -1, 0)
        if out.shape != (self.m,) + self.shape:
            raise ClassificationError(f"dA has shape {out.shape}, expected {(self.m,) + self.shape}")
        return out

    def check_symmetries(self, rng: np.random.Generator, n_points: int = 3) -> float:
        """Largest asymmetry of ``A`` at random points; raises above tolerance."""
        worst = 0.0
        for _ in range(n_points):
            a = self.coefficients(rng.uniform(-0.5, 0.5, self.m))
            worst = max(worst, np.max(np.abs(a - a.transpose(1, 0, 2, 3)), initial=0.0),
                        np.max(np.abs(a - a.transpose(0, 1, 3, 2)), initial=0.0))
        if worst > self.symmetry_tol:
            raise ClassificationError(f"coefficients are not symmetric (defect {worst:.3e})")
        return float(worst)


@dataclass
class CharacteristicData:
    C: np.ndarray
    null_basis: np.ndarray
    multiplicity: int


@dataclass
class TransportCoefficients:
    ray_vector: np.ndarray
    N: float
    Lambda: float


@dataclass
class ClassificationReport:
    verdict: str
    n_samples: int
    n_valid: int
    max_abs_lambda: float
    min_abs_lambda: float
    multiplicities: list
    rejected: list
    lambda_tol: float
    system: str

    def as_dict(self) -> dict:
        return {
            "system": self.system,
            "verdict": self.verdict,
            "n_samples": self.n_samples,
            "n_valid": self.n_valid,
            "max_abs_lambda": self.max_abs_lambda,
            "min_abs_lambda": self.min_abs_lambda,
            "multiplicities": self.multiplicities,
            "rejected": self.rejected,
            "lambda_tol": self.lambda_tol,
        }


def _covector(system: VariationalSystem, du) -> np.ndarray:
    du = np.asarray(du, dtype=float)
    if du.shape != (system.d + 1,):
        raise ClassificationError(f"du must have length {system.d + 1}, got shape {du.shape}")
    if not np.any(du):
        raise ClassificationError("du must be nonzero")
    return du


def eikonal_matrix(system: VariationalSystem, g0, du) -> np.ndarray:
    """``C_pq = u_a u_b A^{ab}_{pq}(g0)``."""
    du = _covector(system, du)
    return np.einsum("a,b,abpq->pq", du, du, system.coefficients(g0))


def null_space(C, tolerance: float = 1e-8, scale: float | None = None) -> CharacteristicData:
    """Orthonormal basis of the numerical kernel of a symmetric matrix.

    Eigenvalues with ``|lambda| <= tolerance * scale`` count as zero.  The
    scale defaults to ``max|lambda|``, which cannot detect a kernel of a 1x1
    matrix; :func:`characteristic_data` passes a scale taken from the system
    instead.  The zero matrix has full multiplicity.  Each basis vector is
    signed so that its largest-magnitude entry is positive.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[0] != C.shape[1]:
        raise ClassificationError("C must be square")
    if not np.allclose(C, C.T, rtol=1e-12, atol=1e-14 * (1.0 + np.max(np.abs(C), initial=0.0))):
        raise ClassificationError("C must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    if scale is None:
        scale = np.max(np.abs(vals), initial=0.0)
    keep = np.abs(vals) <= tolerance * scale
    basis = vecs[:, keep].T.copy()
    for i, r in enumerate(basis):
        if r[np.argmax(np.abs(r))] < 0:
            basis[i] = -r
    return CharacteristicData(C, basis, int(keep.sum()))


def characteristic_data(system: VariationalSystem, g0, du, tolerance: float = 1e-8) -> CharacteristicData:
    """Eikonal matrix and its kernel with threshold ``tolerance |du|^2 max|A(g0)|``."""
    du = _covector(system, du)
    C = eikonal_matrix(system, g0, du)
    scale = float(np.dot(du, du) * np.max(np.abs(system.coefficients(g0))))
    return null_space(C, tolerance, scale)


def lambda_tensor(system: VariationalSystem, g0, du, basis) -> np.ndarray:
    """``Lambda_ijk = u_a u_b dA^{ab}_{qr}/dg^p R_i^p R_j^q R_k^r``.

    Parameters
    ----------
    basis : array (n, m) or CharacteristicData
        Null vectors as rows.
    """
    if isinstance(basis, CharacteristicData):
        basis = basis.null_basis
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.size == 0:
        raise ClassificationError("empty null basis: du is not characteristic")
    du = _covector(system, du)
    K = np.einsum("a,b,pabqr->pqr", du, du, system.coefficient_derivatives(g0))
    return np.einsum("pqr,ip,jq,kr->ijk", K, basis, basis, basis)


def _field_or_const(f, x):
    return f(x) if callable(f) else np.asarray(f, dtype=float)


def transport_coefficients(system: VariationalSystem, g0, du, R, point) -> TransportCoefficients:
    """Ray vector, damping ``N`` and ``Lambda`` of a simple characteristic at ``point``.

    Parameters
    ----------
    g0 : callable
        ``g0(x) -> m-vector`` for ``x`` a (d+1)-vector; must accept duals.
    du, R : array or callable
        Phase covector and null vector, constant or ``f(x)``.
    point : array (d+1,)

    Returns
    -------
    TransportCoefficients
        ``ray_vector^a = 2 u_b A^{ab}_{pq} R^p R^q`` and
        ``N = d_a(u_b A^{ab}_{pq} R^p R^q) - u_a dA^{ab}_{qr}/dg^p g0^r_{,b} R^p R^q``.
    """
    point = np.asarray(point, dtype=float)
    nx = system.d + 1
    if point.shape != (nx,):
        raise ClassificationError(f"point must have length {nx}")
    xd = _dual_vector(point)
    gd = np.asarray(g0(xd), dtype=object).reshape(system.m)
    ud = np.asarray(_field_or_const(du, xd), dtype=object).reshape(nx)
    Rd = np.asarray(_field_or_const(R, xd), dtype=object).reshape(system.m)
    Ad = np.asarray(system.A(gd), dtype=object)
    flux = np.einsum("b,abpq,p,q->a", ud, Ad, Rd, Rd)
    div = float(np.trace(_tangents(flux, nx)))

    g_val = _as_float(gd)
    g_grad = _tangents(gd, nx)
    u_val = _as_float(ud)
    R_val = _as_float(Rd)
    dA = system.coefficient_derivatives(g_val)
    coupling = np.einsum("a,pabqr,rb,p,q->", u_val, dA, g_grad, R_val, R_val)
    ray = 2.0 * np.einsum("b,abpq,p,q->a", u_val, system.coefficients(g_val), R_val, R_val)
    lam = np.einsum("a,b,pabqr,p,q,r->", u_val, u_val, dA, R_val, R_val, R_val)
    return TransportCoefficients(ray, div - float(coupling), float(lam))


def characteristic_covectors(system: VariationalSystem, g0, spatial) -> np.ndarray:
    """All real ``u_t`` with ``det C(u_t, spatial) = 0``, as full covectors.

    Solves the quadratic eigenproblem ``(u_t^2 A^00 + u_t B + K) x = 0`` by a
    companion linearization.
    """
    k = np.asarray(spatial, dtype=float)
    if k.shape != (system.d,):
        raise ClassificationError(f"spatial direction must have length {system.d}")
    A = system.coefficients(g0)
    m = system.m
    A00 = A[0, 0]
    B = np.einsum("i,ipq->pq", k, A[0, 1:] + A[1:, 0])
    K = np.einsum("i,j,ijpq->pq", k, k, A[1:, 1:])
    left = np.block([[np.zeros((m, m)), np.eye(m)], [-K, -B]])
    right = np.block([[np.eye(m), np.zeros((m, m))], [np.zeros((m, m)), A00]])
    roots = scipy.linalg.eigvals(left, right)
    finite = roots[np.isfinite(roots)]
    real = np.sort(finite[np.abs(finite.imag) <= 1e-10 * (1.0 + np.abs(finite))].real)
    uniq = []
    for r in real:
        if not uniq or abs(r - uniq[-1]) > 1e-9 * (1.0 + abs(r)):
            uniq.append(r)
    return np.array([np.concatenate([[r], k]) for r in uniq]).reshape(-1, system.d + 1)


def characteristic_samples(system: VariationalSystem, g0_samples, directions) -> list:
    """Pairs ``(g0, du)`` with ``du`` characteristic at ``g0`` for every spatial direction."""
    out = []
    for g0 in g0_samples:
        for k in directions:
            for du in characteristic_covectors(system, g0, k):
                out.append((np.asarray(g0, dtype=float), du))
    return out


def classify_characteristic(
    system: VariationalSystem,
    samples: Sequence,
    kernel_tol: float = 1e-8,
    lambda_tol: float = 1e-10,
) -> ClassificationReport:
    """Sample-based verdict on a characteristic family.

    Each ``du`` is normalized to unit length, which leaves the null space
    unchanged and makes ``lambda_tol`` scale free.  Samples with a trivial
    kernel are rejected and listed.

    Returns
    -------
    ClassificationReport
        ``"linearly degenerate"`` when every ``|Lambda_ijk| < lambda_tol``;
        ``"genuinely nonlinear candidate"`` when every sample is simple with
        ``|Lambda| > lambda_tol``; ``"indeterminate"`` otherwise.
    """
    samples = list(samples)
    if not samples:
        raise ClassificationError("no samples given")
    mags, mults, rejected = [], [], []
    for idx, (g0, du) in enumerate(samples):
        du = _covector(system, du)
        du = du / np.linalg.norm(du)
        data = characteristic_data(system, g0, du, kernel_tol)
        if data.multiplicity == 0:
            rejected.append({"index": idx, "g0": np.atleast_1d(g0).tolist(), "du": du.tolist(),
                             "reason": "non-characteristic"})
            continue
        if not np.any(system.coefficients(g0)):
            rejected.append({"index": idx, "g0": np.atleast_1d(g0).tolist(), "du": du.tolist(),
                             "reason": "vanishing coefficients"})
            continue
        lam = lambda_tensor(system, g0, du, data)
        mags.append(float(np.max(np.abs(lam))))
        mults.append(data.multiplicity)
    if not mags:
        raise ClassificationError("no valid characteristic samples")
    max_l, min_l = max(mags), min(mags)
    if max_l < lambda_tol:
        verdict = LINEARLY_DEGENERATE
    elif min_l > lambda_tol and all(n == 1 for n in mults):
        verdict = GENUINELY_NONLINEAR
    else:
        verdict = INDETERMINATE
    return ClassificationReport(verdict, len(samples), len(mags), max_l, min_l, mults, rejected,
                                lambda_tol, system.name)


# -- built-in systems ---------------------------------------------------------


def _poly(coeffs, x):
    out = 0.0
    for c in reversed(list(coeffs)):
        out = out * x + c
    return out


def scalar_wave_system(c_coeffs=(1.0, 1.0), d: int = 1) -> VariationalSystem:
    """``g_tt - div(c(g)^2 grad g) + c c' |grad g|^2 = 0`` with polynomial ``c``.

    Encodes the Lagrangian ``1/2 g_t^2 - 1/2 c(g)^2 |grad g|^2``, so
    ``A^00 = 1/2``, ``A^ii = -c^2/2`` and ``Lambda = -|grad u|^2 c c'``.
    """
    coeffs = [float(c) for c in c_coeffs]

    def A(g):
        out = coefficient_array(d, 1)
        c = _poly(coeffs, g[0])
        out[0, 0, 0, 0] = 0.5
        for i in range(1, d + 1):
            out[i, i, 0, 0] = -0.5 * c * c
        return out

    return VariationalSystem(d, 1, A, name="scalar-wave", meta={"c": coeffs})


def decoupled_wave_system(speeds=(1.0, 2.0), d: int = 1) -> VariationalSystem:
    """Independent linear waves ``g^p_tt = s_p^2 lap g^p``; ``A`` does not depend on ``g``."""
    speeds = [float(s) for s in speeds]
    m = len(speeds)

    def A(g):
        out = coefficient_array(d, m)
        for p, s in enumerate(speeds):
            out[0, 0, p, p] = 0.5
            for i in range(1, d + 1):
                out[i, i, p, p] = -0.5 * s * s
        return out

    return VariationalSystem(d, m, A, name="decoupled-waves", meta={"speeds": speeds})


def polynomial_system(constant, linear=None, quadratic=None) -> VariationalSystem:
    """``A(g) = A0 + A1[r] g^r + A2[r, s] g^r g^s`` from nested lists.

    Shapes are ``(d+1, d+1, m, m)``, ``(m, d+1, d+1, m, m)`` and
    ``(m, m, d+1, d+1, m, m)``.
    """
    A0 = np.asarray(constant, dtype=float)
    if A0.ndim != 4 or A0.shape[0] != A0.shape[1] or A0.shape[2] != A0.shape[3]:
        raise ClassificationError("constant must have shape (d+1, d+1, m, m)")
    d, m = A0.shape[0] - 1, A0.shape[2]
    A1 = np.zeros((m,) + A0.shape) if linear is None else np.asarray(linear, dtype=float)
    A2 = np.zeros((m, m) + A0.shape) if quadratic is None else np.asarray(quadratic, dtype=float)
    if A1.shape != (m,) + A0.shape or A2.shape != (m, m) + A0.shape:
        raise ClassificationError("linear/quadratic coefficient shapes do not match constant")

    def A(g):
        out = coefficient_array(d, m)
        for idx in np.ndindex(A0.shape):
            val = A0[idx]
            for r in range(m):
                if A1[(r,) + idx]:
                    val = val + A1[(r,) + idx] * g[r]
                for s in range(m):
                    if A2[(r, s) + idx]:
                        val = val + A2[(r, s) + idx] * g[r] * g[s]
            out[idx] = val
        return out

    return VariationalSystem(d, m, A, name="polynomial")


SYSTEM_REGISTRY = {
    "scalar-wave": lambda p: scalar_wave_system(p.get("c", [1.0, 1.0]), p.get("d", 1)),
    "constant-coefficient": lambda p: scalar_wave_system([p.get("c0", 1.0)], p.get("d", 1)),
    "decoupled-waves": lambda p: decoupled_wave_system(p.get("speeds", [1.0, 2.0]), p.get("d", 1)),
    "polynomial": lambda p: polynomial_system(p["constant"], p.get("linear"), p.get("quadratic")),
}

_REGISTRY_KEYS = {
    "scalar-wave": {"c", "d"},
    "constant-coefficient": {"c0", "d"},
    "decoupled-waves": {"speeds", "d"},
    "polynomial": {"constant", "linear", "quadratic"},
}


def build_system(name: str, params: dict | None = None) -> VariationalSystem:
    """Instantiate a registered system; unknown names or keys raise."""
    params = dict(params or {})
    if name not in SYSTEM_REGISTRY:
        raise ClassificationError(f"unknown system {name!r}; known: {sorted(SYSTEM_REGISTRY)}")
    extra = set(params) - _REGISTRY_KEYS[name]
    if extra:
        raise ClassificationError(f"unknown parameters for {name!r}: {sorted(extra)}")
    return SYSTEM_REGISTRY[name](params)
