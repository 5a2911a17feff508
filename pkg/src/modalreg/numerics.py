"""Small dense linear algebra and adaptive 1-D quadrature.

Nothing here knows about kernels or regression; the estimator and kernels
modules build on these two primitives.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .errors import NoConvergence, SingularSystem

__all__ = [
    "QuadratureSpec",
    "solve_weighted_normal_equations",
    "integrate_1d",
    "integrate_pieces",
]


def solve_weighted_normal_equations(X, y, w, ridge=0.0):
    """Solve ``(X'WX + ridge*I) theta = X'Wy`` with ``W = diag(w)``.

    Parameters
    ----------
    X : (n, p) array_like
    y : (n,) array_like
    w : (n,) array_like
        Non-negative weights.
    ridge : float
        Non-negative diagonal loading.

    Returns
    -------
    theta : (p,) ndarray

    Raises
    ------
    SingularSystem
        If a Cholesky pivot falls below ``p * eps * max(diag)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or w.shape != y.shape:
        raise ValueError("shape mismatch between X, y and w")
    if ridge < 0 or not np.isfinite(ridge):
        raise ValueError("ridge must be finite and non-negative")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")

    p = X.shape[1]
    WX = X * w[:, None]
    gram = X.T @ WX
    if ridge:
        gram[np.diag_indices(p)] += ridge
    rhs = WX.T @ y

    scale = float(np.max(np.diag(gram))) if p else 0.0
    if not scale > 0:
        raise SingularSystem("Gram matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    # squared pivots are the Schur complements
    if float(np.min(np.diag(L))) ** 2 <= p * np.finfo(float).eps * scale:
        raise SingularSystem("Cholesky pivot below rank threshold")
    return cho_solve((L, True), rhs, check_finite=False)


@dataclass(frozen=True)
class QuadratureSpec:
    lower: float
    upper: float
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]


def _eval(f, x):
    try:
        vals = np.asarray(f(x), dtype=float)
    except TypeError:
        vals = None
    if vals is None or vals.shape != x.shape:
        vals = np.array([float(f(t)) for t in x])
    return vals


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    vals = _eval(f, 0.5 * (a + b) + half * _NODES)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"integrand not finite on [{a}, {b}]")
    kron = half * float(_KRONROD @ vals)
    gauss = half * float(_GAUSS @ vals)
    return kron, abs(kron - gauss)


def integrate_1d(f: Callable, spec: QuadratureSpec) -> float:
    """Adaptive Gauss-Kronrod (G7/K15) integral of ``f`` over ``[spec.lower, spec.upper]``.

    ``f`` should accept a 1-D array of abscissae; scalar-only callables are
    evaluated pointwise. The interval with the largest error estimate is
    bisected until the summed estimate drops below
    ``max(abs_tol, rel_tol * |result|)``.
    """
    a, b = float(spec.lower), float(spec.upper)
    val, err = _gk15(f, a, b)
    # max-heap on error
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    n_intervals = 1
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n_intervals >= spec.max_subdivisions:
            raise NoConvergence(
                f"quadrature on [{a}, {b}] did not reach tolerance with "
                f"{n_intervals} subintervals (error estimate {total_err:.3e})"
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n_intervals += 1
        # re-sum instead of updating to keep cancellation error out
        total = sum(item[3] for item in heap)
        total_err = sum(-item[0] for item in heap)
    return total


def integrate_pieces(f, breakpoints, **spec_kw) -> float:
    """Sum of :func:`integrate_1d` over consecutive breakpoint intervals."""
    pts = sorted(set(float(p) for p in breakpoints))
    return sum(
        integrate_1d(f, QuadratureSpec(lo, hi, **spec_kw))
        for lo, hi in zip(pts[:-1], pts[1:])
    )
