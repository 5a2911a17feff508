"""The ten symmetric kernels used for modal regression, with minorizer weights.

Every kernel is written as ``K(u) = k(u**2)`` for a profile ``k`` on
``[0, inf)``.  When ``k`` is convex and non-increasing, the best quadratic
minorizer of the scaled kernel ``K_h(u) = K(u/h)/h`` at ``u'`` is

    G_h(u | u') = g * u**2 + (K_h(u') - g * u'**2),
    g = kslope((u'/h)**2) / h**3,

where ``kslope`` is the minimum subderivative of ``k``.  ``g`` is the IRLS
weight (up to sign) used by :mod:`modalreg.estimator`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotQuadraticallyMinorizable
from .numerics import integrate_pieces

__all__ = [
    "QMStatus",
    "KernelSpec",
    "KERNELS",
    "get_kernel",
    "kernel_eval",
    "qm_weight",
    "kernel_constants",
    "kernel_constants_numeric",
    "amse_criterion",
    "ZERO_CLAMP",
]

# relative floor on |u'| for kernels whose profile slope diverges at 0
ZERO_CLAMP = 1e-10

_SQRT2PI = math.sqrt(2.0 * math.pi)


class QMStatus(str, enum.Enum):
    QM_EVERYWHERE = "qm_everywhere"
    QM_EXCEPT_ZERO = "qm_except_zero"
    NOT_QM = "not_qm"


@dataclass(frozen=True)
class KernelSpec:
    """A named kernel and the pieces the estimator and asymptotics need.

    ``density``, ``derivative`` and ``profile_slope`` are vectorized over
    numpy arrays and refer to the unscaled kernel (``h = 1``).
    """

    name: str
    density: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    profile_slope: Callable[[np.ndarray], np.ndarray]
    support_bound: float
    truncation_radius: float
    U: float
    V: float
    qm_status: QMStatus
    # interior points where K or K' is not smooth
    kinks: tuple = field(default=(0.0,))

    def profile(self, s):
        """``k(s)`` with ``K(u) = k(u**2)``."""
        return self.density(np.sqrt(np.asarray(s, dtype=float)))

    @property
    def is_qm(self) -> bool:
        return self.qm_status is not QMStatus.NOT_QM

    def integration_breakpoints(self):
        r = min(self.support_bound, self.truncation_radius)
        return sorted({-r, r, *self.kinks})

    def __repr__(self):
        return f"KernelSpec({self.name!r})"


def _arr(u):
    return np.asarray(u, dtype=float)


def _inside(u):
    return np.abs(u) <= 1.0


def _pos(t):
    return np.maximum(t, 0.0)


def _tanh_ratio(x):
    # tanh(x)/x, continuous at 0
    x = np.abs(x)
    small = x < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 3.0, np.tanh(safe) / safe)


# -- compact kernels ---------------------------------------------------------

def _epan(u):
    u = _arr(u)
    return 0.75 * _pos(1.0 - u * u)


def _epan_d(u):
    u = _arr(u)
    return np.where(_inside(u), -1.5 * u, 0.0)


def _epan_slope(s):
    # min subderivative at the kink s = 1 is the interior slope
    return np.where(_arr(s) <= 1.0, -0.75, 0.0)


def _biweight(u):
    u = _arr(u)
    return 15.0 / 16.0 * _pos(1.0 - u * u) ** 2


def _biweight_d(u):
    u = _arr(u)
    return -15.0 / 4.0 * u * _pos(1.0 - u * u)


def _biweight_slope(s):
    return -15.0 / 8.0 * _pos(1.0 - _arr(s))


def _triweight(u):
    u = _arr(u)
    return 35.0 / 32.0 * _pos(1.0 - u * u) ** 3


def _triweight_d(u):
    u = _arr(u)
    return -105.0 / 16.0 * u * _pos(1.0 - u * u) ** 2


def _triweight_slope(s):
    return -105.0 / 32.0 * _pos(1.0 - _arr(s)) ** 2


def _tricube(u):
    a = np.abs(_arr(u))
    return 70.0 / 81.0 * _pos(1.0 - a**3) ** 3


def _tricube_d(u):
    u = _arr(u)
    a = np.abs(u)
    return -70.0 / 9.0 * u * a * _pos(1.0 - a**3) ** 2


def _tricube_slope(s):
    s = _arr(s)
    r = np.sqrt(s)
    return -35.0 / 9.0 * r * _pos(1.0 - s * r) ** 2


def _cosine(u):
    u = _arr(u)
    return np.where(_inside(u), math.pi / 4.0 * np.cos(math.pi * u / 2.0), 0.0)


def _cosine_d(u):
    u = _arr(u)
    return np.where(_inside(u), -(math.pi**2) / 8.0 * np.sin(math.pi * u / 2.0), 0.0)


def _cosine_slope(s):
    s = _arr(s)
    # d/ds (pi/4) cos(pi sqrt(s)/2) = -(pi^3/32) sin(a)/a, a = pi sqrt(s)/2
    return np.where(s <= 1.0, -(math.pi**3) / 32.0 * np.sinc(np.sqrt(s) / 2.0), 0.0)


def _triangle(u):
    return _pos(1.0 - np.abs(_arr(u)))


def _triangle_d(u):
    u = _arr(u)
    return np.where(_inside(u), -np.sign(u), 0.0)


def _triangle_slope(s):
    s = _arr(s)
    with np.errstate(divide="ignore"):
        return np.where(s <= 1.0, -0.5 / np.sqrt(s), 0.0)


# -- infinite-support kernels ------------------------------------------------

def _gauss(u):
    u = _arr(u)
    return np.exp(-0.5 * u * u) / _SQRT2PI


def _gauss_d(u):
    return -_arr(u) * _gauss(u)


def _gauss_slope(s):
    return -0.5 * np.exp(-0.5 * _arr(s)) / _SQRT2PI


def _logistic(u):
    e = np.exp(-np.abs(_arr(u)))
    return e / (1.0 + e) ** 2


def _logistic_d(u):
    u = _arr(u)
    return -_logistic(u) * np.tanh(u / 2.0)


def _logistic_slope(s):
    r = np.sqrt(_arr(s))
    return -0.25 * _logistic(r) * _tanh_ratio(r / 2.0)


def _laplace(u):
    return 0.5 * np.exp(-np.abs(_arr(u)))


def _laplace_d(u):
    u = _arr(u)
    return -np.sign(u) * _laplace(u)


def _laplace_slope(s):
    r = np.sqrt(_arr(s))
    with np.errstate(divide="ignore"):
        return -0.25 * np.exp(-r) / r


def _sech(u):
    a = math.pi * np.abs(_arr(u)) / 2.0
    e = np.exp(-a)
    return e / (1.0 + e * e)


def _sech_d(u):
    u = _arr(u)
    return -math.pi / 2.0 * _sech(u) * np.tanh(math.pi * u / 2.0)


def _sech_slope(s):
    r = np.sqrt(_arr(s))
    return -(math.pi**2) / 8.0 * _sech(r) * _tanh_ratio(math.pi * r / 2.0)


_INF = math.inf
_QE, _QZ, _NQ = QMStatus.QM_EVERYWHERE, QMStatus.QM_EXCEPT_ZERO, QMStatus.NOT_QM

# Table order: ascending AMSE criterion for the first nine rows.
KERNELS: dict[str, KernelSpec] = {
    k.name: k
    for k in (
        KernelSpec("biweight", _biweight, _biweight_d, _biweight_slope,
                   1.0, 1.0, 1 / 7, 15 / 7, _QE),
        KernelSpec("triweight", _triweight, _triweight_d, _triweight_slope,
                   1.0, 1.0, 1 / 9, 35 / 11, _QE),
        KernelSpec("tricube", _tricube, _tricube_d, _tricube_slope,
                   1.0, 1.0, 35 / 243, 420 / 187, _NQ),
        KernelSpec("cosine", _cosine, _cosine_d, _cosine_slope,
                   1.0, 1.0, 1 - 8 / math.pi**2, math.pi**4 / 64, _QE),
        KernelSpec("epanechnikov", _epan, _epan_d, _epan_slope,
                   1.0, 1.0, 1 / 5, 3 / 2, _QE),
        KernelSpec("triangle", _triangle, _triangle_d, _triangle_slope,
                   1.0, 1.0, 1 / 6, 2.0, _QZ),
        KernelSpec("gaussian", _gauss, _gauss_d, _gauss_slope,
                   _INF, 10.0, 1.0, 1 / (4 * math.sqrt(math.pi)), _QE),
        KernelSpec("logistic", _logistic, _logistic_d, _logistic_slope,
                   _INF, 60.0, math.pi**2 / 3, 1 / 30, _QE),
        KernelSpec("laplace", _laplace, _laplace_d, _laplace_slope,
                   _INF, 60.0, 2.0, 1 / 4, _QZ),
        # int (K')^2 = (pi^2/16)(2/pi)(2/3) = pi/12
        KernelSpec("sech", _sech, _sech_d, _sech_slope,
                   _INF, 40.0, 1.0, math.pi / 12, _QE),
    )
}


def get_kernel(name) -> KernelSpec:
    if isinstance(name, KernelSpec):
        return name
    try:
        return KERNELS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; choose from {list(KERNELS)}") from None


def kernel_eval(kernel, u, h):
    """Scaled kernel ``K(u/h)/h``."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    kernel = get_kernel(kernel)
    return kernel.density(_arr(u) / h) / h


def qm_weight(kernel, u_prime, h):
    """Curvature ``g <= 0`` of the best quadratic minorizer of ``K_h`` at ``u_prime``.

    For kernels whose profile slope diverges at zero (triangle, laplace),
    ``|u_prime|`` is floored at ``ZERO_CLAMP * h``.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    kernel = get_kernel(kernel)
    if kernel.qm_status is QMStatus.NOT_QM:
        raise NotQuadraticallyMinorizable(
            f"{kernel.name} kernel has a non-convex profile; IRLS requires a "
            "quadratically minorizable (QM) kernel"
        )
    v = np.abs(_arr(u_prime)) / h
    if kernel.qm_status is QMStatus.QM_EXCEPT_ZERO:
        v = np.maximum(v, ZERO_CLAMP)
    return kernel.profile_slope(v * v) / h**3


def kernel_constants(kernel) -> tuple[float, float]:
    """Closed-form ``(U, V) = (int u^2 K, int (K')^2)``."""
    kernel = get_kernel(kernel)
    return kernel.U, kernel.V


def kernel_constants_numeric(kernel, rel_tol=1e-12) -> tuple[float, float]:
    """``(U, V)`` by adaptive quadrature, split at kinks and support ends."""
    kernel = get_kernel(kernel)
    pts = kernel.integration_breakpoints()
    U = integrate_pieces(lambda u: u * u * kernel.density(u), pts,
                         rel_tol=rel_tol, abs_tol=1e-15)
    V = integrate_pieces(lambda u: kernel.derivative(u) ** 2, pts,
                         rel_tol=rel_tol, abs_tol=1e-15)
    return U, V


def amse_criterion(kernel) -> float:
    """Kernel factor ``U**(6/7) * V**(4/7)`` of the optimal AMSE."""
    U, V = kernel_constants(kernel)
    return U ** (6 / 7) * V ** (4 / 7)
