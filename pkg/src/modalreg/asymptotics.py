"""Bias/variance asymptotics of the modal regression estimator.

For a conditional density ``p(y|x)`` whose mode is ``theta' x`` define

    A = E[p''(theta'X | X) X X'],  b = E[p'''(theta'X | X) X],
    C = E[p(theta'X | X) X X'].

With ``U``, ``V`` the kernel constants the leading-order mean squared error
at bandwidth ``h`` is

    h**4 U**2 |A^-1 b|**2 / 4 + V tr(A^-1 C A^-1) / (n h**3),

minimized at ``h ~ n**(-1/7)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NotNegativeDefinite, SingularSystem, ZeroBias
from .kernels import kernel_constants

__all__ = [
    "ConditionalDensityModel",
    "OracleQuantities",
    "oracle_quantities",
    "amse",
    "optimal_bandwidth",
    "optimal_amse_scale",
    "bias_variance_factors",
]


@dataclass(frozen=True)
class ConditionalDensityModel:
    """A conditional density with y-derivatives and a law for the inputs.

    Attributes
    ----------
    theta : (p,) ndarray
        Parameter of the linear conditional mode.
    density_deriv : callable
        ``density_deriv(y, X, order)`` returns the ``order``-th derivative in
        ``y`` of ``p(y | x)`` for each row of ``X`` (``order`` in 0..3).
    x_nodes, x_weights : ndarray, optional
        Quadrature rule for expectations over ``X`` (rows of ``x_nodes``).
    sample_x : callable, optional
        ``sample_x(rng, size)`` drawing an ``(size, p)`` array of inputs,
        used for the Monte Carlo route.
    """

    theta: np.ndarray
    density_deriv: Callable[[np.ndarray, np.ndarray, int], np.ndarray]
    x_nodes: Optional[np.ndarray] = None
    x_weights: Optional[np.ndarray] = None
    sample_x: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None


@dataclass(frozen=True)
class OracleQuantities:
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray


def oracle_quantities(model: ConditionalDensityModel, method="quadrature",
                      n_mc=1_000_000, seed=0, theta=None) -> OracleQuantities:
    """Compute ``(A, b, C)`` for ``model``.

    Parameters
    ----------
    method : {"quadrature", "monte_carlo"}
        Quadrature uses ``model.x_nodes``/``x_weights``; Monte Carlo draws
        ``n_mc`` inputs from ``model.sample_x`` with ``seed``.
    theta : array_like, optional
        Evaluate the derivatives at ``theta' x`` instead of the model's mode,
        e.g. a pilot estimate.

    Raises
    ------
    NotNegativeDefinite
        If ``A`` has a non-negative eigenvalue.
    """
    theta = np.asarray(model.theta if theta is None else theta, dtype=float)
    if method == "quadrature":
        if model.x_nodes is None or model.x_weights is None:
            raise ValueError("model has no quadrature rule for X")
        X = np.asarray(model.x_nodes, dtype=float)
        wts = np.asarray(model.x_weights, dtype=float)
    elif method == "monte_carlo":
        if model.sample_x is None:
            raise ValueError("model has no sampler for X")
        X = np.asarray(model.sample_x(np.random.default_rng(seed), n_mc), dtype=float)
        wts = np.full(X.shape[0], 1.0 / X.shape[0])
    else:
        raise ValueError(f"unknown method {method!r}")

    mode = X @ theta
    d0, d2, d3 = (np.asarray(model.density_deriv(mode, X, k)) for k in (0, 2, 3))
    A = np.einsum("k,ki,kj->ij", wts * d2, X, X)
    b = (wts * d3) @ X
    C = np.einsum("k,ki,kj->ij", wts * d0, X, X)
    A = 0.5 * (A + A.T)
    C = 0.5 * (C + C.T)
    eig = np.linalg.eigvalsh(A)
    if not np.all(eig < 0):
        raise NotNegativeDefinite(f"A has eigenvalues {eig}; expected all negative")
    return OracleQuantities(A, b, C)


def bias_variance_factors(oracle: OracleQuantities) -> tuple[float, float]:
    """``(|A^-1 b|**2, tr(A^-1 C A^-1))``."""
    try:
        Ainv_b = np.linalg.solve(oracle.A, oracle.b)
        Ainv_C = np.linalg.solve(oracle.A, oracle.C)
        # (A^-1 C)' = C A^-1 since A, C are symmetric
        sandwich = np.linalg.solve(oracle.A, Ainv_C.T)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"A is not invertible: {exc}") from None
    return float(Ainv_b @ Ainv_b), float(np.trace(sandwich))


def amse(kernel, h, n, oracle: OracleQuantities) -> float:
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    U, V = kernel_constants(kernel)
    bias2, trace = bias_variance_factors(oracle)
    return h**4 * U**2 * bias2 / 4 + V * trace / (n * h**3)


def optimal_bandwidth(kernel, n, oracle: OracleQuantities) -> float:
    """AMSE-minimizing bandwidth ``[3 V tr / (n U^2 |A^-1 b|^2)]^(1/7)``.

    Raises
    ------
    ZeroBias
        When ``A^-1 b`` vanishes (e.g. symmetric residual laws).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    U, V = kernel_constants(kernel)
    bias2, trace = bias_variance_factors(oracle)
    scale = float(np.max(np.abs(oracle.b))) if oracle.b.size else 0.0
    if bias2 == 0.0 or scale <= 1e-14 * float(np.max(np.abs(oracle.A))):
        raise ZeroBias("leading bias term is zero; optimal bandwidth is undefined")
    return (3 * V * trace / (n * U**2 * bias2)) ** (1 / 7)


def optimal_amse_scale(kernel, n, oracle: OracleQuantities) -> float:
    """``U^(6/7) V^(4/7) n^(-4/7) |A^-1 b|^(6/7) tr^(4/7)``.

    The AMSE at the optimal bandwidth is ``(7/4) 3**(-3/7)`` times this.
    """
    U, V = kernel_constants(kernel)
    bias2, trace = bias_variance_factors(oracle)
    return U ** (6 / 7) * V ** (4 / 7) * n ** (-4 / 7) * bias2 ** (3 / 7) * trace ** (4 / 7)
