"""Modal linear regression fitted by IRLS, with the Gaussian modal-EM step.

The objective is ``O(theta) = mean_i K_h(y_i - theta' x_i)``.  Each IRLS step
maximizes the sum of per-observation best quadratic minorizers, which is a
weighted least-squares problem with weights ``|g_h(r_i)|``; the objective is
therefore non-decreasing along the iterates for any QM kernel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AllStartsFailed, EmptySupport, SingularSystem
from .kernels import KernelSpec, get_kernel, kernel_eval, qm_weight
from .numerics import solve_weighted_normal_equations

__all__ = [
    "Dataset",
    "FitConfig",
    "FitResult",
    "objective",
    "irls_weights",
    "irls_step",
    "mem_step_gaussian",
    "active_index_set",
    "fit",
    "fit_multistart",
    "ols",
    "default_starts",
]

log = logging.getLogger(__name__)

STEP_TOLERANCE = "step_tolerance"
INDEX_SET_FIXED_POINT = "index_set_fixed_point"
MAX_ITERATIONS = "max_iterations"

_RIDGE_FALLBACK = 1e-10


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        n, p = X.shape
        if y.shape[0] != n:
            raise ValueError(f"X has {n} rows but y has {y.shape[0]} entries")
        if not n >= p >= 1:
            raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitConfig:
    kernel: KernelSpec
    bandwidth: float
    tol: float = 1e-4
    max_iter: int = 500
    ridge: float = 0.0
    starts: Sequence = ()

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")
        starts = tuple(np.atleast_1d(np.asarray(s, dtype=float)) for s in self.starts)
        object.__setattr__(self, "starts", starts)


@dataclass
class FitResult:
    theta: np.ndarray
    objective: float
    trajectory: list
    iterations: int
    termination: str
    start_index: int = 0
    failed_starts: int = 0
    # Epanechnikov only: sign check of -sum_{I} x x' at the fixed point
    hessian_negative_definite: Optional[bool] = None
    start: Optional[np.ndarray] = field(default=None, repr=False)


def objective(data: Dataset, theta, kernel, h) -> float:
    r = data.y - data.X @ np.asarray(theta, dtype=float)
    return float(np.mean(kernel_eval(kernel, r, h)))


def _is_epanechnikov(kernel: KernelSpec) -> bool:
    return kernel.name == "epanechnikov"


def active_index_set(data: Dataset, theta, h) -> np.ndarray:
    """Sorted indices with ``|y_i - theta' x_i| <= h``."""
    r = data.y - data.X @ np.asarray(theta, dtype=float)
    # same predicate as the Epanechnikov weight, so the two never disagree
    return np.flatnonzero((np.abs(r) / h) ** 2 <= 1.0)


def irls_weights(data: Dataset, theta, kernel, h) -> np.ndarray:
    """Non-negative IRLS weights ``-g_h(y_i - theta' x_i)``."""
    r = data.y - data.X @ np.asarray(theta, dtype=float)
    return -qm_weight(kernel, r, h)


def _weighted_solve(data: Dataset, w, ridge):
    if ridge == 0 and not np.any(w > 0):
        raise EmptySupport("all IRLS weights are zero")
    try:
        return solve_weighted_normal_equations(data.X, data.y, w, ridge)
    except SingularSystem:
        if ridge != 0:
            raise
        trace = float(np.sum(w * np.einsum("ij,ij->i", data.X, data.X)))
        fallback = _RIDGE_FALLBACK * trace / data.p
        log.debug("singular Gram matrix; retrying with ridge=%g", fallback)
        return solve_weighted_normal_equations(data.X, data.y, w, fallback)


def irls_step(data: Dataset, theta_t, config: FitConfig) -> np.ndarray:
    """One minorize-maximize update from ``theta_t``.

    Raises
    ------
    EmptySupport
        All weights vanish and ``config.ridge == 0``.
    SingularSystem
        The weighted Gram matrix stays singular after the ridge fallback.
    """
    w = irls_weights(data, theta_t, config.kernel, config.bandwidth)
    return _weighted_solve(data, w, config.ridge)


def mem_step_gaussian(data: Dataset, theta_t, h) -> np.ndarray:
    """Modal-EM update for the Gaussian kernel (closed-form M-step)."""
    r = data.y - data.X @ np.asarray(theta_t, dtype=float)
    k = kernel_eval("gaussian", r, h)
    total = float(np.sum(k))
    if not total > 0:
        raise EmptySupport("all E-step responsibilities underflowed to zero")
    return _weighted_solve(data, k / total, 0.0)


def _epanechnikov_hessian_check(data: Dataset, active) -> bool:
    Xa = data.X[active]
    if Xa.shape[0] == 0:
        return False
    return bool(np.all(np.linalg.eigvalsh(-(Xa.T @ Xa)) < 0))


def fit(data: Dataset, config: FitConfig, start) -> FitResult:
    """Run IRLS from ``start`` until a stopping rule fires.

    Non-Epanechnikov kernels stop when ``||theta_{t+1} - theta_t||_2 <= tol``.
    The Epanechnikov kernel stops exactly when the active index set
    ``{i : |r_i| <= h}`` repeats, since the next update would reproduce the
    same least-squares problem.  Either way the loop ends after ``max_iter``
    updates.
    """
    kernel, h = config.kernel, config.bandwidth
    start = np.array(start, dtype=float).reshape(-1)
    if start.shape != (data.p,):
        raise ValueError(f"start has {start.size} entries, expected {data.p}")
    epan = _is_epanechnikov(kernel)

    theta = start
    trajectory = [objective(data, theta, kernel, h)]
    w = irls_weights(data, theta, kernel, h)
    for it in range(1, config.max_iter + 1):
        theta_new = _weighted_solve(data, w, config.ridge)
        trajectory.append(objective(data, theta_new, kernel, h))
        w_new = irls_weights(data, theta_new, kernel, h)
        if epan:
            # weights are a constant times the active-set indicator
            if np.array_equal(w_new > 0, w > 0):
                return FitResult(
                    theta_new, trajectory[-1], trajectory, it, INDEX_SET_FIXED_POINT,
                    hessian_negative_definite=_epanechnikov_hessian_check(
                        data, np.flatnonzero(w_new > 0)),
                    start=start,
                )
        elif np.linalg.norm(theta_new - theta) <= config.tol:
            return FitResult(theta_new, trajectory[-1], trajectory, it,
                             STEP_TOLERANCE, start=start)
        theta, w = theta_new, w_new

    return FitResult(theta, trajectory[-1], trajectory, config.max_iter,
                     MAX_ITERATIONS, start=start)


def fit_multistart(data: Dataset, config: FitConfig) -> FitResult:
    """Fit from every start in ``config.starts``; keep the highest objective.

    Starts that raise :class:`EmptySupport` or :class:`SingularSystem` are
    counted as failed.  Ties within 1e-12 go to the earlier start.
    """
    if not config.starts:
        raise ValueError("config.starts is empty")
    best = None
    failed = 0
    for idx, start in enumerate(config.starts):
        try:
            res = fit(data, config, start)
        except (EmptySupport, SingularSystem) as exc:
            log.debug("start %d failed: %s", idx, exc)
            failed += 1
            continue
        res.start_index = idx
        if best is None or res.objective > best.objective + 1e-12:
            best = res
    if best is None:
        raise AllStartsFailed(f"all {len(config.starts)} starts failed")
    best.failed_starts = failed
    return best


def ols(data: Dataset) -> np.ndarray:
    return solve_weighted_normal_equations(data.X, data.y, np.ones(data.n))


def default_starts(data: Dataset, rng=None, count=10, halfwidth=0.1):
    """OLS solution followed by ``count`` uniform perturbations of it."""
    rng = np.random.default_rng(rng)
    center = ols(data)
    box = rng.uniform(-halfwidth, halfwidth, size=(count, data.p))
    return [center] + [center + d for d in box]
