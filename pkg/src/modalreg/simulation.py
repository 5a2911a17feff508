"""Heteroscedastic mixture benchmark and the Monte Carlo kernel comparison.

Data follow ``Y = a0 + a1*X2 + (s0 + s1*X2) * eps`` with ``X2 ~ U[0, 1]`` and
``eps`` a two-component normal mixture.  The conditional mode is linear in
``X = (1, X2)`` with parameter ``(a0 + s0*m, a1 + s1*m)`` where ``m`` is the
mode of ``eps``.
"""

from __future__ import annotations

import functools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .asymptotics import ConditionalDensityModel, oracle_quantities, optimal_bandwidth
from .errors import AllStartsFailed, ExperimentFailed
from .estimator import Dataset, FitConfig, fit_multistart
from .kernels import get_kernel

__all__ = [
    "DGPSpec",
    "ExperimentConfig",
    "ExperimentRow",
    "eps_density",
    "eps_pdf_derivs",
    "find_mode_eps",
    "true_theta",
    "conditional_model",
    "dgp_oracle",
    "oracle_bandwidth",
    "draw",
    "sample",
    "trial_seed",
    "run_experiment",
    "BENCHMARK_KERNELS",
]

log = logging.getLogger(__name__)

BENCHMARK_KERNELS = ("epanechnikov", "biweight", "gaussian", "laplace")

_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class DGPSpec:
    intercept: tuple = (1.0, 3.0)
    scale: tuple = (1.0, 2.0)
    weights: tuple = (0.5, 0.5)
    means: tuple = (-1.0, 1.0)
    sds: tuple = (3.0, 0.3)

    def __post_init__(self):
        if not math.isclose(sum(self.weights), 1.0, abs_tol=1e-12):
            raise ValueError("mixture weights must sum to 1")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be non-negative")
        if any(s <= 0 for s in self.sds):
            raise ValueError("component standard deviations must be positive")
        if not len(self.weights) == len(self.means) == len(self.sds):
            raise ValueError("mixture parameter lengths differ")


def eps_density(dgp: DGPSpec, e, order=0):
    """``order``-th derivative of the residual mixture density at ``e``.

    Uses ``d^k/de^k phi((e-mu)/sd)/sd = (-1)^k He_k(z) phi(z) / sd^(k+1)``
    with the probabilists' Hermite polynomials ``He_k``.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0..3")
    e = np.asarray(e, dtype=float)
    out = np.zeros_like(e)
    for w, mu, sd in zip(dgp.weights, dgp.means, dgp.sds):
        z = (e - mu) / sd
        phi = np.exp(-0.5 * z * z) * _INV_SQRT2PI
        he = (1.0, z, z * z - 1.0, z * (z * z - 3.0))[order]
        out = out + w * (-1) ** order * he * phi / sd ** (order + 1)
    return out


def eps_pdf_derivs(dgp: DGPSpec, y, x2, order=0):
    """``order``-th y-derivative of the conditional density ``p(y | x2)``."""
    x2 = np.asarray(x2, dtype=float)
    loc = dgp.intercept[0] + dgp.intercept[1] * x2
    s = dgp.scale[0] + dgp.scale[1] * x2
    return eps_density(dgp, (np.asarray(y, dtype=float) - loc) / s, order) / s ** (order + 1)


@functools.lru_cache(maxsize=None)
def find_mode_eps(dgp: DGPSpec) -> float:
    """Global mode of the residual mixture.

    A grid scan picks the highest peak; the root of the density's first
    derivative inside the neighbouring grid cells is then polished by Brent's
    method (root-finding on ``f'`` is far sharper than maximizing ``f``).
    """
    grid = np.linspace(-10.0, 10.0, 20001)
    i = int(np.argmax(eps_density(dgp, grid)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]

    def slope(e):
        return float(eps_density(dgp, e, 1))

    if slope(lo) * slope(hi) > 0:
        raise ValueError("residual density has no interior mode on [-10, 10]")
    return float(optimize.brentq(slope, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def true_theta(dgp: DGPSpec) -> np.ndarray:
    m = find_mode_eps(dgp)
    return np.array([dgp.intercept[0] + dgp.scale[0] * m,
                     dgp.intercept[1] + dgp.scale[1] * m])


def conditional_model(dgp: DGPSpec, nodes=64) -> ConditionalDensityModel:
    """Model for the oracle computations, with Gauss-Legendre nodes on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    x2 = 0.5 * (t + 1.0)

    def deriv(y, X, order):
        return eps_pdf_derivs(dgp, y, X[:, 1], order)

    def sample_x(rng, size):
        return np.column_stack([np.ones(size), rng.uniform(size=size)])

    return ConditionalDensityModel(
        theta=true_theta(dgp),
        density_deriv=deriv,
        x_nodes=np.column_stack([np.ones(nodes), x2]),
        x_weights=0.5 * w,
        sample_x=sample_x,
    )


@functools.lru_cache(maxsize=None)
def dgp_oracle(dgp: DGPSpec):
    return oracle_quantities(conditional_model(dgp))


def oracle_bandwidth(dgp: DGPSpec, kernel, n) -> float:
    return optimal_bandwidth(kernel, n, dgp_oracle(dgp))


def draw(dgp: DGPSpec, n, rng):
    """Return ``(x2, eps, component)`` for ``n`` draws from ``rng``."""
    x2 = rng.uniform(size=n)
    comp = rng.choice(len(dgp.weights), size=n, p=dgp.weights)
    eps = rng.normal(np.asarray(dgp.means)[comp], np.asarray(dgp.sds)[comp])
    return x2, eps, comp


def sample(dgp: DGPSpec, n, seed) -> Dataset:
    """Draw ``n`` observations; identical ``seed`` gives identical data."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x2, eps, _ = draw(dgp, n, np.random.default_rng(seed))
    y = dgp.intercept[0] + dgp.intercept[1] * x2 + (dgp.scale[0] + dgp.scale[1] * x2) * eps
    return Dataset(np.column_stack([np.ones(n), x2]), y)


@dataclass(frozen=True)
class ExperimentConfig:
    sample_sizes: tuple
    trials: int
    kernels: tuple = BENCHMARK_KERNELS
    base_seed: int = 0
    starts_per_fit: int = 10
    start_box_halfwidth: float = 0.1
    dgp: DGPSpec = field(default_factory=DGPSpec)
    tol: float = 1e-4
    max_iter: int = 500
    max_failure_rate: float = 0.01

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sample_sizes or any(n < 2 for n in self.sample_sizes):
            raise ValueError("sample sizes must be >= 2")
        if self.starts_per_fit < 1:
            raise ValueError("starts_per_fit must be >= 1")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "kernels", tuple(get_kernel(k).name for k in self.kernels))


@dataclass
class ExperimentRow:
    kernel: str
    n: int
    mse_x100: float
    mse_std_x100: float
    mean_fit_seconds: float
    bandwidth: float
    failed_trials: int = 0


def trial_seed(base_seed, n, trial) -> np.random.SeedSequence:
    """Counter-based stream for one (n, trial) cell, shared by all kernels."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(int(n), int(trial)))


def _run_trials(config: ExperimentConfig, kernel, n, h, trials):
    dgp = config.dgp
    theta_true = true_theta(dgp)
    out = []
    for trial in trials:
        data_ss, start_ss = trial_seed(config.base_seed, n, trial).spawn(2)
        data = sample(dgp, n, data_ss)
        box = np.random.default_rng(start_ss).uniform(
            -config.start_box_halfwidth, config.start_box_halfwidth,
            size=(config.starts_per_fit, 2))
        fc = FitConfig(kernel, h, tol=config.tol, max_iter=config.max_iter,
                       starts=list(theta_true + box))
        t0 = time.perf_counter()
        try:
            res = fit_multistart(data, fc)
        except AllStartsFailed:
            out.append((trial, math.nan, math.nan))
            continue
        elapsed = (time.perf_counter() - t0) / config.starts_per_fit
        err = res.theta - theta_true
        out.append((trial, float(err @ err), elapsed))
    return out


def _chunks(seq, k):
    step = max(1, math.ceil(len(seq) / k))
    return [seq[i:i + step] for i in range(0, len(seq), step)]


def run_experiment(config: ExperimentConfig, jobs=1) -> list[ExperimentRow]:
    """Run every (kernel, n) cell and summarize ``|theta_hat - theta|^2``.

    Each cell uses the oracle bandwidth for that kernel and ``n``; the same
    datasets and starts are shared across kernels.  Results do not depend on
    ``jobs``: per-trial values are stored by trial index and reduced in that
    order.

    Raises
    ------
    ExperimentFailed
        If more than ``max_failure_rate`` of the trials in a cell fail.
    """
    cells = [(k, n) for k in config.kernels for n in config.sample_sizes]
    bandwidths = {(k, n): oracle_bandwidth(config.dgp, k, n) for k, n in cells}
    trial_ids = list(range(config.trials))
    results = {cell: [None] * config.trials for cell in cells}

    if jobs <= 1:
        for cell in cells:
            for trial, err, sec in _run_trials(config, *cell, bandwidths[cell], trial_ids):
                results[cell][trial] = (err, sec)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_run_trials, config, *cell, bandwidths[cell], chunk): cell
                for cell in cells
                for chunk in _chunks(trial_ids, jobs)
            }
            for fut, cell in futures.items():
                for trial, err, sec in fut.result():
                    results[cell][trial] = (err, sec)

    rows = []
    for cell in cells:
        errs = np.array([r[0] for r in results[cell]])
        secs = np.array([r[1] for r in results[cell]])
        ok = np.isfinite(errs)
        failed = int(np.count_nonzero(~ok))
        if failed > config.max_failure_rate * config.trials:
            raise ExperimentFailed(
                f"{failed}/{config.trials} trials failed for kernel={cell[0]} n={cell[1]}")
        if failed:
            log.warning("%d trials failed for kernel=%s n=%d", failed, *cell)
        errs = errs[ok]
        se = errs.std(ddof=1) / math.sqrt(errs.size) if errs.size > 1 else math.nan
        rows.append(ExperimentRow(
            kernel=cell[0], n=cell[1],
            mse_x100=100.0 * float(errs.mean()),
            mse_std_x100=100.0 * float(se),
            mean_fit_seconds=float(secs[ok].mean()),
            bandwidth=bandwidths[cell],
            failed_trials=failed,
        ))
    return rows
