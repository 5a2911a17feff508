import math

import numpy as np
import pytest
from scipy import integrate, stats

from modalreg.asymptotics import (
    ConditionalDensityModel,
    OracleQuantities,
    amse,
    bias_variance_factors,
    optimal_amse_scale,
    optimal_bandwidth,
    oracle_quantities,
)
from modalreg.errors import NotNegativeDefinite, ZeroBias
from modalreg.kernels import KERNELS, amse_criterion, kernel_constants
from modalreg.simulation import DGPSpec, conditional_model, dgp_oracle, find_mode_eps

PHI0 = 1 / math.sqrt(2 * math.pi)
EQ11_CONST = 1.75 * 3 ** (-3 / 7)


def mixture_pdf(e, dgp=DGPSpec()):
    return sum(w * stats.norm.pdf(e, mu, sd) for w, mu, sd in zip(dgp.weights, dgp.means, dgp.sds))


def fd_derivative(f, x, order, step=3e-3):
    # 7-point central stencils, O(step^6) truncation
    k = np.arange(-3, 4)
    coef = {
        2: np.array([2, -27, 270, -490, 270, -27, 2]) / 180,
        3: np.array([1, -8, 13, 0, -13, 8, -1]) / 8,
    }[order]
    return float(coef @ f(x + k * step)) / step**order


@pytest.fixture(scope="module")
def scipy_oracle():
    dgp = DGPSpec()
    m = find_mode_eps(dgp)
    f0 = mixture_pdf(m)
    f2 = fd_derivative(mixture_pdf, m, 2)
    f3 = fd_derivative(mixture_pdf, m, 3)

    def E(g):
        return integrate.quad(g, 0, 1, epsabs=1e-14, epsrel=1e-13)[0]

    def mat(c, power):
        return c * np.array([
            [E(lambda x: 1 / (1 + 2 * x) ** power), E(lambda x: x / (1 + 2 * x) ** power)],
            [E(lambda x: x / (1 + 2 * x) ** power), E(lambda x: x * x / (1 + 2 * x) ** power)],
        ])

    A = mat(f2, 3)
    b = f3 * np.array([E(lambda x: 1 / (1 + 2 * x) ** 4), E(lambda x: x / (1 + 2 * x) ** 4)])
    C = mat(f0, 1)
    return OracleQuantities(A, b, C), f0


def normal_model():
    def deriv(y, X, order):
        z = y - X[:, 0] * 0.0
        he = (1.0, z, z * z - 1.0, z * (z * z - 3.0))[order]
        return (-1) ** order * he * np.exp(-0.5 * z * z) * PHI0

    return ConditionalDensityModel(
        theta=np.array([0.0]),
        density_deriv=deriv,
        x_nodes=np.ones((1, 1)),
        x_weights=np.ones(1),
        sample_x=lambda rng, size: np.ones((size, 1)),
    )


def test_normal_model_oracle():
    o = oracle_quantities(normal_model())
    assert o.A == pytest.approx(np.array([[-PHI0]]), abs=1e-15)
    assert o.b == pytest.approx(np.array([0.0]), abs=1e-15)
    assert o.C == pytest.approx(np.array([[PHI0]]), abs=1e-15)


def test_symmetric_model_has_zero_bias():
    with pytest.raises(ZeroBias):
        optimal_bandwidth("gaussian", 100, oracle_quantities(normal_model()))


def test_pure_variance_when_bias_zero():
    o = oracle_quantities(normal_model())
    U, V = kernel_constants("biweight")
    # A = -phi0, C = phi0 -> tr(A^-1 C A^-1) = 1/phi0
    assert amse("biweight", 0.7, 50, o) == pytest.approx(V / PHI0 / (50 * 0.7**3), rel=1e-13)


def test_dgp_oracle_matches_scipy(scipy_oracle):
    ref, _ = scipy_oracle
    o = dgp_oracle(DGPSpec())
    np.testing.assert_allclose(o.A, ref.A, rtol=1e-7)
    np.testing.assert_allclose(o.b, ref.b, rtol=1e-7)
    np.testing.assert_allclose(o.C, ref.C, rtol=1e-10)


def test_c11_closed_form(scipy_oracle):
    _, f0 = scipy_oracle
    assert dgp_oracle(DGPSpec()).C[0, 0] == pytest.approx(f0 * math.log(3) / 2, rel=1e-12)


def test_dgp_oracle_frozen_values():
    o = dgp_oracle(DGPSpec())
    np.testing.assert_allclose(o.A, [[-1.6424, -0.4106], [-0.4106, -0.193753]], rtol=5e-5)
    np.testing.assert_allclose(o.b, [-0.0627277, -0.012063], rtol=5e-5)
    np.testing.assert_allclose(o.C, [[0.394487, 0.161834], [0.161834, 0.0986217]], rtol=5e-6)


def test_monte_carlo_matches_quadrature():
    model = conditional_model(DGPSpec())
    q = oracle_quantities(model)
    mc = oracle_quantities(model, method="monte_carlo", n_mc=1_000_000, seed=0)
    for a, b in ((q.A, mc.A), (q.b, mc.b), (q.C, mc.C)):
        np.testing.assert_allclose(b, a, rtol=0.01)


def test_not_negative_definite():
    model = normal_model()
    bad = ConditionalDensityModel(
        theta=model.theta,
        density_deriv=lambda y, X, k: -model.density_deriv(y, X, k),
        x_nodes=model.x_nodes, x_weights=model.x_weights)
    with pytest.raises(NotNegativeDefinite):
        oracle_quantities(bad)


def test_unknown_method():
    with pytest.raises(ValueError):
        oracle_quantities(normal_model(), method="magic")


def test_doubling_n_halves_variance():
    o = dgp_oracle(DGPSpec())
    U, V = kernel_constants("gaussian")
    bias2, _ = bias_variance_factors(o)
    h = 0.8
    bias_term = h**4 * U**2 * bias2 / 4
    v1 = amse("gaussian", h, 100, o) - bias_term
    v2 = amse("gaussian", h, 200, o) - bias_term
    assert v2 == pytest.approx(v1 / 2, rel=1e-12)


@pytest.mark.parametrize("name", list(KERNELS))
def test_bandwidth_power_law(name):
    o = dgp_oracle(DGPSpec())
    for n in (100, 400, 6400):
        ratio = optimal_bandwidth(name, 2 * n, o) / optimal_bandwidth(name, n, o)
        assert abs(ratio - 2 ** (-1 / 7)) <= 1e-12


@pytest.mark.parametrize("name", list(KERNELS))
def test_amse_stationary_at_optimum(name):
    o = dgp_oracle(DGPSpec())
    n = 400
    h = optimal_bandwidth(name, n, o)
    step = 1e-6 * h
    d = (amse(name, h + step, n, o) - amse(name, h - step, n, o)) / (2 * step)
    assert abs(d) <= 1e-6 * amse(name, h, n, o) / h
    assert amse(name, 0.9 * h, n, o) > amse(name, h, n, o) < amse(name, 1.1 * h, n, o)


def test_gaussian_biweight_bandwidth_ratio():
    o = dgp_oracle(DGPSpec())
    expected = ((1 / (4 * math.sqrt(math.pi))) / ((15 / 7) / (1 / 49))) ** (1 / 7)
    ratio = optimal_bandwidth("gaussian", 400, o) / optimal_bandwidth("biweight", 400, o)
    assert ratio == pytest.approx(expected, rel=1e-12)


def test_bandwidth_homogeneous_in_c():
    o = dgp_oracle(DGPSpec())
    scaled = OracleQuantities(o.A, o.b, 3.0 * o.C)
    ratio = optimal_bandwidth("biweight", 400, scaled) / optimal_bandwidth("biweight", 400, o)
    assert ratio == pytest.approx(3.0 ** (1 / 7), rel=1e-12)


@pytest.mark.parametrize("name", list(KERNELS))
def test_kernel_independent_constant(name):
    o = dgp_oracle(DGPSpec())
    for n in (100, 6400):
        h = optimal_bandwidth(name, n, o)
        assert abs(amse(name, h, n, o) / optimal_amse_scale(name, n, o) - EQ11_CONST) <= 1e-10


def test_optimal_amse_ranking_follows_criterion():
    o = dgp_oracle(DGPSpec())
    at_opt = {k: amse(k, optimal_bandwidth(k, 400, o), 400, o) for k in KERNELS}
    assert sorted(KERNELS, key=at_opt.get) == sorted(KERNELS, key=amse_criterion)


def test_pilot_theta_override_changes_oracle():
    model = conditional_model(DGPSpec())
    o = oracle_quantities(model, theta=model.theta + np.array([0.05, 0.0]))
    assert not np.allclose(o.A, oracle_quantities(model).A)


def test_bandwidth_validation():
    o = dgp_oracle(DGPSpec())
    with pytest.raises(ValueError):
        optimal_bandwidth("gaussian", 0, o)
    with pytest.raises(ValueError):
        amse("gaussian", -1.0, 10, o)
