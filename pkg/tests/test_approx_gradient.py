import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog, minimize

from rca.approx_gradient import (
    ApproxGDConfig,
    approx_gd,
    chebyshev_sigmoid,
    contrastive_logistic,
    logistic_gradient,
)
from rca.cumulants import ComponentCumulants
from rca.errors import DivergenceError, InvalidInputError, ShapeError

from oracles import sigmoid

GRID = np.linspace(-4, 4, 20001)



def quadratic(H_eigs, rng):
    Q, _ = np.linalg.qr(rng.normal(size=(len(H_eigs), len(H_eigs))))
    return Q @ np.diag(H_eigs) @ Q.T


def test_exact_gradient_converges():
    theta_star = np.array([1.0, -2.0, 0.5])
    theta, trace = approx_gd(lambda th: th - theta_star, np.zeros(3),
                             ApproxGDConfig(step_size=0.5, max_iters=100, grad_tol=0.0))
    assert np.sum((theta - theta_star) ** 2) < 1e-10
    assert trace.shape == (100,)


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_adversarial_bias_bound(eps):
    theta_star = np.array([0.3, -0.7])

    def grad(th):
        r = th - theta_star
        nr = np.linalg.norm(r)
        away = r / nr if nr > 0 else np.array([1.0, 0.0])
        return r - eps * away  # bias pushes away from the optimum

    theta, _ = approx_gd(grad, np.array([3.0, 3.0]),
                         ApproxGDConfig(step_size=0.5, max_iters=500, grad_tol=0.0))
    assert np.sum((theta - theta_star) ** 2) <= 8 * eps ** 2


def test_contraction_factor_on_trace(rng):
    H, mu = 4.0, 1.0
    Hm = quadratic([mu, H], rng)
    theta_star = np.array([1.0, 2.0])
    dists = []
    cfg = ApproxGDConfig(step_size=1 / 8, smoothness_H=H, strong_convexity_mu=mu,
                         max_iters=60, grad_tol=0.0)
    theta0 = np.array([-3.0, 5.0])
    _, trace = approx_gd(lambda th: Hm @ (th - theta_star), theta0, cfg,
                         callback=lambda it, th: dists.append(np.sum((th - theta_star) ** 2)))
    rate = 1 - mu / (4 * H)
    assert np.all(trace[1:] <= rate * trace[:-1] + 1e-300)
    d0 = np.sum((theta0 - theta_star) ** 2)
    for t, dist in enumerate(dists, start=1):
        assert dist <= rate ** t * d0 * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 20.0), st.floats(1e-3, 0.5))
def test_biased_quadratic_bound(seed, H, eps):
    rng = np.random.default_rng(seed)
    mu = 1.0
    Hm = quadratic([mu, H], rng)
    theta_star = rng.normal(size=2)
    b = rng.normal(size=2)
    b *= eps / np.linalg.norm(b)
    theta0 = theta_star + rng.normal(size=2)
    T = 200
    cfg = ApproxGDConfig(smoothness_H=H, strong_convexity_mu=mu, max_iters=T, grad_tol=0.0)
    theta, _ = approx_gd(lambda th: Hm @ (th - theta_star) + b, theta0, cfg)
    bound = 8 * eps ** 2 / mu ** 2 + (1 - mu / (4 * H)) ** T * np.sum((theta0 - theta_star) ** 2)
    assert np.sum((theta - theta_star) ** 2) <= bound


def test_divergence_reports_iteration():
    with pytest.raises(DivergenceError) as info:
        approx_gd(lambda th: np.array([np.inf]) if th[0] > 1 else -np.ones(1) * 10,
                  np.zeros(1), ApproxGDConfig(step_size=1.0))
    assert info.value.iteration == 1


def test_gradient_shape_checked():
    with pytest.raises(ShapeError):
        approx_gd(lambda th: np.ones(3), np.zeros(2), ApproxGDConfig())


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ApproxGDConfig(step_size=0.0)
    with pytest.raises(InvalidInputError):
        ApproxGDConfig(max_iters=0)
    assert ApproxGDConfig(smoothness_H=4.0).step == 1 / 8


# --------------------------------------------------------------------------
# sigmoid polynomial
# --------------------------------------------------------------------------

@pytest.mark.parametrize("degree", [3, 4, 5])
def test_chebyshev_odd_symmetry(degree):
    coef = chebyshev_sigmoid(degree)
    assert coef.shape == (degree + 1,)
    p = np.polynomial.Polynomial(coef)
    assert p(0.0) == 0.5
    np.testing.assert_allclose(p(GRID) + p(-GRID), 1.0, atol=1e-14)


def chebyshev_projection(degree, a):
    """Weighted least squares on dense Chebyshev nodes of ``[-a, a]``.

    With Chebyshev-node sampling the discrete least squares fit converges to
    the Chebyshev-series projection, independently of any truncation code.
    """
    k = np.arange(4000)
    nodes = a * np.cos((2 * k + 1) * np.pi / 8000)
    coef = C.chebfit(nodes / a, sigmoid(nodes), degree)
    return lambda z: C.chebval(z / a, coef)


@pytest.mark.parametrize("degree", [3, 5])
@pytest.mark.parametrize("window", [2.0, 4.0])
def test_chebyshev_error_matches_dense_grid_oracle(degree, window):
    grid = np.linspace(-window, window, 20001)
    p = np.polynomial.Polynomial(chebyshev_sigmoid(degree))
    oracle = chebyshev_projection(degree, 2.0)
    err = np.abs(p(grid) - sigmoid(grid)).max()
    err_oracle = np.abs(oracle(grid) - sigmoid(grid)).max()
    assert abs(err - err_oracle) < 1e-3


def minimax_error(degree, a, points=2001):
    """Best uniform error of an odd-plus-1/2 polynomial on a grid, by linear programming."""
    x = np.linspace(-a, a, points)
    g = sigmoid(x) - 0.5
    P = np.stack([x ** p for p in range(1, degree + 1, 2)], axis=1)
    m = P.shape[1]
    ones = np.ones((points, 1))
    A = np.vstack([np.hstack([P, -ones]), np.hstack([-P, -ones])])
    res = linprog(np.r_[np.zeros(m), 1.0], A_ub=A, b_ub=np.r_[g, -g],
                  bounds=[(None, None)] * m + [(0, None)])
    return res.x[-1]


@pytest.mark.parametrize("degree", [3, 5])
def test_chebyshev_error_is_near_minimax(degree):
    grid = np.linspace(-2, 2, 4001)
    err = np.abs(np.polynomial.Polynomial(chebyshev_sigmoid(degree))(grid) - sigmoid(grid)).max()
    best = minimax_error(degree, 2.0)
    assert best <= err + 1e-12
    assert err < 1.5 * best


def test_degree_four_equals_degree_three():
    np.testing.assert_allclose(chebyshev_sigmoid(4)[:4], chebyshev_sigmoid(3), atol=1e-14)


def test_chebyshev_rejects_degree():
    with pytest.raises(InvalidInputError):
        chebyshev_sigmoid(2)


# --------------------------------------------------------------------------
# logistic regression
# --------------------------------------------------------------------------

def logistic_mle(X, y):
    def nll(b):
        z = X @ b
        return np.mean(np.logaddexp(0, z) - y * z)

    def grad(b):
        return X.T @ (sigmoid(X @ b) - y) / len(y)

    return minimize(nll, np.zeros(X.shape[1]), jac=grad, method="BFGS").x


def test_logistic_matches_mle_without_perturbation():
    rng = np.random.default_rng(8)
    n, d = 10_000, 5
    X = rng.uniform(-1, 1, size=(n, d))
    beta = np.array([1.0, -0.5, 0.8, 0.0, 0.3])
    y = (rng.random(n) < sigmoid(X @ beta)).astype(float)
    comp = ComponentCumulants.from_samples(X, 4)
    res, trace = contrastive_logistic(comp, (X * y[:, None]).mean(0))
    assert np.linalg.norm(res.beta - logistic_mle(X, y)) < 0.1
    assert trace[-1] < trace[0]


def test_logistic_null_model():
    rng = np.random.default_rng(9)
    n, d = 20_000, 4
    X = rng.uniform(-1, 1, size=(n, d))
    y = (rng.random(n) < 0.5).astype(float)
    comp = ComponentCumulants.from_samples(X, 4)
    res, _ = contrastive_logistic(comp, (X * y[:, None]).mean(0))
    assert np.linalg.norm(res.beta) < 0.15


def test_gradient_at_zero_is_label_moment_minus_half_mean(rng):
    X = rng.uniform(-1, 1, size=(100, 3)) + 0.1
    comp = ComponentCumulants.from_samples(X, 4)
    b = rng.normal(size=3)
    g = logistic_gradient(comp, b, chebyshev_sigmoid(3), np.zeros(3))
    np.testing.assert_allclose(g, -(b - 0.5 * X.mean(0)), atol=1e-12)


def test_polynomial_gradient_on_raw_samples(rng):
    X = rng.uniform(-1, 1, size=(300, 3))
    b = rng.normal(size=3)
    theta = rng.normal(size=3)
    coef = chebyshev_sigmoid(5)
    comp = ComponentCumulants.from_samples(X, 6)
    p = np.polynomial.Polynomial(coef)
    direct = -(b - (X * p(X @ theta)[:, None]).mean(0))
    np.testing.assert_allclose(logistic_gradient(comp, b, coef, theta), direct, atol=1e-9)


def test_logistic_shape_check():
    comp = ComponentCumulants(mean=np.zeros(2), cumulants={2: np.eye(2), 4: np.zeros((2,) * 4)})
    with pytest.raises(ShapeError):
        contrastive_logistic(comp, np.zeros(3))
