"""Gradient descent with approximate gradients built from cumulants.

When a log-likelihood gradient is (approximately) a polynomial in the data,
its expectation only needs moments of the foreground component, and those
can be rebuilt from extracted cumulants.  The resulting gradient is biased by
the polynomial approximation; for strongly convex objectives the iterates
still settle in a ball of radius ``O(eps / mu)`` around the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .cumulants import ComponentCumulants, debiased_projected_moment
from .errors import DivergenceError, InvalidInputError, ShapeError
from .learners import RegressionResult, _component, second_moment

SIGMOID_INTERVAL = (-2.0, 2.0)
_COEF_DROP = 1e-12
_SERIES_DEGREE = 64  # coefficients decay about 2x per degree, so 64 terms reach round-off


@dataclass
class ApproxGDConfig:
    """Settings for :func:`approx_gd`.

    ``step_size=None`` means ``1 / (2 H)``.
    """

    step_size: Optional[float] = None
    smoothness_H: float = 1.0
    strong_convexity_mu: float = 1.0
    max_iters: int = 1000
    grad_tol: float = 1e-10
    poly_degree: int = 4

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise InvalidInputError(f"step_size must be positive, got {self.step_size}")
        if not self.smoothness_H > 0:
            raise InvalidInputError("smoothness_H must be positive")
        if not self.strong_convexity_mu > 0:
            raise InvalidInputError("strong_convexity_mu must be positive")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.grad_tol < 0:
            raise InvalidInputError("grad_tol must be nonnegative")

    @property
    def step(self) -> float:
        return self.step_size if self.step_size is not None else 0.5 / self.smoothness_H


def approx_gd(grad: Callable, theta0, config: ApproxGDConfig,
              callback: Optional[Callable] = None):
    """Minimize with ``theta <- theta - step * grad(theta)``.

    Stops after ``config.max_iters`` steps or when the gradient norm drops
    below ``config.grad_tol``.

    Returns
    -------
    theta : ndarray
    trace : ndarray
        Gradient norm at every evaluated iterate.

    Raises
    ------
    DivergenceError
        When the gradient or the iterate becomes non-finite.
    """
    theta = np.array(theta0, dtype=np.float64)
    step = config.step
    norms = []
    for it in range(int(config.max_iters)):
        with np.errstate(over="ignore", invalid="ignore"):
            g = np.asarray(grad(theta), dtype=np.float64)
        if g.shape != theta.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient at iteration {it}", iteration=it)
        gn = float(np.linalg.norm(g))
        norms.append(gn)
        if gn < config.grad_tol:
            break
        theta = theta - step * g
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"non-finite iterate at iteration {it}", iteration=it)
        if callback is not None:
            callback(it, theta)
    return theta, np.asarray(norms)


# --------------------------------------------------------------------------
# logistic regression
# --------------------------------------------------------------------------

def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def chebyshev_sigmoid(degree: int) -> np.ndarray:
    """Power-basis coefficients ``(c_0, ..., c_degree)`` approximating the sigmoid.

    The polynomial is the Chebyshev series of the sigmoid on ``[-2, 2]``
    truncated after ``T_degree`` (the orthogonal projection onto degree
    ``degree`` polynomials under the Chebyshev weight).  Because
    ``sigmoid - 1/2`` is odd, even coefficients beyond ``c_0`` vanish and are
    set to exactly zero; degrees 3 and 4 give the same polynomial.

    Degree 3 gives ``0.5 + 0.2436 z - 0.0136 z^3``.  For bounded data the
    arguments ``theta^T x`` mostly fall inside the interval; outside it the
    polynomial is extrapolated and its error is part of the gradient bias.
    """
    if degree not in (3, 4, 5):
        raise InvalidInputError(f"degree must be 3, 4 or 5, got {degree}")
    series = Chebyshev.interpolate(sigmoid, _SERIES_DEGREE, domain=list(SIGMOID_INTERVAL))
    coef = series.truncate(degree + 1).convert(kind=Polynomial).coef
    coef = np.concatenate([coef, np.zeros(degree + 1 - coef.size)])
    coef[0] = 0.5
    coef[2::2] = 0.0
    return coef


def logistic_gradient(source, xy_moment, coef, theta) -> np.ndarray:
    """Approximate gradient of the negative mean log-likelihood.

    ``-(E[Y X] - sum_k c_k E[X (theta^T X)^k])`` with each projected moment
    rebuilt from the cumulants of the foreground component.
    """
    total = -np.asarray(xy_moment, dtype=np.float64).copy()
    for power, c in enumerate(coef):
        if abs(c) < _COEF_DROP:
            continue
        total += c * debiased_projected_moment(source, theta, power)
    return total


def contrastive_logistic(source, xy_moment, config: Optional[ApproxGDConfig] = None,
                         theta0=None):
    """Logistic regression on the foreground component.

    Parameters
    ----------
    source : ComponentCumulants or extraction
        Needs cumulants up to order ``poly_degree + 1``, except that zero
        polynomial coefficients are skipped (degree 4 only needs order 4).
    xy_moment : (d,) array
        ``E[Y U]``.  Labels are independent of the background, so no
        correction is applied beyond the background mean assumed zero.
    config : ApproxGDConfig, optional
        ``step_size=None`` uses ``1 / (2 H)`` with ``H = c_1 lambda_max(E[X X^T])``.

    Returns
    -------
    (RegressionResult, trace)
    """
    comp: ComponentCumulants = _component(source)
    b = np.asarray(xy_moment, dtype=np.float64)
    if b.shape != (comp.dim,):
        raise ShapeError(f"E[YX] has shape {b.shape}, expected ({comp.dim},)")
    if config is None:
        config = ApproxGDConfig(max_iters=2000, grad_tol=1e-9)
    coef = chebyshev_sigmoid(config.poly_degree)
    if config.step_size is None:
        H = coef[1] * float(np.linalg.eigvalsh(second_moment(comp))[-1])
        config = ApproxGDConfig(step_size=0.5 / max(H, 1e-12),
                                smoothness_H=max(H, 1e-12),
                                strong_convexity_mu=config.strong_convexity_mu,
                                max_iters=config.max_iters, grad_tol=config.grad_tol,
                                poly_degree=config.poly_degree)
    theta0 = np.zeros(comp.dim) if theta0 is None else theta0
    theta, trace = approx_gd(lambda th: logistic_gradient(comp, b, coef, th), theta0, config)
    return RegressionResult(beta=theta), trace
