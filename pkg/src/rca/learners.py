"""Method-of-moments learners that run on component cumulants.

Every learner takes either a :class:`~rca.cumulants.ComponentCumulants` or a
contrastive extraction (in which case the foreground component ``S1`` is
used).  Feeding the cumulants of directly observed samples gives the
ordinary estimator, so the same code path serves every comparison arm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cumulants import ComponentCumulants
from .errors import ConvergenceError, InvalidInputError, NumericError, RankError, ShapeError
from .tensor_core import DEFAULT_RANK_TOL, outer, pinv, symmetrize

EIGENGAP_TOL = 1e-8
MIN_WEIGHT_FRACTION = 0.1


def _component(source) -> ComponentCumulants:
    if isinstance(source, ComponentCumulants):
        return source
    if hasattr(source, "component"):
        return source.component(1)
    raise InvalidInputError(f"cannot read cumulants from {type(source).__name__}")


def _finite(T, what):
    if not np.all(np.isfinite(T)):
        raise NumericError(f"{what} has non-finite entries")
    return T


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-14)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


# --------------------------------------------------------------------------
# PCA
# --------------------------------------------------------------------------

@dataclass
class PcaResult:
    top_eigenvector: np.ndarray
    eigenvalue: float
    eigengap: float
    identifiable: bool


def contrastive_pca(source) -> PcaResult:
    """Top eigenvector of the (symmetrized) covariance of ``S1``.

    The eigenvector is returned with its first nonzero coordinate positive.
    An eigengap below ``1e-8`` (relative to the top eigenvalue when that is
    larger than one) marks the direction as unidentifiable.
    """
    k2 = _finite(_component(source).cumulant(2), "covariance")
    C = 0.5 * (k2 + k2.T)
    w, Q = np.linalg.eigh(C)
    gap = float(w[-1] - w[-2]) if w.size > 1 else float("inf")
    scale = max(1.0, abs(float(w[-1])))
    v = _canonical_sign(Q[:, -1] / np.linalg.norm(Q[:, -1]))
    return PcaResult(top_eigenvector=v, eigenvalue=float(w[-1]), eigengap=gap,
                     identifiable=bool(gap >= EIGENGAP_TOL * scale))


# --------------------------------------------------------------------------
# least squares regression
# --------------------------------------------------------------------------

@dataclass
class RegressionResult:
    beta: np.ndarray


def second_moment(source) -> np.ndarray:
    """``E[S S^T] = kappa_2 + mean mean^T`` for the foreground component."""
    comp = _component(source)
    m = comp.cumulant(1)
    k2 = comp.cumulant(2)
    return 0.5 * (k2 + k2.T) + np.outer(m, m)


def contrastive_lsr(source, xy_moment, rank_tol: float = DEFAULT_RANK_TOL,
                    allow_singular: bool = False) -> RegressionResult:
    """Least squares coefficients ``pinv(E[S S^T]) E[Y S]``.

    ``xy_moment`` is ``E[Y U]``; since ``Y`` is independent of the
    background it also equals ``E[Y S1]`` when ``S2`` has mean zero.
    ``allow_singular=True`` returns the minimum-norm solution instead of
    raising on a singular moment matrix (useful for projected data).
    """
    M2 = _finite(second_moment(source), "second moment")
    b = np.asarray(xy_moment, dtype=np.float64)
    if b.shape != (M2.shape[0],):
        raise ShapeError(f"E[YX] has shape {b.shape}, expected ({M2.shape[0]},)")
    s = np.linalg.svd(M2, compute_uv=False)
    if not allow_singular and (s[0] <= 0 or s[-1] <= rank_tol * s[0]):
        raise RankError(f"second moment matrix is singular (sigma_min/sigma_max = "
                        f"{s[-1] / s[0] if s[0] > 0 else 0.0:.3g})")
    return RegressionResult(beta=pinv(M2, rank_tol) @ b)


# --------------------------------------------------------------------------
# spherical Gaussian mixture
# --------------------------------------------------------------------------

@dataclass
class GmmResult:
    centers: np.ndarray  # (k, d)
    weights: np.ndarray  # (k,)
    sigma2: float
    residual: float
    converged: bool


def _khatri_rao(B, C):
    return np.einsum("jr,kr->jkr", B, C).reshape(-1, B.shape[1])


def _cp_als(T, k, iters, tol, rng):
    d = T.shape[0]
    X1 = T.reshape(d, -1)
    X2 = np.moveaxis(T, 1, 0).reshape(d, -1)
    X3 = np.moveaxis(T, 2, 0).reshape(d, -1)
    A, B, C = (rng.standard_normal((d, k)) for _ in range(3))
    norm_T = np.linalg.norm(T)
    prev = np.inf
    res = np.inf
    converged = False
    for _ in range(iters):
        A = X1 @ _khatri_rao(B, C) @ np.linalg.pinv((B.T @ B) * (C.T @ C))
        B = X2 @ _khatri_rao(A, C) @ np.linalg.pinv((A.T @ A) * (C.T @ C))
        C = X3 @ _khatri_rao(A, B) @ np.linalg.pinv((A.T @ A) * (B.T @ B))
        # keep the scale in A so B and C stay unit-norm
        nb = np.linalg.norm(B, axis=0)
        nc = np.linalg.norm(C, axis=0)
        nb[nb == 0] = 1.0
        nc[nc == 0] = 1.0
        B, C = B / nb, C / nc
        A = A * (nb * nc)
        approx = np.einsum("ir,jr,kr->ijk", A, B, C)
        res = np.linalg.norm(T - approx) / norm_T if norm_T > 0 else 0.0
        if not np.isfinite(res):
            break
        if abs(prev - res) < tol * max(prev, 1e-300) or res < tol:
            converged = True
            break
        prev = res
    return A, B, C, float(res), converged


def hsu_kakade_tensor(source, k: int):
    """Noise-corrected third moment ``sum_r w_r mu_r^{(x)3}`` and ``sigma^2``.

    ``sigma^2`` is the smallest covariance eigenvalue; the correction
    subtracts ``sigma^2`` times the symmetrization of ``mean (x) e_i (x) e_i``.
    """
    comp = _component(source)
    m = comp.cumulant(1)
    d = m.shape[0]
    k2 = comp.cumulant(2)
    k2 = 0.5 * (k2 + k2.T)
    # the between-center covariance has rank <= k-1 < d, so the smallest
    # eigenvalue isolates the spherical noise
    sigma2 = float(np.linalg.eigvalsh(k2)[0])
    M3 = symmetrize(comp.moment(3))
    I = np.eye(d)
    corr = (np.einsum("i,jk->ijk", m, I) + np.einsum("j,ik->ijk", m, I)
            + np.einsum("k,ij->ijk", m, I))
    M2 = k2 + np.outer(m, m) - sigma2 * I
    return M3 - sigma2 * corr, M2, sigma2


def contrastive_gmm(source, k: int, ls_iters: int = 200, restarts: int = 10,
                    tol: float = 1e-8, seed=0) -> GmmResult:
    """Spherical Gaussian mixture centers from the first three moments.

    Decomposes the noise-corrected third moment with rank-``k`` alternating
    least squares (``restarts`` random starts, best residual kept), then
    reads weights from the corrected second moment.

    Raises
    ------
    ConvergenceError
        If no restart meets the relative-change tolerance within
        ``ls_iters`` sweeps.  ``best_residual`` carries the best fit found.
    """
    comp = _component(source)
    d = comp.dim
    if not 1 <= k <= d:
        raise InvalidInputError(f"need 1 <= k <= d, got k={k}, d={d}")
    if ls_iters < 1 or restarts < 1:
        raise InvalidInputError("ls_iters and restarts must be positive")
    T, M2, sigma2 = hsu_kakade_tensor(comp, k)
    _finite(T, "third moment")
    if k == 1:
        return GmmResult(centers=comp.cumulant(1)[None, :].copy(), weights=np.ones(1),
                         sigma2=sigma2, residual=0.0, converged=True)

    rng = np.random.default_rng(seed)
    best = best_converged = None
    for _ in range(restarts):
        fit = _cp_als(T, k, ls_iters, tol, rng)
        if not np.isfinite(fit[3]):
            continue
        if best is None or fit[3] < best[3]:
            best = fit
        if fit[4] and (best_converged is None or fit[3] < best_converged[3]):
            best_converged = fit
    if best_converged is not None:
        best = best_converged
    if best is None:
        raise ConvergenceError("alternating least squares diverged on every restart",
                               best_residual=float("inf"))
    A, B, C, res, converged = best
    result = _read_components(A, B, C, M2, sigma2, res, converged)
    if not converged:
        raise ConvergenceError(
            f"alternating least squares did not converge in {ls_iters} sweeps "
            f"(best relative residual {res:.3g})", best_residual=res, best_result=result)
    return result


def _read_components(A, B, C, M2, sigma2, res, converged) -> GmmResult:
    d, k = A.shape
    # symmetric components lam_r v_r^{(x)3}
    V = np.empty((d, k))
    lam = np.empty(k)
    for r in range(k):
        a, b, c = A[:, r], B[:, r], C[:, r]
        na = np.linalg.norm(a)
        sb = 1.0 if a @ b >= 0 else -1.0
        sc = 1.0 if a @ c >= 0 else -1.0
        v = a / na + sb * b + sc * c
        V[:, r] = v / np.linalg.norm(v)
        lam[r] = na * sb * sc
    # corrected second moment = sum_r c_r v_r v_r^T with c_r = w_r |mu_r|^2
    design = np.stack([np.outer(V[:, r], V[:, r]).ravel() for r in range(k)], axis=1)
    c, *_ = np.linalg.lstsq(design, M2.ravel(), rcond=None)
    centers = np.empty((k, d))
    weights = np.empty(k)
    for r in range(k):
        w = c[r] ** 3 / lam[r] ** 2 if c[r] > 0 and lam[r] != 0 else 0.0
        if MIN_WEIGHT_FRACTION / k <= w <= 1.0:
            weights[r] = w
            norm = abs(lam[r]) / c[r]
        else:
            # the two moment equations disagree (noise); fall back to an
            # equal-weight reading of the third moment alone
            weights[r] = 1.0 / k
            norm = np.cbrt(abs(lam[r]) * k)
        centers[r] = np.sign(lam[r]) * norm * V[:, r]
    weights = np.clip(weights, 0.0, None)
    total = weights.sum()
    weights = weights / total if total > 0 else np.full(k, 1.0 / k)
    return GmmResult(centers=centers, weights=weights, sigma2=sigma2, residual=res,
                     converged=converged)


def match_centers(estimated, true) -> np.ndarray:
    """Permutation ``p`` minimizing ``sum_r |estimated[p[r]] - true[r]|^2``."""
    estimated = np.atleast_2d(estimated)
    true = np.atleast_2d(true)
    cost = ((true[:, None, :] - estimated[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(true.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def center_mse(estimated, true) -> float:
    """Mean squared coordinate error after optimal center matching."""
    estimated = np.atleast_2d(estimated)
    true = np.atleast_2d(true)
    perm = match_centers(estimated, true)
    return float(np.mean((estimated[perm] - true) ** 2))


def exact_gmm_moments(centers, weights, sigma2) -> ComponentCumulants:
    """Mean and cumulants (orders 2, 3) of a spherical Gaussian mixture."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    w = np.asarray(weights, dtype=np.float64)
    d = centers.shape[1]
    m = w @ centers
    M2 = sum(wr * np.outer(mu, mu) for wr, mu in zip(w, centers)) + sigma2 * np.eye(d)
    I = np.eye(d)
    corr = (np.einsum("i,jk->ijk", m, I) + np.einsum("j,ik->ijk", m, I)
            + np.einsum("k,ij->ijk", m, I))
    M3 = sum(wr * outer(mu, mu, mu) for wr, mu in zip(w, centers)) + sigma2 * corr
    k2 = M2 - np.outer(m, m)
    k3 = (M3 - symmetrize(np.einsum("ij,k->ijk", M2, m)) * 3
          + 2 * outer(m, m, m))
    return ComponentCumulants(mean=m, cumulants={2: k2, 3: k3})
