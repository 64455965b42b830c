"""Two-view rich component analysis.

Observations come in row-aligned pairs ``U = S1 + S2`` and ``V = A S2 + S3``
with independent latent components.  The shared map ``A`` is recovered from
fourth-order cross-cumulants and then every cumulant of the three components
is extracted by subtraction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cumulants import (
    MAX_ORDER,
    ComponentCumulants,
    _as_samples,
    cross_cumulant,
    cumulant_entries,
)
from .errors import (
    AlignmentError,
    DegenerateComponentError,
    DegenerateMapError,
    InvalidOrderError,
    ShapeError,
)
from .tensor_core import (
    DEFAULT_RANK_TOL,
    multilinear_apply,
    numerical_rank,
    pinv,
    singular_values,
    spectral_norm,
    unfold,
)

DEGENERATE_TOL = 1e-6


@dataclass
class ConditioningReport:
    """Quantities that govern how well ``A`` and the cumulants are estimated.

    ``sigma4`` is the smallest singular value of the unfolded
    ``kappa(V, U, ..., U)``, ``sigmaA``/``spectral_A`` the extreme singular
    values of the estimated map and ``radius_bound`` the largest sample norm.
    """

    sigma4: float
    sigmaA: float = float("nan")
    spectral_A: float = float("nan")
    radius_bound: float = float("nan")
    n_samples: int = 0
    rank_warning: bool = False

    def as_dict(self) -> dict:
        return {
            "sigma4": self.sigma4,
            "sigmaA": self.sigmaA,
            "spectral_A": self.spectral_A,
            "radius_bound": self.radius_bound,
            "n_samples": self.n_samples,
            "rank_warning": self.rank_warning,
        }


@dataclass
class ContrastiveExtraction:
    A_hat: np.ndarray
    components: dict = field(default_factory=dict)
    diagnostics: ConditioningReport | None = None

    def component(self, j: int) -> ComponentCumulants:
        return self.components[j]

    def cumulant(self, j: int, order: int) -> np.ndarray:
        return self.components[j].cumulant(order)


def _check_pair(U, V):
    U, V = _as_samples(U), _as_samples(V)
    if U.shape[0] != V.shape[0]:
        raise AlignmentError(f"U has {U.shape[0]} rows but V has {V.shape[0]}")
    if V.shape[1] < U.shape[1]:
        raise ShapeError(
            f"V must have at least the dimension of U ({V.shape[1]} < {U.shape[1]})")
    return U, V


# --------------------------------------------------------------------------
# recovering A
# --------------------------------------------------------------------------

def estimate_A_from_cumulants(k_v_u, k_v_v, rank_tol: float = DEFAULT_RANK_TOL,
                              degenerate_tol: float = DEGENERATE_TOL):
    """Solve ``unfold(k_v_v) = unfold(k_v_u) A^T`` for ``A``.

    ``k_v_u`` is ``kappa(V, U, ..., U)`` and ``k_v_v`` is
    ``kappa(V, U, ..., U, V)`` (same leading modes, last mode swapped).
    Works for exact population tensors as well as estimates.

    Returns
    -------
    A : (d_V, d_U) array
    sigma : float
        Smallest singular value of ``unfold(k_v_u)``.
    """
    M = unfold(k_v_u)
    N = unfold(k_v_v)
    if M.shape[0] != N.shape[0]:
        raise ShapeError("cumulant unfoldings have different row counts")
    s = singular_values(M)
    sigma = float(s[-1])
    if s[0] == 0 or sigma < degenerate_tol * s[0]:
        raise DegenerateComponentError(
            f"shared component looks Gaussian or absent: sigma_min={sigma:.3g}, "
            f"norm={s[0]:.3g}")
    At = pinv(M, rank_tol) @ N
    return At.T, sigma


def estimate_A(U, V, rank_tol: float = DEFAULT_RANK_TOL, order: int = 4,
               degenerate_tol: float = DEGENERATE_TOL):
    """Estimate the shared map ``A`` from paired samples.

    Uses ``A^T = unfold(kappa(V, U, U, U))^+ unfold(kappa(V, U, U, V))``;
    ``order=3`` switches to third-order cumulants (useful only for skewed
    shared components).

    Returns
    -------
    A_hat : (d_V, d_U) array
    report : ConditioningReport
    """
    U, V = _check_pair(U, V)
    if order not in (3, 4):
        raise InvalidOrderError("A is estimated from order 3 or 4 cumulants")
    lead = [V] + [U] * (order - 2)
    k_v_u = cross_cumulant(lead + [U])
    k_v_v = cross_cumulant(lead + [V])
    A_hat, sigma = estimate_A_from_cumulants(k_v_u, k_v_v, rank_tol, degenerate_tol)
    sv = singular_values(A_hat)
    radius = float(max(np.linalg.norm(U, axis=1).max(), np.linalg.norm(V, axis=1).max()))
    rank_warning = bool(sigma < rank_tol * spectral_norm(unfold(k_v_u)))
    if rank_warning:
        warnings.warn("unfolded cross-cumulant is numerically rank deficient", RuntimeWarning)
    report = ConditioningReport(
        sigma4=sigma, sigmaA=float(sv[-1]), spectral_A=float(sv[0]),
        radius_bound=radius, n_samples=U.shape[0], rank_warning=rank_warning,
    )
    return A_hat, report


# --------------------------------------------------------------------------
# extracting cumulants
# --------------------------------------------------------------------------

def _check_map(A, d_u: int, d_v: int, rank_tol: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (d_v, d_u):
        raise ShapeError(f"A must be {d_v} x {d_u}, got {A.shape}")
    if numerical_rank(A, rank_tol) < d_u:
        raise DegenerateMapError("A is not of full column rank")
    return A


def components_from_cross_cumulants(A, k_u, k_uv, k_v, k_vu, rank_tol=DEFAULT_RANK_TOL):
    """Component cumulants of one order from the four cross-cumulants.

    Parameters
    ----------
    k_u, k_uv : kappa_t(U, ..., U) and kappa_t(U, ..., U, V)
    k_v, k_vu : kappa_t(V, ..., V) and kappa_t(U, V, ..., V)

    Returns ``{1: kappa_t(S1), 2: kappa_t(S2), 3: kappa_t(S3)}``.  Only the
    S1/S2 pair or only S3 may be requested by passing ``None`` for the
    other tensors.
    """
    t = np.ndim(k_u) if k_u is not None else np.ndim(k_v)
    A = np.asarray(A, dtype=np.float64)
    out = {}
    if k_u is not None:
        # kappa(U, ..., U, A^+ V) = kappa(U, ..., U, V)(I, ..., I, (A^+)^T)
        k2 = multilinear_apply(k_uv, [None] * (t - 1) + [pinv(A, rank_tol).T])
        out[2] = k2
        out[1] = k_u - k2
    if k_v is not None:
        # kappa(A U, V, ..., V) = kappa(U, V, ..., V)(A^T, I, ..., I)
        out[3] = k_v - multilinear_apply(k_vu, [A.T] + [None] * (t - 1))
    return out


def _component_means(U, V, A, s2_mean):
    d_u = U.shape[1]
    m2 = np.zeros(d_u) if s2_mean is None else np.asarray(s2_mean, dtype=np.float64)
    return {1: U.mean(axis=0) - m2, 2: m2, 3: V.mean(axis=0) - A @ m2}


def _check_t_max(t_max):
    if not 2 <= t_max <= MAX_ORDER:
        raise InvalidOrderError(f"t_max must be in 2..{MAX_ORDER}, got {t_max}")


def extract_cumulants(U, V, A, t_max: int = 4, s2_mean=None,
                      rank_tol: float = DEFAULT_RANK_TOL,
                      components=(1, 2, 3)) -> ContrastiveExtraction:
    """Cumulants of orders ``2..t_max`` for S1, S2 and S3.

    ``kappa_t(S2) = kappa_t(U, ..., U, A^+ V)``,
    ``kappa_t(S1) = kappa_t(U) - kappa_t(S2)`` and
    ``kappa_t(S3) = kappa_t(V) - kappa_t(A U, V, ..., V)``.

    Means are not identifiable from the two views; the mean of S2 is taken
    as ``s2_mean`` (zero by default) and the other two follow from it.
    """
    U, V = _check_pair(U, V)
    _check_t_max(t_max)
    A = _check_map(A, U.shape[1], V.shape[1], rank_tol)
    want_s12 = bool({1, 2} & set(components))
    want_s3 = 3 in components
    per_order = {}
    for t in range(2, t_max + 1):
        per_order[t] = components_from_cross_cumulants(
            A,
            cross_cumulant([U] * t) if want_s12 else None,
            cross_cumulant([U] * (t - 1) + [V]) if want_s12 else None,
            cross_cumulant([V] * t) if want_s3 else None,
            cross_cumulant([U] + [V] * (t - 1)) if want_s3 else None,
            rank_tol,
        )
    return _assemble(U, V, A, per_order, s2_mean, components)


def _assemble(U, V, A, per_order, s2_mean, components):
    means = _component_means(U, V, A, s2_mean)
    out = {}
    for j in components:
        out[j] = ComponentCumulants(
            mean=means[j],
            cumulants={t: per_order[t][j] for t in sorted(per_order)},
            n_samples=U.shape[0],
        )
    return ContrastiveExtraction(A_hat=A, components=out)


def extract_cumulants_sum_identity(U, V, A, t_max: int = 4, s2_mean=None,
                                   rank_tol: float = DEFAULT_RANK_TOL) -> ContrastiveExtraction:
    """Same quantities through auto-cumulants of sums only.

    ``kappa_t(S2) = [kappa_t(U + W) - kappa_t(U) - kappa_t(W)] / (2^t - 2)``
    with ``W = A^+ V``, and the analogous formula with ``A U + V`` for S3.
    """
    U, V = _check_pair(U, V)
    _check_t_max(t_max)
    A = _check_map(A, U.shape[1], V.shape[1], rank_tol)
    W = V @ pinv(A, rank_tol).T
    AU = U @ A.T
    per_order = {}
    for t in range(2, t_max + 1):
        denom = 2.0 ** t - 2.0
        k_u = cross_cumulant([U] * t)
        k_v = cross_cumulant([V] * t)
        s2 = (cross_cumulant([U + W] * t) - k_u - cross_cumulant([W] * t)) / denom
        s3_shared = (cross_cumulant([AU + V] * t) - cross_cumulant([AU] * t) - k_v) / denom
        per_order[t] = {1: k_u - s2, 2: s2, 3: k_v - s3_shared}
    return _assemble(U, V, A, per_order, s2_mean, (1, 2, 3))


def rca_extract(U, V, t_max: int = 4, s2_mean=None, rank_tol: float = DEFAULT_RANK_TOL,
                order: int = 4, components=(1, 2, 3)) -> ContrastiveExtraction:
    """Estimate ``A`` and extract component cumulants in one call.

    Both views are centered empirically before any cumulant is formed.
    """
    A_hat, report = estimate_A(U, V, rank_tol=rank_tol, order=order)
    ext = extract_cumulants(U, V, A_hat, t_max=t_max, s2_mean=s2_mean,
                            rank_tol=rank_tol, components=components)
    ext.diagnostics = report
    return ext


class ContrastiveEntrySource:
    """Lazily computed cumulant entries of S1 from paired samples.

    Computes only the requested entries, which keeps per-batch work linear
    in the number of entries instead of ``d^t``.

    Parameters
    ----------
    U : (n, d) array
    W : (n, d) array
        ``A^+ V`` for the same rows.
    s2_mean : array or None
    """

    def __init__(self, U, W, s2_mean=None):
        self.U = _as_samples(U)
        self.W = _as_samples(W)
        if self.U.shape != self.W.shape:
            raise ShapeError("U and A^+ V must have the same shape")
        self.s2_mean = np.zeros(self.U.shape[1]) if s2_mean is None else np.asarray(s2_mean)

    @classmethod
    def from_views(cls, U, V, A, s2_mean=None, rank_tol=DEFAULT_RANK_TOL):
        U, V = _check_pair(U, V)
        A = _check_map(A, U.shape[1], V.shape[1], rank_tol)
        return cls(U, V @ pinv(A, rank_tol).T, s2_mean)

    def subset(self, rows) -> "ContrastiveEntrySource":
        return ContrastiveEntrySource(self.U[rows], self.W[rows], self.s2_mean)

    def entries(self, index) -> np.ndarray:
        index = np.atleast_2d(np.asarray(index, dtype=np.intp))
        r = index.shape[1]
        if r == 1:
            return (self.U.mean(axis=0) - self.s2_mean)[index[:, 0]]
        return (cumulant_entries([self.U] * r, index)
                - cumulant_entries([self.U] * (r - 1) + [self.W], index))
