"""Empirical cross-cumulants, moment/cumulant conversion and projected moments.

Cumulants are estimated with the plug-in estimator: empirical moments are
substituted into the partition formula

    kappa_t(X_1, ..., X_t) = sum_pi (|pi| - 1)! (-1)^(|pi| - 1) prod_{B in pi} E[prod_{i in B} X_i]

with tensor products in place of scalar products (mode order preserved).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from string import ascii_letters
from typing import Sequence

import numpy as np

from .errors import AlignmentError, InvalidInputError, InvalidOrderError, ShapeError
from .tensor_core import contract_vector

MAX_ORDER = 6
_CHUNK_ENTRIES = 2_000_000


@lru_cache(maxsize=None)
def set_partitions(t: int) -> tuple:
    """All partitions of ``range(t)``; blocks and their members are sorted.

    >>> len(set_partitions(4)), len(set_partitions(5))
    (15, 52)
    """
    if t == 0:
        return ((),)
    out = []
    for part in set_partitions(t - 1):
        # element t-1 joins an existing block or opens its own
        for b in range(len(part)):
            out.append(part[:b] + (part[b] + (t - 1,),) + part[b + 1:])
        out.append(part + ((t - 1,),))
    return tuple(tuple(sorted(p, key=lambda blk: blk[0])) for p in out)


def partition_coefficient(n_blocks: int) -> int:
    return (-1) ** (n_blocks - 1) * factorial(n_blocks - 1)


def _as_samples(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError(f"sample matrix must be n x d with n >= 1, got {X.shape}")
    return X


def _check_inputs(inputs) -> list[np.ndarray]:
    inputs = [_as_samples(X) for X in inputs]
    t = len(inputs)
    if t < 1:
        raise InvalidOrderError("need at least one variable")
    if t > MAX_ORDER:
        raise InvalidOrderError(f"cumulant order {t} exceeds the cap of {MAX_ORDER}")
    n = inputs[0].shape[0]
    if any(X.shape[0] != n for X in inputs):
        raise AlignmentError(
            "inputs have different sample counts: " + str([X.shape[0] for X in inputs])
        )
    return inputs


def _dedupe(inputs, center: bool):
    """Centered copies plus a key per input; identical arrays share a key."""
    uniq, keys, seen = [], [], {}
    for X in inputs:
        k = seen.get(id(X))
        if k is None:
            k = len(uniq)
            seen[id(X)] = k
            uniq.append(X - X.mean(axis=0) if center else X)
        keys.append(k)
    return uniq, keys


def empirical_moment(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """``E[X_1 (x) ... (x) X_k]`` over aligned rows, chunked to bound memory."""
    n = arrays[0].shape[0]
    if len(arrays) == 1:
        return arrays[0].mean(axis=0)
    dims = [X.shape[1] for X in arrays]
    width = int(np.prod(dims[:-1]))
    step = max(1, _CHUNK_ENTRIES // max(width, 1))
    acc = np.zeros((width, dims[-1]))
    for lo in range(0, n, step):
        Z = arrays[0][lo:lo + step]
        for X in arrays[1:-1]:
            Z = (Z[:, :, None] * X[lo:lo + step, None, :]).reshape(Z.shape[0], -1)
        acc += Z.T @ arrays[-1][lo:lo + step]
    return (acc / n).reshape(dims)


def _partition_sum(t: int, block_value, combine, skip_singletons: bool = False):
    total = None
    for part in set_partitions(t):
        if skip_singletons and any(len(b) == 1 for b in part):
            continue
        term = combine(part, [block_value(b) for b in part])
        coeff = partition_coefficient(len(part))
        total = coeff * term if total is None else total + coeff * term
    return total


def _tensor_product_in_mode_order(t: int, part, tensors) -> np.ndarray:
    letters = ascii_letters[:t]
    subs = ",".join("".join(letters[i] for i in b) for b in part)
    return np.einsum(f"{subs}->{letters}", *tensors)


def cross_cumulant(inputs: Sequence, center: bool = True) -> np.ndarray:
    """Plug-in cross-cumulant tensor ``kappa_t(X_1, ..., X_t)``.

    Parameters
    ----------
    inputs : sequence of (n, d_l) arrays
        Row-aligned samples of the ``t`` variables.  A 1-d array is a
        scalar variable.
    center : bool
        Subtract each variable's empirical mean first.

    Returns
    -------
    ndarray of shape (d_1, ..., d_t)
    """
    inputs = _check_inputs(inputs)
    t = len(inputs)
    uniq, keys = _dedupe(inputs, center)
    cache: dict = {}

    def block_value(block):
        key = tuple(keys[i] for i in block)
        if key not in cache:
            cache[key] = empirical_moment([uniq[k] for k in key])
        return cache[key]

    # centered first moments vanish, so partitions with singletons add only round-off
    return _partition_sum(
        t,
        block_value,
        lambda part, vals: _tensor_product_in_mode_order(t, part, vals),
        skip_singletons=center and t > 1,
    )


def cumulant(X, order: int, center: bool = True) -> np.ndarray:
    """``kappa_order(X, ..., X)``."""
    X = _as_samples(X)
    return cross_cumulant([X] * order, center=center)


def cumulant_entries(inputs: Sequence, index, center: bool = True) -> np.ndarray:
    """Selected entries of ``cross_cumulant(inputs)`` without forming the tensor.

    ``index`` is an ``(m, t)`` integer array; row ``r`` asks for entry
    ``index[r]``.  Cost is ``O(2^t n m)``.
    """
    inputs = _check_inputs(inputs)
    t = len(inputs)
    index = np.atleast_2d(np.asarray(index, dtype=np.intp))
    if index.shape[1] != t:
        raise ShapeError(f"index has {index.shape[1]} columns for {t} variables")
    uniq, keys = _dedupe(inputs, center)
    cols = [uniq[keys[l]][:, index[:, l]] for l in range(t)]
    cache: dict = {}

    def block_value(block):
        if block not in cache:
            prod = cols[block[0]]
            for i in block[1:]:
                prod = prod * cols[i]
            cache[block] = prod.mean(axis=0)
        return cache[block]

    return _partition_sum(
        t, block_value, lambda part, vals: np.prod(vals, axis=0),
        skip_singletons=center and t > 1,
    )


# --------------------------------------------------------------------------
# moments <-> cumulants
# --------------------------------------------------------------------------

def _check_chain(tensors, what: str) -> list[np.ndarray]:
    tensors = [np.asarray(T, dtype=np.float64) for T in tensors]
    if not tensors:
        raise InvalidInputError(f"no {what} given")
    for r, T in enumerate(tensors, start=1):
        if T.ndim != r:
            raise InvalidInputError(
                f"{what} list must hold consecutive orders 1..t; entry {r} has order {T.ndim}"
            )
    if tensors[0].ndim != 1 or len(set(tensors[0].shape)) != 1:
        raise InvalidInputError(f"first {what} must be a vector")
    return tensors


def moments_to_cumulants(moments: Sequence) -> list[np.ndarray]:
    """Cumulant tensors of orders ``1..t`` from raw moment tensors ``1..t``."""
    moments = _check_chain(moments, "moments")
    out = []
    for r in range(1, len(moments) + 1):
        out.append(_partition_sum(
            r, lambda b: moments[len(b) - 1],
            lambda part, vals, r=r: _tensor_product_in_mode_order(r, part, vals),
        ))
    return out


def cumulants_to_moments(cumulants: Sequence) -> list[np.ndarray]:
    """Raw moment tensors of orders ``1..t`` from cumulant tensors ``1..t``."""
    cumulants = _check_chain(cumulants, "cumulants")
    out = []
    for r in range(1, len(cumulants) + 1):
        total = 0.0
        for part in set_partitions(r):
            total = total + _tensor_product_in_mode_order(
                r, part, [cumulants[len(b) - 1] for b in part])
        out.append(total)
    return out


# --------------------------------------------------------------------------
# projected moments
# --------------------------------------------------------------------------

def _check_power(power):
    if not isinstance(power, (int, np.integer)) or not 0 <= power <= MAX_ORDER - 1:
        raise InvalidInputError(f"power must be in 0..{MAX_ORDER - 1}, got {power}")


def projected_moment(X, theta, power: int) -> np.ndarray:
    """Empirical ``E[X (theta^T X)^power]`` in ``O(n d)``."""
    X = _as_samples(X)
    theta = np.asarray(theta, dtype=np.float64)
    _check_power(power)
    if theta.shape != (X.shape[1],):
        raise ShapeError(f"theta has shape {theta.shape}, data dimension is {X.shape[1]}")
    w = (X @ theta) ** power
    return (X * w[:, None]).mean(axis=0)


def debiased_projected_moment(source: "ComponentCumulants", theta, power: int) -> np.ndarray:
    """``E[S (theta^T S)^power]`` rebuilt from the cumulants of ``S``.

    Each cumulant is contracted with ``theta`` on every mode but the first;
    the projected moment is the partition sum of products of these pieces.
    """
    _check_power(power)
    theta = np.asarray(theta, dtype=np.float64)
    vec, sca = {}, {}
    for r in range(1, power + 2):
        kappa = source.cumulant(r)
        if theta.shape != (kappa.shape[0],):
            raise ShapeError(f"theta has shape {theta.shape}, component dimension is {kappa.shape[0]}")
        vec[r] = contract_vector(kappa, [None] + [theta] * (r - 1))
        sca[r] = float(theta @ vec[r])
    total = np.zeros_like(vec[1])
    for part in set_partitions(power + 1):
        term = vec[len(part[0])].copy()  # part[0] holds mode 0
        for b in part[1:]:
            term *= sca[len(b)]
        total += term
    return total


# --------------------------------------------------------------------------
# containers
# --------------------------------------------------------------------------

@dataclass
class ComponentCumulants:
    """Mean and cumulant tensors (orders >= 2) of one latent component."""

    mean: np.ndarray
    cumulants: dict = field(default_factory=dict)
    n_samples: int = 0

    @classmethod
    def from_samples(cls, X, max_order: int, center: bool = True) -> "ComponentCumulants":
        X = _as_samples(X)
        kappas = {t: cumulant(X, t, center=center) for t in range(2, max_order + 1)}
        mean = X.mean(axis=0) if center else np.zeros(X.shape[1])
        return cls(mean=mean, cumulants=kappas, n_samples=X.shape[0])

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def max_order(self) -> int:
        return max(self.cumulants, default=1)

    def cumulant(self, order: int) -> np.ndarray:
        if order == 1:
            return self.mean
        if order not in self.cumulants:
            raise InvalidInputError(
                f"order-{order} cumulant not available (have {sorted(self.cumulants)})")
        return self.cumulants[order]

    def moment(self, order: int) -> np.ndarray:
        return cumulants_to_moments([self.cumulant(r) for r in range(1, order + 1)])[-1]

    def projected_moment(self, theta, power: int) -> np.ndarray:
        return debiased_projected_moment(self, theta, power)

    def entries(self, index) -> np.ndarray:
        index = np.atleast_2d(np.asarray(index, dtype=np.intp))
        return self.cumulant(index.shape[1])[tuple(index.T)]


class SampleEntrySource:
    """Cumulant entries of a directly observed sample ``X``.

    Same interface as the contrastive entry source, so batch estimators can
    switch between observed and extracted components.
    """

    def __init__(self, X):
        self.X = _as_samples(X)

    def subset(self, rows) -> "SampleEntrySource":
        return SampleEntrySource(self.X[rows])

    def entries(self, index) -> np.ndarray:
        index = np.atleast_2d(np.asarray(index, dtype=np.intp))
        r = index.shape[1]
        if r == 1:
            return self.X.mean(axis=0)[index[:, 0]]
        return cumulant_entries([self.X] * r, index)


def moment_entries(source, index) -> np.ndarray:
    """Raw moment entries ``E[S_{i_1} ... S_{i_t}]`` from cumulant entries.

    ``source.entries(idx)`` must return cumulant entries for an ``(m, r)``
    index array of any order ``r <= t``.
    """
    index = np.atleast_2d(np.asarray(index, dtype=np.intp))
    t = index.shape[1]
    cache: dict = {}

    def block(b):
        if b not in cache:
            cache[b] = np.asarray(source.entries(index[:, list(b)]), dtype=np.float64)
        return cache[b]

    total = np.zeros(index.shape[0])
    for part in set_partitions(t):
        term = np.ones(index.shape[0])
        for b in part:
            term = term * block(b)
        total += term
    return total


def k_statistic(x, order: int) -> float:
    """Unbiased k-statistic of a scalar sample, ``order`` in 1..3."""
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if order == 1:
        return float(x.mean())
    c = x - x.mean()
    if order == 2:
        if n < 2:
            raise InvalidInputError("k2 needs n >= 2")
        return float(np.sum(c ** 2) / (n - 1))
    if order == 3:
        if n < 3:
            raise InvalidInputError("k3 needs n >= 3")
        return float(n * np.sum(c ** 3) / ((n - 1) * (n - 2)))
    raise InvalidOrderError("k-statistics are implemented for orders 1..3 only")
