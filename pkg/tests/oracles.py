"""Independent reference implementations used by the tests.

Nothing here imports the package; each oracle is written from the defining
formula so agreement is meaningful.
"""

from itertools import product
from math import factorial

import numpy as np


def partitions(items):
    """All set partitions of a list, generated recursively."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def brute_cross_cumulant(arrays, center=True):
    """Partition-formula cross-cumulant, one tensor entry at a time."""
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    if center:
        arrays = [a - a.mean(axis=0) for a in arrays]
    t = len(arrays)
    dims = [a.shape[1] for a in arrays]
    out = np.zeros(dims)
    parts = list(partitions(range(t)))
    for idx in product(*[range(d) for d in dims]):
        total = 0.0
        for p in parts:
            m = len(p)
            coef = (-1) ** (m - 1) * factorial(m - 1)
            prod = 1.0
            for block in p:
                col = np.ones(arrays[0].shape[0])
                for k in block:
                    col = col * arrays[k][:, idx[k]]
                prod *= col.mean()
            total += coef * prod
        out[idx] = total
    return out


def brute_multilinear(T, maps):
    """T(M_1, ..., M_t) by explicit summation over every index tuple."""
    T = np.asarray(T, dtype=float)
    out_dims = [M.shape[1] for M in maps]
    out = np.zeros(out_dims)
    for j in product(*[range(d) for d in out_dims]):
        s = 0.0
        for i in product(*[range(d) for d in T.shape]):
            w = T[i]
            for l, M in enumerate(maps):
                w *= M[i[l], j[l]]
            s += w
        out[j] = s
    return out


def diagonal_tensor(values, order):
    d = len(values)
    T = np.zeros((d,) * order)
    for i in range(d):
        T[(i,) * order] = values[i]
    return T


def apply_all(T, maps):
    """Multilinear map via einsum; maps act as M^T on each mode."""
    letters = "abcdefgh"
    t = T.ndim
    src = letters[:t]
    dst = letters[t:2 * t]
    spec = src + "," + ",".join(s + d for s, d in zip(src, dst)) + "->" + dst
    return np.einsum(spec, T, *maps)


UNIFORM_K4 = -2.0 / 15.0     # fourth cumulant of Unif[-1, 1]
RADEMACHER_K4 = -2.0


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))
