"""Dense tensors and the multilinear algebra used throughout the package.

Tensors are plain ``numpy.ndarray`` objects in C (row-major) order; a
``t``-th order tensor is an array with ``ndim == t``.  Linear maps are 2-d
arrays.  Everything is computed in float64.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidOrderError, ShapeError

DEFAULT_RANK_TOL = 1e-10


def as_tensor(T) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    if T.ndim < 1:
        raise InvalidOrderError("a tensor needs order >= 1")
    return T


def as_map(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array with {M.ndim} axes")
    return M


def unfold(T) -> np.ndarray:
    """Flatten a tensor into a ``(d_1 ... d_{t-1}) x d_t`` matrix.

    Row ``(i_1, ..., i_{t-1})`` (row-major) and column ``i_t`` hold
    ``T[i_1, ..., i_t]``; the last tensor index becomes the column index.

    Examples
    --------
    >>> unfold(np.multiply.outer([1., 2.], [3., 4.]))
    array([[3., 4.],
           [6., 8.]])
    """
    T = as_tensor(T)
    if T.ndim < 2:
        raise InvalidOrderError(f"unfold needs order >= 2, got {T.ndim}")
    return T.reshape(-1, T.shape[-1])


def refold(M, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    M = as_map(M)
    dims = tuple(int(x) for x in dims)
    if len(dims) < 2 or int(np.prod(dims)) != M.size or M.shape[1] != dims[-1]:
        raise ShapeError(f"cannot refold a {M.shape} matrix into {dims}")
    return M.reshape(dims)


def outer(*vectors) -> np.ndarray:
    """Tensor product ``v_1 (x) v_2 (x) ... (x) v_t``."""
    out = np.asarray(vectors[0], dtype=np.float64)
    for v in vectors[1:]:
        out = np.multiply.outer(out, np.asarray(v, dtype=np.float64))
    return out


def multilinear_apply(T, maps: Sequence) -> np.ndarray:
    """Multilinear form ``T(M_1, ..., M_t)``.

    ``out[i_1..i_t] = sum_j T[j_1..j_t] prod_l M_l[j_l, i_l]``, i.e. each map
    is contracted along its *rows* with the corresponding tensor mode.  For a
    moment tensor this equals ``E[(M_1^T X) (x) ... (x) (M_t^T X)]``.

    A ``None`` entry in ``maps`` leaves that mode untouched.
    """
    T = as_tensor(T)
    if len(maps) != T.ndim:
        raise ShapeError(f"need {T.ndim} maps, got {len(maps)}")
    out = T
    for mode, M in enumerate(maps):
        if M is None:
            continue
        M = as_map(M)
        if M.shape[0] != out.shape[mode]:
            raise ShapeError(
                f"mode {mode}: map has {M.shape[0]} rows but the tensor "
                f"dimension is {out.shape[mode]}"
            )
        out = np.moveaxis(np.tensordot(out, M, axes=([mode], [0])), -1, mode)
    return out


def contract_vector(T, vectors: Sequence) -> np.ndarray:
    """Contract trailing modes of ``T`` with vectors (``None`` keeps a mode).

    ``contract_vector(T, [None, th, th])`` returns ``T(I, th, th)`` as a vector.
    """
    T = as_tensor(T)
    if len(vectors) != T.ndim:
        raise ShapeError(f"need {T.ndim} entries, got {len(vectors)}")
    out = T
    # contract from the last mode so earlier axis numbers stay valid
    for mode in range(T.ndim - 1, -1, -1):
        v = vectors[mode]
        if v is None:
            continue
        out = np.tensordot(out, np.asarray(v, dtype=np.float64), axes=([mode], [0]))
    return out


def kronecker(A, B) -> np.ndarray:
    """Kronecker product with block ``(i, j)`` equal to ``A[i, j] * B``."""
    return np.kron(as_map(A), as_map(B))


def pinv(M, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values ``<= rank_tol * sigma_max`` are treated as zero.
    """
    M = as_map(M)
    if M.size == 0:
        raise InvalidInputError("pseudoinverse of an empty matrix")
    if rank_tol < 0:
        raise InvalidInputError("rank_tol must be nonnegative")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > rank_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def frobenius_norm(T) -> float:
    return float(np.linalg.norm(np.ravel(as_tensor(T))))


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(as_map(M), compute_uv=False)


def smallest_singular_value(M) -> float:
    """``sigma_min`` over the ``min(rows, cols)`` singular values."""
    return float(singular_values(M)[-1])


def spectral_norm(M) -> float:
    return float(singular_values(M)[0])


def numerical_rank(M, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    s = singular_values(M)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def symmetrize(T) -> np.ndarray:
    """Average of ``T`` over all permutations of its modes."""
    from itertools import permutations

    T = as_tensor(T)
    perms = list(permutations(range(T.ndim)))
    return sum(np.transpose(T, p) for p in perms) / len(perms)
