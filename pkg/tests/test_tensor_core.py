import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rca.errors import InvalidInputError, InvalidOrderError, ShapeError
from rca.tensor_core import (
    frobenius_norm,
    kronecker,
    multilinear_apply,
    outer,
    pinv,
    refold,
    smallest_singular_value,
    symmetrize,
    unfold,
)

from oracles import apply_all, brute_multilinear

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_unfold_outer_product():
    T = outer([1.0, 2.0], [3.0, 4.0])
    np.testing.assert_array_equal(unfold(T), [[3, 4], [6, 8]])


def test_unfold_all_ones():
    np.testing.assert_array_equal(unfold(np.ones((2, 2, 2))), np.ones((4, 2)))


def test_unfold_index_mapping(rng):
    T = rng.normal(size=(2, 3, 4))
    M = unfold(T)
    assert M.shape == (6, 4)
    for i in range(2):
        for j in range(3):
            for k in range(4):
                assert M[i * 3 + j, k] == T[i, j, k]


def test_unfold_rejects_vectors():
    with pytest.raises(InvalidOrderError):
        unfold(np.ones(3))


@given(arrays(np.float64, (3, 3, 3), elements=finite))
def test_refold_inverts_unfold(T):
    np.testing.assert_array_equal(refold(unfold(T), T.shape), T)


def test_refold_shape_check():
    with pytest.raises(ShapeError):
        refold(np.ones((4, 2)), (3, 2))


def test_multilinear_identity(rng):
    T = rng.normal(size=(3, 3, 3))
    np.testing.assert_array_equal(multilinear_apply(T, [np.eye(3)] * 3), T)


def test_multilinear_bilinear_case(rng):
    T = rng.normal(size=(3, 4))
    M1, M2 = rng.normal(size=(3, 2)), rng.normal(size=(4, 5))
    np.testing.assert_allclose(multilinear_apply(T, [M1, M2]), M1.T @ T @ M2, atol=1e-12)


def test_multilinear_rank_one_against_summation(rng):
    a, b, c = rng.normal(size=2), rng.normal(size=3), rng.normal(size=2)
    maps = [rng.normal(size=(2, 3)), rng.normal(size=(3, 2)), rng.normal(size=(2, 2))]
    T = outer(a, b, c)
    got = multilinear_apply(T, maps)
    np.testing.assert_allclose(got, brute_multilinear(T, maps), atol=1e-12)
    np.testing.assert_allclose(got, outer(maps[0].T @ a, maps[1].T @ b, maps[2].T @ c),
                               atol=1e-12)


def test_multilinear_matches_moment_identity(rng):
    X = rng.normal(size=(40, 3))
    Ms = [rng.normal(size=(3, 2)) for _ in range(3)]
    moment = np.einsum("ni,nj,nk->ijk", X, X, X) / 40
    Y = [X @ M for M in Ms]
    direct = np.einsum("ni,nj,nk->ijk", *Y) / 40
    np.testing.assert_allclose(multilinear_apply(moment, Ms), direct, atol=1e-12)


def test_multilinear_shape_error_names_mode():
    with pytest.raises(ShapeError, match="mode 1"):
        multilinear_apply(np.ones((2, 2)), [np.eye(2), np.eye(3)])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_multilinear_composes(seed):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(3, 3, 3))
    M = [rng.normal(size=(3, 3)) for _ in range(3)]
    N = [rng.normal(size=(3, 2)) for _ in range(3)]
    two_step = multilinear_apply(multilinear_apply(T, M), N)
    one_step = multilinear_apply(T, [m @ n for m, n in zip(M, N)])
    assert np.linalg.norm(two_step - one_step) <= 1e-10 * np.linalg.norm(one_step)
    np.testing.assert_allclose(one_step, apply_all(T, [m @ n for m, n in zip(M, N)]),
                               atol=1e-10)


def test_kronecker_examples():
    np.testing.assert_array_equal(kronecker(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(kronecker(np.diag([2.0, 3.0]), np.diag([5.0, 7.0])),
                                  np.diag([10.0, 14.0, 15.0, 21.0]))


def test_kronecker_block_layout(rng):
    A, B = rng.normal(size=(2, 3)), rng.normal(size=(4, 2))
    K = kronecker(A, B)
    assert K.shape == (8, 6)
    for i in range(2):
        for j in range(3):
            np.testing.assert_array_equal(K[4 * i:4 * i + 4, 2 * j:2 * j + 2], A[i, j] * B)


def test_kronecker_singular_values(rng):
    A, B = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    sa = np.linalg.svd(A, compute_uv=False)
    sb = np.linalg.svd(B, compute_uv=False)
    expected = np.sort(np.outer(sa, sb).ravel())
    got = np.sort(np.linalg.svd(kronecker(A, B), compute_uv=False))
    np.testing.assert_allclose(got, expected, atol=1e-10)


@given(arrays(np.float64, (2, 3), elements=finite), arrays(np.float64, (3, 2), elements=finite))
def test_kronecker_frobenius(A, B):
    lhs = np.linalg.norm(kronecker(A, B))
    assert abs(lhs - np.linalg.norm(A) * np.linalg.norm(B)) <= 1e-12 * max(1.0, lhs)


def test_kronecker_associative(rng):
    A, B, C = (rng.normal(size=(2, 2)) for _ in range(3))
    np.testing.assert_allclose(kronecker(kronecker(A, B), C), kronecker(A, kronecker(B, C)),
                               atol=1e-12)


def test_pinv_examples():
    np.testing.assert_array_equal(pinv(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(pinv(np.diag([2.0, 0.0]), 1e-10), np.diag([0.5, 0.0]))


def test_pinv_left_inverse(rng):
    M = rng.normal(size=(20, 4))
    np.testing.assert_allclose(pinv(M) @ M, np.eye(4), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_pinv_penrose_conditions(seed, r, c):
    M = np.random.default_rng(seed).normal(size=(r, c))
    P = pinv(M)
    np.testing.assert_allclose(M @ P @ M, M, atol=1e-8)
    np.testing.assert_allclose(P @ M @ P, P, atol=1e-8)
    np.testing.assert_allclose((M @ P).T, M @ P, atol=1e-8)
    np.testing.assert_allclose((P @ M).T, P @ M, atol=1e-8)


def test_pinv_relative_threshold():
    P = pinv(np.diag([1.0, 1e-12]), rank_tol=1e-10)
    np.testing.assert_array_equal(P, np.diag([1.0, 0.0]))


def test_pinv_errors():
    with pytest.raises(InvalidInputError):
        pinv(np.zeros((0, 3)))
    with pytest.raises(InvalidInputError):
        pinv(np.eye(2), rank_tol=-1.0)


def test_norms(rng):
    assert frobenius_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8), abs=1e-15)
    assert smallest_singular_value(np.eye(5)) == 1.0
    M = rng.normal(size=(6, 4))
    assert abs(smallest_singular_value(M) - np.linalg.svd(M)[1].min()) < 1e-10


def test_symmetrize_is_projection(rng):
    T = rng.normal(size=(3, 3, 3))
    S = symmetrize(T)
    np.testing.assert_allclose(S, S.transpose(1, 0, 2), atol=1e-15)
    np.testing.assert_allclose(S, S.transpose(2, 1, 0), atol=1e-15)
    np.testing.assert_allclose(symmetrize(S), S, atol=1e-15)
