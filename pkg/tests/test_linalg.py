import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noicca.errors import DimensionError, NumericError
from noicca.linalg import inv_sqrt_sym, random_orthonormal, svd_rank_l, sym_eig, whiten_rows


def rand_psd(d, seed, m=None):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, m or 3 * d))
    return A @ A.T


def test_sym_eig_identity():
    w, V = sym_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-12)


def test_sym_eig_diagonal():
    w, V = sym_eig(np.diag([1.0, 4.0]))
    np.testing.assert_allclose(w, [4, 1])
    np.testing.assert_allclose(np.abs(V), np.eye(2)[:, [1, 0]], atol=1e-12)


def test_sym_eig_reconstruction():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5))
    M = A + A.T
    w, V = sym_eig(M)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-10)
    assert np.linalg.norm(V @ np.diag(w) @ V.T - M) / np.linalg.norm(M) < 1e-8


def test_sym_eig_rejects_non_square():
    with pytest.raises(DimensionError):
        sym_eig(np.ones((2, 3)))


def test_inv_sqrt_simple_cases():
    np.testing.assert_allclose(inv_sqrt_sym(np.eye(2), 0.0), np.eye(2))
    np.testing.assert_allclose(inv_sqrt_sym(np.diag([4.0, 1.0]), 0.0), np.diag([0.5, 1.0]))


def test_inv_sqrt_defining_property():
    M = rand_psd(6, 1)
    R = inv_sqrt_sym(M, 1e-8)
    np.testing.assert_allclose(R, R.T)
    assert np.linalg.norm(R @ M @ R - np.eye(6)) < 1e-6


def test_inv_sqrt_errors():
    with pytest.raises(NumericError):
        inv_sqrt_sym(np.diag([1.0, -1.0]))
    # singular without a ridge
    with pytest.raises(NumericError):
        inv_sqrt_sym(np.diag([1.0, 0.0]), 0.0)
    # rounding-level negative eigenvalues are clamped
    R = inv_sqrt_sym(np.diag([1.0, -1e-14]), 1e-6)
    assert np.isfinite(R).all()


def test_svd_diagonal_and_zero():
    U, s, V = svd_rank_l(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(s, [3, 2])
    U, s, V = svd_rank_l(np.zeros((3, 2)), 1)
    np.testing.assert_allclose(s, [0.0])
    np.testing.assert_allclose(V.T @ V, np.eye(1), atol=1e-12)


def test_svd_trace_norm_against_eigen_oracle():
    M = np.random.default_rng(2).standard_normal((6, 4))
    U, s, V = svd_rank_l(M, 4)
    oracle = np.sum(np.sqrt(np.linalg.eigvalsh(M.T @ M)))
    assert abs(s.sum() - oracle) < 1e-10
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(U @ np.diag(s) @ V.T, M, atol=1e-10)


def test_svd_sign_convention_and_range():
    M = np.random.default_rng(3).standard_normal((4, 7))
    U, s, V = svd_rank_l(M, 3)
    idx = np.argmax(np.abs(U), axis=0)
    assert np.all(U[idx, range(3)] > 0)
    np.testing.assert_allclose(np.sqrt(sym_eig(M @ M.T).eigenvalues[:3]), s, atol=1e-8)
    with pytest.raises(DimensionError):
        svd_rank_l(M, 5)


def test_whiten_rows_cases():
    Q = random_orthonormal(6, 2, seed=0).T
    np.testing.assert_allclose(whiten_rows(Q), Q, atol=1e-10)
    np.testing.assert_allclose(whiten_rows(2 * np.eye(2)), np.eye(2), atol=1e-12)
    W = whiten_rows(np.random.default_rng(4).standard_normal((3, 50)))
    assert np.linalg.norm(W @ W.T - np.eye(3)) < 1e-8


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), L=st.integers(1, 6), extra=st.integers(0, 40))
def test_whiten_rows_gram_is_identity(seed, L, extra):
    A = np.random.default_rng(seed).standard_normal((L, L + 1 + extra))
    W = whiten_rows(A)
    assert np.abs(W @ W.T - np.eye(L)).max() < 1e-8


def test_random_orthonormal():
    Q = random_orthonormal(3, 3, seed=5)
    np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-10)
    Q = random_orthonormal(5, 2, seed=5)
    np.testing.assert_allclose(Q.T @ Q, np.eye(2), atol=1e-10)
    assert np.array_equal(random_orthonormal(5, 2, 9), random_orthonormal(5, 2, 9))
    with pytest.raises(DimensionError):
        random_orthonormal(2, 3, 0)


def test_inv_sqrt_clamps_rounding_negatives_on_large_scale():
    # lambda_min = -1e-5 is rounding noise next to lambda_max = 1e6, so it is
    # clamped to 0 before the ridge is added
    R = inv_sqrt_sym(np.diag([1e6, -1e-5]), 1e-6)
    np.testing.assert_allclose(R, np.diag([1e-3, 1e3]), rtol=1e-9)
