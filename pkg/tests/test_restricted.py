import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smssvd.linalg import make_rng, numerical_rank, orthonormalize, svd_truncated
from smssvd.restricted import check_theorem1, restrict_svd


def low_rank(rng, P, N, r):
    return rng.standard_normal((P, r)) @ rng.standard_normal((r, N))


def row_space_basis(rng, X, d):
    """Random d-dimensional subspace inside the row space of X."""
    return orthonormalize(X.T @ rng.standard_normal((X.shape[0], d)))


def test_top_subspace_gives_truncated_svd():
    X = make_rng(0).standard_normal((15, 8))
    t = svd_truncated(X, 3)
    f = restrict_svd(X, t.V)
    np.testing.assert_allclose(f.sigma, t.sigma, rtol=1e-12)
    np.testing.assert_allclose(f.U, t.U, atol=1e-10)
    np.testing.assert_allclose(f.V, t.V, atol=1e-10)
    rep = check_theorem1(X, f)
    assert rep.utx_simple < 1e-8 * np.linalg.norm(X)


def test_kernel_complement_gives_full_svd():
    rng = make_rng(1)
    X = low_rank(rng, 12, 9, 4)
    B = row_space_basis(rng, X, 4)
    f = restrict_svd(X, B)
    np.testing.assert_allclose(f.sigma, np.linalg.svd(X, compute_uv=False)[:4], rtol=1e-10)
    assert np.linalg.norm(X - f.matrix()) < 1e-10 * np.linalg.norm(X)


def test_random_subspace_identities():
    rng = make_rng(2)
    X = rng.standard_normal((20, 10))
    B = orthonormalize(rng.standard_normal((10, 3)))
    f = restrict_svd(X, B)
    rep = check_theorem1(X, f)
    tol = 1e-8 * np.linalg.norm(X)
    assert max(rep.identities().values()) < tol
    assert rep.rank_gap == 0
    assert np.abs(f.V @ f.V.T - B @ B.T).max() < 1e-9
    # the restricted factors are not the truncated SVD in general
    assert rep.utx_simple > 1e-3


def test_rank_one_padded():
    X = np.zeros((5, 4))
    X[1:3, :] = np.outer([1.0, 2.0], [1.0, 0.0, -1.0, 3.0])
    B = orthonormalize(X[1][:, None])
    f = restrict_svd(X, B)
    assert numerical_rank(X - f.U @ (f.U.T @ X), scale=np.linalg.norm(X, 2)) == 0
    assert check_theorem1(X, f).rank_gap == 0


def test_kernel_subspace_rejected():
    X = np.zeros((4, 3))
    X[:, 0] = 1.0
    with pytest.raises(np.linalg.LinAlgError, match="kernel"):
        restrict_svd(X, np.eye(3)[:, 1:2])


@pytest.mark.parametrize("B", [np.ones((3, 1)), np.eye(4)[:, :2]])
def test_bad_basis(B):
    with pytest.raises(ValueError):
        restrict_svd(np.ones((5, 3)), B)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(2, 10), st.data())
def test_deflation_properties(P, N, data):
    rng = make_rng(data.draw(st.integers(0, 2**32 - 1)))
    r = data.draw(st.integers(1, min(P, N)))
    d = data.draw(st.integers(1, r))
    X = low_rank(rng, P, N, r)
    f = restrict_svd(X, row_space_basis(rng, X, d))
    D = X - f.U @ (f.U.T @ X)
    # deflation annihilates the block and lowers the rank by d
    assert np.abs(D.T @ f.U).max() < 1e-9 * np.linalg.norm(X)
    assert np.abs((np.eye(P) - f.U @ f.U.T) @ f.matrix()).max() < 1e-10 * max(1, np.linalg.norm(X))
    assert check_theorem1(X, f).rank_gap == 0
