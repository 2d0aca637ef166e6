import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smssvd.linalg import (
    DataMatrix,
    apply_sign_convention,
    make_rng,
    numerical_rank,
    orthonormalize,
    project_complement,
    substream,
    svd_truncated,
)


def eig_svd(X):
    """Independent oracle: singular values and right vectors from eigh(X^T X)."""
    w, V = np.linalg.eigh(X.T @ X)
    order = np.argsort(w)[::-1]
    return np.sqrt(np.clip(w[order], 0, None)), V[:, order]


def test_identity_rank2_is_projector():
    f = svd_truncated(np.eye(3), 2)
    np.testing.assert_allclose(f.sigma, [1, 1])
    M = f.matrix()
    np.testing.assert_allclose(M @ M, M, atol=1e-12)
    np.testing.assert_allclose(M, M.T, atol=1e-12)
    assert np.linalg.matrix_rank(M) == 2


def test_diagonal_leading_triplet():
    f = svd_truncated(np.diag([3.0, 2.0, 1.0]), 1)
    np.testing.assert_allclose(f.sigma, [3.0])
    np.testing.assert_allclose(f.U[:, 0], [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(f.V[:, 0], [1, 0, 0], atol=1e-12)


def test_full_rank_reconstruction_against_eig_oracle():
    X = make_rng(1).standard_normal((8, 5))
    f = svd_truncated(X, 5)
    assert np.linalg.norm(X - f.matrix()) < 1e-10 * np.linalg.norm(X)
    s, V = eig_svd(X)
    np.testing.assert_allclose(f.sigma, s, rtol=1e-10)
    # same subspaces column by column (distinct singular values)
    np.testing.assert_allclose(np.abs(np.sum(f.V * V, axis=0)), 1.0, atol=1e-8)


@pytest.mark.parametrize("d", [0, 1, 3, 5])
def test_svd_invariants(d):
    X = make_rng(d).standard_normal((12, 5))
    f = svd_truncated(X, d)
    assert f.U.shape == (12, d) and f.V.shape == (5, d)
    assert f.orthonormality_error() < 1e-10
    assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma >= 0)


@pytest.mark.parametrize("d", [-1, 6])
def test_svd_rejects_bad_rank(d):
    with pytest.raises(ValueError):
        svd_truncated(np.ones((6, 5)), d)


def test_svd_rejects_nonfinite():
    X = np.ones((3, 3))
    X[1, 1] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        svd_truncated(X, 1)


def test_sign_convention_peak_nonnegative_and_idempotent():
    X = make_rng(3).standard_normal((9, 6))
    f = svd_truncated(X, 4)
    peaks = f.V[np.argmax(np.abs(f.V), axis=0), np.arange(4)]
    assert np.all(peaks >= 0)
    U2, V2 = apply_sign_convention(f.U, f.V)
    assert np.array_equal(U2, f.U) and np.array_equal(V2, f.V)


def test_sign_convention_tie_lowest_index():
    V = np.array([[-0.5], [0.5], [0.5], [-0.5]])
    _, V2 = apply_sign_convention(np.ones((2, 1)), V)
    assert V2[0, 0] == 0.5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_eckart_young_against_perturbed_factors(d, seed):
    rng = make_rng(seed)
    X = rng.standard_normal((10, 7))
    f = svd_truncated(X, d)
    B = ((f.U + 0.1 * rng.standard_normal(f.U.shape)) * f.sigma) @ (
        f.V + 0.1 * rng.standard_normal(f.V.shape)).T
    assert np.linalg.norm(X - f.matrix()) <= np.linalg.norm(X - B) + 1e-9


def test_svd_deterministic_bytes():
    X = make_rng(7).standard_normal((30, 12))
    a, b = svd_truncated(X, 4), svd_truncated(X.copy(), 4)
    assert a.U.tobytes() == b.U.tobytes() and a.V.tobytes() == b.V.tobytes()


def test_project_complement_full_and_empty():
    X = make_rng(0).standard_normal((4, 3))
    assert np.abs(project_complement(X, np.eye(4))).max() < 1e-14
    np.testing.assert_array_equal(project_complement(X, np.zeros((4, 0))), X)


def test_project_complement_drops_leading_singular_values():
    X = make_rng(2).standard_normal((9, 7))
    f = svd_truncated(X, 2)
    R = project_complement(X, f.U)
    s_full, _ = eig_svd(X)
    s_R = np.linalg.svd(R, compute_uv=False)
    np.testing.assert_allclose(s_R[:2], s_full[2:4], rtol=1e-9)
    assert np.abs(f.U.T @ R).max() < 1e-10


def test_project_complement_checks():
    with pytest.raises(ValueError, match="rows"):
        project_complement(np.ones((3, 2)), np.eye(4)[:, :1])
    with pytest.raises(ValueError, match="orthonormal"):
        project_complement(np.ones((3, 2)), np.ones((3, 1)))


@pytest.mark.parametrize("X, r", [
    (np.zeros((4, 3)), 0),
    (np.eye(4), 4),
    (np.outer([1.0, -2.0, 3.0], [0.5, 4.0]), 1),
])
def test_numerical_rank(X, r):
    assert numerical_rank(X) == r


def test_numerical_rank_parent_scale():
    # rounding residue is rank 0 when measured against its parent
    tiny = 1e-14 * make_rng(4).standard_normal((5, 5))
    assert numerical_rank(tiny) == 5
    assert numerical_rank(tiny, scale=1.0) == 0


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (6, 4), elements=st.floats(-10, 10)))
def test_orthonormalize_spans_input(A):
    try:
        Q = orthonormalize(A)
    except ValueError:
        return
    assert np.abs(Q.T @ Q - np.eye(4)).max() < 1e-10
    assert np.linalg.norm(A - Q @ (Q.T @ A)) < 1e-8 * max(np.linalg.norm(A), 1)


def test_datamatrix_validation():
    with pytest.raises(ValueError, match="distinct"):
        DataMatrix(np.ones((2, 2)), ("a", "a"), ("x", "y"))
    with pytest.raises(ValueError, match="non-finite"):
        DataMatrix(np.array([[np.inf]]), ("a",), ("x",))
    with pytest.raises(ValueError, match="id counts"):
        DataMatrix(np.ones((2, 2)), ("a",), ("x", "y"))
    D = DataMatrix.from_array(np.arange(6.0).reshape(2, 3))
    assert D.shape == (2, 3) and D.variable_ids == ("v1", "v2")
    np.testing.assert_allclose(D.center_rows().values.mean(axis=1), 0)
    with pytest.raises(ValueError):
        D.values[0, 0] = 1.0


def test_rng_streams_reproducible_and_distinct():
    a = make_rng(substream(5, 1, 2)).standard_normal(4)
    b = make_rng(substream(5, 1, 2)).standard_normal(4)
    c = make_rng(substream(5, 2, 1)).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    # nested keys compose
    np.testing.assert_array_equal(
        make_rng(substream(substream(5, 1), 2)).standard_normal(4), a)
