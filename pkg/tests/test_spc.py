import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smssvd.linalg import make_rng, svd_truncated
from smssvd.spc import SpcConfig, l1_unit_update, soft_threshold, spc


def test_soft_threshold():
    np.testing.assert_allclose(soft_threshold([-3.0, -0.5, 0.0, 0.5, 2.0], 1.0),
                               [-2.0, 0.0, 0.0, 0.0, 1.0])


def best_by_sweep(a, c, n=4001):
    """Oracle: best objective over a dense sweep of thresholds."""
    best = 0.0
    for lam in np.linspace(0, np.abs(a).max(), n):
        s = soft_threshold(a, lam)
        nrm = np.linalg.norm(s)
        if nrm > 0 and np.abs(s).sum() / nrm <= c:
            best = max(best, float(a @ s) / nrm)
    return best


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-5, 5)), st.floats(1.0, math.sqrt(8)))
def test_l1_update_feasible_and_optimal(a, c):
    u = l1_unit_update(a, c)
    if not np.any(a):
        assert not np.any(u)
        return
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert np.abs(u).sum() <= c + 1e-9
    assert a @ u >= best_by_sweep(a, c) - 1e-3 * np.abs(a).max()


def test_l1_update_inactive_and_extreme():
    a = np.array([3.0, -1.0, 2.0, 0.5])
    np.testing.assert_allclose(l1_unit_update(a, 2.0), a / np.linalg.norm(a))
    u = l1_unit_update(a, 1.0)
    assert np.count_nonzero(u) == 1 and u[0] == pytest.approx(1.0)


def test_c_sqrt_p_matches_svd():
    X = make_rng(0).standard_normal((40, 12))
    f = spc(X, SpcConfig(c=math.sqrt(40), n_factors=4, conv_tol=1e-12, max_iter=5000))
    ref = svd_truncated(X, 4)
    np.testing.assert_allclose(f.sigma, ref.sigma, rtol=1e-6)
    np.testing.assert_allclose(np.abs(f.U[:, 0] @ ref.U[:, 0]), 1.0, atol=1e-8)
    assert np.abs(f.V.T @ f.V - np.eye(4)).max() < 1e-10


def test_sparse_support_is_inside_truth_but_imperfect():
    rng = make_rng(1)
    P, N, L = 5000, 32, 64
    sup = np.sort(rng.choice(P, L, replace=False))
    u = np.zeros(P)
    u[sup] = rng.standard_normal(L)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(N)
    v /= np.linalg.norm(v)
    X = np.outer(u, v)
    f = spc(X, SpcConfig(c=2.0))
    assert set(np.flatnonzero(f.U[:, 0])) <= set(sup)
    assert np.abs(f.U[:, 0]).sum() <= 2.0 + 1e-9
    assert np.linalg.norm(X - f.sigma[0] * np.outer(f.U[:, 0], f.V[:, 0])) > 0.1


@pytest.mark.parametrize("c, P", [(0.5, 10), (4.0, 10)])
def test_c_out_of_range(c, P):
    with pytest.raises(ValueError, match="outside"):
        spc(np.ones((P, 3)), SpcConfig(c=c))


@pytest.mark.parametrize("kwargs", [dict(n_factors=0), dict(max_iter=0), dict(conv_tol=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SpcConfig(c=2.0, **kwargs).validate(10)


def test_nonconvergence_flagged(caplog):
    X = make_rng(2).standard_normal((50, 10))
    with caplog.at_level(logging.WARNING, logger="smssvd.spc"):
        f = spc(X, SpcConfig(c=2.0, n_factors=2, max_iter=1, conv_tol=1e-15))
    assert f.converged == (False, False)
    assert "did not converge" in caplog.text


def test_rank_deficient_stops_early():
    X = np.outer(np.arange(1.0, 7.0), [1.0, 2.0, 0.5])
    f = spc(X, SpcConfig(c=math.sqrt(6), n_factors=3))
    assert f.sigma[0] == pytest.approx(np.linalg.norm(X))
    assert np.all(np.abs(f.sigma[1:]) < 1e-12)
