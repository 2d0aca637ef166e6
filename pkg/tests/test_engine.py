import numpy as np
import pytest

from smssvd.engine import (
    STOP_BUDGET,
    STOP_SCORE,
    STOP_ZERO,
    EngineConfig,
    block_residuals,
    check_theorem2,
    lift_selection,
    reconstruct,
    residual_norm,
    smssvd,
)
from smssvd.linalg import DataMatrix, make_rng, svd_truncated
from smssvd.restricted import restrict_svd
from smssvd.selection import SelectionMap, variance_filter
from smssvd.synthetic import SyntheticSpec, generate


def two_signals(seed=0, noise=0.002):
    # 960 / 32 = 30, so one grid point keeps exactly the support size
    return generate(SyntheticSpec(N=24, P=960, L=30, K=2, d=2, noise_sigma=noise, seed=seed))


def test_full_selection_coincides_with_svd():
    X = make_rng(0).standard_normal((15, 9))
    # with d = rank the score is identically 0, so the score stop is disabled
    cfg = EngineConfig(keep_fraction_grid=(1.0,), fixed_d=9, max_components=9,
                       min_score=-np.inf)
    dec = smssvd(X, cfg)
    assert len(dec.blocks) == 1 and dec.total_d == 9
    ref = svd_truncated(X, 9)
    np.testing.assert_allclose(dec.sigma, ref.sigma, rtol=1e-8)
    np.testing.assert_allclose(dec.U, ref.U, atol=1e-8)
    assert residual_norm(dec, X) < 1e-10 * np.linalg.norm(X)


def test_recovers_planted_blocks():
    gt = two_signals()
    dec = smssvd(gt.X_noisy, EngineConfig(max_components=4))
    assert [b.d for b in dec.blocks] == [2, 2]
    signal_rows = set(np.concatenate([s.support for s in gt.signals]).tolist())
    for b, sig in zip(dec.blocks, gt.signals):
        # strong rows of the other signal may be kept; noise rows may not
        assert set(b.selection.kept_indices.tolist()) <= signal_rows
        # the block reproduces its signal on the support rows
        err = np.linalg.norm(b.matrix()[sig.support] - sig.Y[sig.support])
        assert err < 0.05 * sig.strength
    assert dec.orthogonality_error() < 1e-10
    assert dec.stop_reason == STOP_BUDGET


def test_orthogonal_blocks_and_residual_bookkeeping():
    X = make_rng(1).standard_normal((80, 12))
    dec = smssvd(X, EngineConfig(min_score=-1.0, max_components=12))
    assert dec.total_d == 12
    assert dec.orthogonality_error() < 1e-8
    # X = U S V^T + sum_k U_k U_k^T X_k (I - V_k V_k^T) + X_final, and the
    # middle terms live in orthogonal column spaces
    U = dec.U
    X_final = X - U @ (U.T @ X)
    gap = np.linalg.norm(X - reconstruct(dec) - X_final)
    assert gap == pytest.approx(np.linalg.norm(block_residuals(dec)), rel=1e-8)
    assert gap > 0.1  # blocks on noise are not an exact SVD


def test_zero_matrix_is_empty():
    dec = smssvd(np.zeros((5, 4)))
    assert dec.total_d == 0 and dec.stop_reason == STOP_ZERO
    assert dec.U.shape == (5, 0) and dec.V.shape == (4, 0)
    assert dec.orthogonality_error() == 0.0


def test_pure_noise_stops_on_score():
    X = make_rng(2).standard_normal((200, 10))
    dec = smssvd(X, EngineConfig(min_score=0.2))
    assert dec.stop_reason == STOP_SCORE


def test_budget_is_never_exceeded():
    X = make_rng(3).standard_normal((40, 10))
    dec = smssvd(X, EngineConfig(max_components=5, fixed_d=3, min_score=-1.0))
    assert [b.d for b in dec.blocks] == [3, 2]


def test_rank_clamp_exact_low_rank():
    rng = make_rng(4)
    X = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 10))
    dec = smssvd(X, EngineConfig(keep_fraction_grid=(1.0,), fixed_d=5))
    assert dec.total_d == 2
    assert dec.stop_reason == STOP_ZERO


def test_deterministic_and_prefix_stable():
    gt = two_signals(seed=1)
    a = smssvd(gt.X_noisy, EngineConfig(max_components=4, seed=9))
    b = smssvd(gt.X_noisy, EngineConfig(max_components=4, seed=9))
    assert a.U.tobytes() == b.U.tobytes() and a.sigma.tobytes() == b.sigma.tobytes()
    c = smssvd(gt.X_noisy, EngineConfig(max_components=8, seed=9))
    np.testing.assert_array_equal(c.blocks[0].U, a.blocks[0].U)
    np.testing.assert_array_equal(c.blocks[1].V, a.blocks[1].V)


def test_datamatrix_input():
    X = make_rng(5).standard_normal((20, 6))
    dm = DataMatrix.from_array(X)
    a = smssvd(dm, EngineConfig(max_components=3))
    b = smssvd(X, EngineConfig(max_components=3))
    np.testing.assert_array_equal(a.U, b.U)


def test_lift_selection_is_restricted_svd():
    X = make_rng(6).standard_normal((50, 8))
    sel = variance_filter(X, 0.2)
    f = lift_selection(X, sel, 3)
    g = restrict_svd(X, svd_truncated(sel.apply(X), 3).V)
    np.testing.assert_allclose(f.matrix(), g.matrix(), atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_theorem2_identities(seed):
    rng = make_rng(seed)
    X = rng.standard_normal((30, 10))
    sel = SelectionMap(np.sort(rng.choice(30, 12, replace=False)), 30)
    f = lift_selection(X, sel, 3)
    rep = check_theorem2(X, sel, f)
    assert max(rep.identities().values()) < 1e-8 * np.linalg.norm(X)
    assert rep.norm_slack >= -1e-10


def test_reconstruct_subsets():
    gt = two_signals(seed=2)
    dec = smssvd(gt.X_noisy, EngineConfig(max_components=4))
    np.testing.assert_allclose(reconstruct(dec, [0]) + reconstruct(dec, [1]), reconstruct(dec))
    with pytest.raises(IndexError):
        reconstruct(dec, [5])
    with pytest.raises(ValueError, match="shape"):
        residual_norm(dec, np.zeros((3, 3)))


@pytest.mark.parametrize("kwargs", [
    dict(max_components=0), dict(null_samples=0), dict(d_max=0), dict(fixed_d=0),
    dict(rank_tol=0.0), dict(null_model="other"), dict(keep_fraction_grid=(0.0,)),
    dict(keep_fraction_grid=()),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EngineConfig(**kwargs)


def test_config_dict_round_trip():
    cfg = EngineConfig(keep_fraction_grid=[1, 0.5], seed=4)
    assert EngineConfig(**{**cfg.to_dict(), "keep_fraction_grid": (1.0, 0.5)}) == cfg
