"""Iterative submatrix-selection SVD.

Each iteration ``k`` works on the deflated matrix ``X_k``:

1. pick a row subset ``S_k`` and dimension ``d_k`` maximising the
   projection score of ``S_k^T X_k``;
2. take the right singular subspace ``Pi_k`` of the rank-``d_k`` truncated
   SVD of ``S_k^T X_k`` and compute the SVD of ``X_k`` restricted to it;
3. deflate, ``X_{k+1} = (I - U_k U_k^T) X_k``.

Blocks are concatenated into ``U diag(sigma) V^T`` with orthonormal ``U``
and ``V``. Without variable selection the result is the ordinary SVD.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .linalg import (
    RANK_TOL,
    DataMatrix,
    SvdFactors,
    _as_finite_matrix,
    numerical_rank,
    project_complement,
    substream,
    svd_truncated,
)
from .restricted import restrict_svd
from .selection import (
    DEFAULT_NULL_SAMPLES,
    NULL_MODELS,
    ProjectionScoreRecord,
    SelectionMap,
    default_d_max,
    default_grid,
    optimize_selection,
)

log = logging.getLogger(__name__)

STOP_ZERO = "zero residual"
STOP_BUDGET = "component budget"
STOP_SCORE = "no informative subset"
STOP_EXHAUSTED = "sample space exhausted"

_ZERO_REL = 1e-8


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the decomposition; ``None`` means "derive from the data".

    Attributes
    ----------
    max_components : int
        Stop once the blocks hold this many components; the last block is
        clamped so the total never exceeds it.
    min_score : float
        Stop when the best projection score is ``<= min_score``.
    null_samples : int
        Null matrices drawn per iteration for the projection score.
    d_max : int or None
        Largest block dimension searched (default ``min(N - 1, 20)``).
    keep_fraction_grid : sequence of float or None
        Variance-filter fractions (default ``1, 1/2, 1/4, ...``).
    rank_tol : float
        Relative tolerance for numerical rank decisions.
    seed : int
        Root seed; iteration ``k`` draws from substream ``k`` only, so a
        block does not depend on settings that act after it.
    fixed_d : int or None
        Force every block to this dimension (clamped to the available rank).
    null_model : {"permutation", "gaussian"}
        Null distribution of the projection score.
    """

    max_components: int = 20
    min_score: float = 0.0
    null_samples: int = DEFAULT_NULL_SAMPLES
    d_max: int | None = None
    keep_fraction_grid: tuple[float, ...] | None = None
    rank_tol: float = RANK_TOL
    seed: int = 0
    fixed_d: int | None = None
    null_model: str = "permutation"

    def __post_init__(self):
        if self.max_components < 1:
            raise ValueError("max_components must be at least 1")
        if self.null_samples < 1:
            raise ValueError("null_samples must be at least 1")
        if self.d_max is not None and self.d_max < 1:
            raise ValueError("d_max must be at least 1")
        if self.fixed_d is not None and self.fixed_d < 1:
            raise ValueError("fixed_d must be at least 1")
        if self.rank_tol <= 0:
            raise ValueError("rank_tol must be positive")
        if self.null_model not in NULL_MODELS:
            raise ValueError(f"null_model must be one of {NULL_MODELS}")
        if self.keep_fraction_grid is not None:
            grid = tuple(float(f) for f in self.keep_fraction_grid)
            if not grid or any(not 0.0 < f <= 1.0 for f in grid):
                raise ValueError("keep fractions must lie in (0, 1]")
            object.__setattr__(self, "keep_fraction_grid", grid)

    def to_dict(self) -> dict:
        return {
            "max_components": self.max_components,
            "min_score": self.min_score,
            "null_samples": self.null_samples,
            "d_max": self.d_max,
            "keep_fraction_grid": (list(self.keep_fraction_grid)
                                   if self.keep_fraction_grid is not None else None),
            "rank_tol": self.rank_tol,
            "seed": self.seed,
            "fixed_d": self.fixed_d,
            "null_model": self.null_model,
        }


@dataclass(frozen=True)
class DecompositionBlock:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    selection: SelectionMap
    score_record: ProjectionScoreRecord
    iteration_index: int
    residual: float = 0.0

    @property
    def d(self) -> int:
        return int(self.sigma.size)

    def matrix(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


@dataclass(frozen=True)
class Decomposition:
    """Ordered blocks of one run plus the reason the iteration stopped."""

    blocks: tuple[DecompositionBlock, ...]
    source_dims: tuple[int, int]
    stop_reason: str
    config: EngineConfig = field(default_factory=EngineConfig)

    @property
    def total_d(self) -> int:
        return sum(b.d for b in self.blocks)

    @property
    def U(self) -> np.ndarray:
        return np.hstack([b.U for b in self.blocks] or [np.zeros((self.source_dims[0], 0))])

    @property
    def sigma(self) -> np.ndarray:
        return np.concatenate([b.sigma for b in self.blocks] or [np.zeros(0)])

    @property
    def V(self) -> np.ndarray:
        return np.hstack([b.V for b in self.blocks] or [np.zeros((self.source_dims[1], 0))])

    def block_ids(self) -> np.ndarray:
        """Block index of every concatenated component."""
        return np.concatenate([np.full(b.d, i) for i, b in enumerate(self.blocks)]
                              or [np.zeros(0, dtype=int)]).astype(int)

    def components(self) -> list[tuple[np.ndarray, float, np.ndarray]]:
        """Rank-1 terms ``(u, s, v)`` in block order."""
        return [(b.U[:, i], float(b.sigma[i]), b.V[:, i])
                for b in self.blocks for i in range(b.d)]

    def sample_coordinates(self) -> np.ndarray:
        """``V diag(sigma)``, the low-dimensional sample representation."""
        return self.V * self.sigma

    def orthogonality_error(self) -> float:
        d = self.total_d
        if d == 0:
            return 0.0
        eye = np.eye(d)
        U, V = self.U, self.V
        return float(max(np.abs(U.T @ U - eye).max(), np.abs(V.T @ V - eye).max()))


def lift_selection(Xk, sel: SelectionMap, d: int, rel_tol: float = RANK_TOL,
                   V_prev: np.ndarray | None = None) -> SvdFactors:
    """Lift the rank-``d`` SVD of ``S^T X_k`` to all variables.

    The right singular subspace of the filtered matrix defines ``Pi`` and
    the SVD of ``X_k`` restricted to ``Pi`` is returned. ``V_prev`` holds
    sample directions of earlier blocks; ``Pi`` is re-orthogonalised
    against them to keep rounding from accumulating across iterations.
    """
    A = _as_finite_matrix(Xk)
    Vt = svd_truncated(sel.apply(A), d).V
    if V_prev is not None and V_prev.shape[1] > 0:
        Vt = Vt - V_prev @ (V_prev.T @ Vt)
        Vt, _ = np.linalg.qr(Vt)
    return restrict_svd(A, Vt, rel_tol)


def smssvd(X, config: EngineConfig | None = None) -> Decomposition:
    """Decompose ``X`` into orthogonal low-rank blocks.

    Parameters
    ----------
    X : DataMatrix or array_like, shape (P, N)
    config : EngineConfig, optional

    Returns
    -------
    Decomposition
        Blocks in discovery order; ``stop_reason`` records why the
        iteration ended.
    """
    cfg = config or EngineConfig()
    A = X.values if isinstance(X, DataMatrix) else _as_finite_matrix(X)
    P, N = A.shape
    d_max = cfg.d_max if cfg.d_max is not None else default_d_max(N)
    grid = cfg.keep_fraction_grid if cfg.keep_fraction_grid is not None else tuple(default_grid(P, d_max))
    budget = min(cfg.max_components, P, N)

    norm0 = np.linalg.norm(A)
    blocks: list[DecompositionBlock] = []
    Xk = np.array(A, dtype=float, copy=True)
    total = 0
    k = 0
    stop = STOP_BUDGET
    while True:
        if norm0 == 0.0 or np.linalg.norm(Xk) < _ZERO_REL * norm0:
            stop = STOP_ZERO
            break
        if total >= budget:
            stop = STOP_BUDGET
            break
        n_eff = N - total
        if n_eff < 1:
            stop = STOP_EXHAUSTED
            break
        room = budget - total
        top = min(cfg.fixed_d or d_max, room, n_eff)
        lo = top if cfg.fixed_d is not None else 1
        V_prev = np.hstack([b.V for b in blocks]) if blocks else np.zeros((N, 0))
        sel, d, rec = optimize_selection(Xk, grid, top, substream(cfg.seed, k),
                                         cfg.null_samples, d_min=lo,
                                         null_model=cfg.null_model, consumed=V_prev)
        if rec.score <= cfg.min_score:
            stop = STOP_SCORE
            break
        scale = np.linalg.norm(Xk, 2)
        d = min(d, numerical_rank(sel.apply(Xk), cfg.rank_tol, scale))
        if d < 1:
            stop = STOP_ZERO
            break
        f = lift_selection(Xk, sel, d, cfg.rank_tol, V_prev)
        X_next = project_complement(Xk, f.U)
        UtX = f.U.T @ Xk
        residual = float(np.linalg.norm(UtX - UtX @ f.V @ f.V.T))
        blocks.append(DecompositionBlock(f.U, f.sigma, f.V, sel, rec, k, residual))
        log.info("block %d: L=%d d=%d score=%.4g sigma1=%.4g", k, sel.L, d, rec.score, f.sigma[0])
        total += d
        Xk = X_next
        k += 1
    return Decomposition(tuple(blocks), (P, N), stop, cfg)


def reconstruct(dec: Decomposition, block_subset: Iterable[int] | None = None) -> np.ndarray:
    """Sum of ``U_k diag(sigma_k) V_k^T`` over the chosen blocks (all by default)."""
    P, N = dec.source_dims
    out = np.zeros((P, N))
    idx = range(len(dec.blocks)) if block_subset is None else block_subset
    for i in idx:
        if not 0 <= i < len(dec.blocks):
            raise IndexError(f"block index {i} out of range")
        out += dec.blocks[i].matrix()
    return out


def residual_norm(dec: Decomposition, X) -> float:
    """``||X - U diag(sigma) V^T||_F``."""
    A = X.values if isinstance(X, DataMatrix) else _as_finite_matrix(X)
    if A.shape != dec.source_dims:
        raise ValueError(f"X has shape {A.shape}, decomposition expects {dec.source_dims}")
    return float(np.linalg.norm(A - reconstruct(dec)))


def block_residuals(dec: Decomposition) -> list[float]:
    """Per-block ``||U_k^T X_k (I - V_k V_k^T)||_F``; all zero iff the blocks sum to X."""
    return [b.residual for b in dec.blocks]


@dataclass(frozen=True)
class Theorem2Report:
    """Max-abs residuals of the lifted-selection identities.

    ``kernel``: ``V`` lies in the row space of ``X_k``.
    ``filtered``: ``S^T U S V^T`` minus the truncated SVD of ``S^T X_k``.
    ``span_v``: ``V V^T - Vt Vt^T``.
    ``span_u``: part of ``S^T U`` outside the span of the filtered ``U``.
    ``norm_slack``: ``||Sigma||_F - ||Sigma_filtered||_F`` (nonnegative when
    ``S^T S = I``).
    ``utx``: ``U^T X - S V^T - U^T (I - S S^T) X (I - V V^T)``.
    """

    kernel: float
    filtered: float
    span_v: float
    span_u: float
    norm_slack: float
    utx: float

    def identities(self) -> dict[str, float]:
        return {"kernel": self.kernel, "filtered": self.filtered, "span_v": self.span_v,
                "span_u": self.span_u, "utx": self.utx}


def check_theorem2(Xk, sel: SelectionMap, block, rel_tol: float = RANK_TOL) -> Theorem2Report:
    """Evaluate the lifted-selection identities for one block.

    ``block`` is anything with ``U``, ``sigma`` and ``V`` attributes that
    was produced from ``(Xk, sel)``.
    """
    A = _as_finite_matrix(Xk)
    U, s, V = block.U, block.sigma, block.V
    d = s.size
    ft = svd_truncated(sel.apply(A), d)

    _, sv, Vt_full = np.linalg.svd(A, full_matrices=False)
    r = int(np.count_nonzero(sv > rel_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    row = Vt_full[:r].T
    kernel = np.abs(V - row @ (row.T @ V)).max(initial=0.0)

    filtered = np.abs(sel.apply(U * s) @ V.T - ft.matrix()).max(initial=0.0)
    span_v = np.abs(V @ V.T - ft.V @ ft.V.T).max(initial=0.0)
    StU = sel.apply(U)
    span_u = np.abs(StU - ft.U @ (ft.U.T @ StU)).max(initial=0.0)
    norm_slack = float(np.linalg.norm(s) - np.linalg.norm(ft.sigma))

    off = np.eye(A.shape[1]) - V @ V.T
    unselected = A.copy()
    unselected[sel.kept_indices] = 0.0
    utx = np.abs(U.T @ A - s[:, None] * V.T - U.T @ unselected @ off).max(initial=0.0)
    return Theorem2Report(float(kernel), float(filtered), float(span_v), float(span_u),
                          norm_slack, float(utx))


__all__ = [
    "EngineConfig",
    "DecompositionBlock",
    "Decomposition",
    "lift_selection",
    "smssvd",
    "reconstruct",
    "residual_norm",
    "block_residuals",
    "check_theorem2",
    "Theorem2Report",
    "STOP_ZERO",
    "STOP_BUDGET",
    "STOP_SCORE",
    "STOP_EXHAUSTED",
]
