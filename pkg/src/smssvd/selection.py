"""Variance filtering and projection-score driven choice of ``(S, d)``.

A selection keeps the ``ceil(f * P)`` rows with the largest sample variance.
For a filtered matrix ``A = S^T X`` with squared singular values
``s_1 >= s_2 >= ...`` the statistic

    tau_d(A) = sqrt(sum_{i<=d} s_i / sum_i s_i)

measures the fraction of energy captured by a rank-``d`` approximation.
The projection score compares it with its mean over null matrices:

    score(S, d) = tau_d(S^T X) - E_null[tau_d].

Two null models are available:

``"permutation"`` (default)
    every row of ``S^T X`` is permuted independently across samples, which
    keeps each variable's distribution and destroys the correlation
    between variables. Sample directions already removed by deflation are
    projected out of the permuted matrix.
``"gaussian"``
    i.i.d. standard Gaussian ``L x (N - n_consumed)`` matrices. ``tau_d`` is
    scale invariant, but this null ignores that the kept rows have unequal
    variances, so it rewards padding a selection with low-variance rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import DataMatrix, _as_finite_matrix, make_rng, substream

DEFAULT_NULL_SAMPLES = 20
NULL_MODELS = ("permutation", "gaussian")


def _values(X) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.values
    return _as_finite_matrix(X)


@dataclass(frozen=True)
class SelectionMap:
    """Row-selection ``S`` (``P x L``) stored as sorted kept row indices."""

    kept_indices: np.ndarray
    n_variables: int

    def __post_init__(self):
        idx = np.asarray(self.kept_indices, dtype=np.int64).reshape(-1)
        P = int(self.n_variables)
        if idx.size < 1:
            raise ValueError("a selection must keep at least one variable")
        if idx.size > P or idx[0] < 0 or idx[-1] >= P or np.any(np.diff(idx) <= 0):
            raise ValueError("kept indices must be strictly increasing and within range")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "kept_indices", idx)
        object.__setattr__(self, "n_variables", P)

    @classmethod
    def full(cls, P: int) -> "SelectionMap":
        return cls(np.arange(P), P)

    @property
    def L(self) -> int:
        return int(self.kept_indices.size)

    def apply(self, X) -> np.ndarray:
        """``S^T X``: the kept rows of ``X``."""
        return np.asarray(X)[self.kept_indices]

    def matrix(self) -> np.ndarray:
        S = np.zeros((self.n_variables, self.L))
        S[self.kept_indices, np.arange(self.L)] = 1.0
        return S

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n_variables, dtype=bool)
        m[self.kept_indices] = True
        return m


@dataclass(frozen=True)
class ProjectionScoreRecord:
    keep_fraction: float
    L: int
    d: int
    tau_observed: float
    tau_null_mean: float
    tau_null_std: float
    score: float
    null_samples: int

    def to_dict(self) -> dict:
        return {
            "keep_fraction": self.keep_fraction,
            "L": self.L,
            "d": self.d,
            "tau_observed": self.tau_observed,
            "tau_null_mean": self.tau_null_mean,
            "tau_null_std": self.tau_null_std,
            "score": self.score,
            "null_samples": self.null_samples,
        }


def keep_count(P: int, keep_fraction: float) -> int:
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    # round first so that e.g. 0.1 * 100 is not pushed to 11 by rounding noise
    return int(math.ceil(round(keep_fraction * P, 9)))


def row_variances(X) -> np.ndarray:
    A = _values(X)
    if A.shape[1] < 2:
        raise ValueError("variance needs at least two samples")
    return A.var(axis=1, ddof=1)


def variance_filter(X, keep_fraction: float) -> SelectionMap:
    """Keep the ``ceil(keep_fraction * P)`` rows of largest variance.

    Ties are resolved in favour of the lower row index.
    """
    var = row_variances(X)
    P = var.size
    n = keep_count(P, keep_fraction)
    if n < 1:
        raise ValueError("keep_fraction keeps no variables")
    order = np.lexsort((np.arange(P), -var))
    return SelectionMap(np.sort(order[:n]), P)


def default_grid(P: int, d_max: int) -> list[float]:
    """Fractions 1, 1/2, 1/4, ... while at least ``max(10, d_max + 1)`` rows remain."""
    floor = max(10, d_max + 1)
    grid = [1.0]
    f = 0.5
    while keep_count(P, f) >= floor:
        grid.append(f)
        f /= 2
    return grid


def default_d_max(N: int) -> int:
    return max(1, min(N - 1, 20))


def squared_singular_values(A) -> np.ndarray:
    """Squared singular values of ``A`` in decreasing order (via the small Gram)."""
    A = np.asarray(A, dtype=float)
    G = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    ev = np.linalg.eigvalsh(G)[::-1]
    return np.clip(ev, 0.0, None)


def tau_profile(s2: np.ndarray) -> np.ndarray:
    """``tau_d`` for ``d = 1 .. len(s2)``; the last axis holds the spectrum."""
    s2 = np.asarray(s2, dtype=float)
    total = s2.sum(axis=-1, keepdims=True)
    c = np.cumsum(s2, axis=-1)
    return np.sqrt(np.minimum(c / total, 1.0))


def null_spectra(L: int, N: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Squared singular values of ``draws`` standard Gaussian ``L x N`` matrices.

    ``G^T G`` (or ``G G^T``) is Wishart distributed, so the small Gram is
    drawn directly with the Bartlett decomposition instead of forming ``G``.
    Returns an array of shape ``(draws, min(L, N))``.
    """
    n, p = max(L, N), min(L, N)
    A = np.zeros((draws, p, p))
    rows, cols = np.tril_indices(p, -1)
    A[:, rows, cols] = rng.standard_normal((draws, rows.size))
    diag = np.sqrt(rng.chisquare(n - np.arange(p), size=(draws, p)))
    A[:, np.arange(p), np.arange(p)] = diag
    W = A @ np.swapaxes(A, 1, 2)
    ev = np.linalg.eigvalsh(W)[:, ::-1]
    return np.clip(ev, 0.0, None)


def permutation_spectra(A, draws: int, rng: np.random.Generator,
                        consumed: np.ndarray | None = None) -> np.ndarray:
    """Squared singular values of ``draws`` row-permuted copies of ``A``.

    ``consumed`` (``N x t``, orthonormal) is projected out of every copy.
    """
    A = np.asarray(A, dtype=float)
    out = []
    for _ in range(draws):
        G = rng.permuted(A, axis=1)
        if consumed is not None and consumed.shape[1]:
            G = G - (G @ consumed) @ consumed.T
        out.append(squared_singular_values(G))
    return np.array(out)


def _null_taus(A, n_eff, draws, rng, null_model, consumed):
    if null_model == "permutation":
        return tau_profile(permutation_spectra(A, draws, rng, consumed))
    if null_model == "gaussian":
        return tau_profile(null_spectra(A.shape[0], n_eff, draws, rng))
    raise ValueError(f"unknown null model {null_model!r}; expected one of {NULL_MODELS}")


def _consumed(n_consumed, consumed, N):
    if consumed is None:
        return int(n_consumed), None
    consumed = np.asarray(consumed, dtype=float).reshape(N, -1)
    return consumed.shape[1], consumed


def _score_records(A, keep_fraction, d_values, rng, null_samples, n_eff,
                   null_model="permutation", consumed=None):
    s2 = squared_singular_values(A)
    if s2.sum() <= 0.0:
        raise ValueError("the selected submatrix is identically zero")
    tau_obs = tau_profile(s2)
    L = A.shape[0]
    null = _null_taus(A, n_eff, null_samples, rng, null_model, consumed)
    mean = null.mean(axis=0)
    std = null.std(axis=0, ddof=1) if null_samples > 1 else np.zeros_like(mean)
    out = []
    for d in d_values:
        t = float(tau_obs[min(d, tau_obs.size) - 1])
        m = float(mean[d - 1])
        out.append(ProjectionScoreRecord(
            float(keep_fraction), L, int(d), t, m, float(std[d - 1]), t - m, int(null_samples)
        ))
    return out


def projection_score(X, sel: SelectionMap, d: int, rng: np.random.Generator,
                     null_samples: int = DEFAULT_NULL_SAMPLES, n_consumed: int = 0,
                     keep_fraction: float = float("nan"), null_model: str = "permutation",
                     consumed: np.ndarray | None = None) -> ProjectionScoreRecord:
    """Projection score of the rows ``sel`` for a rank-``d`` approximation.

    Parameters
    ----------
    X : DataMatrix or array_like, shape (P, N)
    sel : SelectionMap
    d : int
    rng : numpy.random.Generator
    null_samples : int
        Number of null matrices averaged.
    n_consumed : int
        Sample-space dimensions already removed by deflation; the null has
        ``N - n_consumed`` effective columns. Ignored when ``consumed`` is given.
    keep_fraction : float
        Only recorded.
    null_model : {"permutation", "gaussian"}
    consumed : ndarray, shape (N, t), optional
        Orthonormal basis of the removed sample directions.
    """
    A = sel.apply(_values(X))
    t, consumed = _consumed(n_consumed, consumed, A.shape[1])
    n_eff = A.shape[1] - t
    if null_samples < 1:
        raise ValueError("null_samples must be at least 1")
    if d < 1 or d > min(sel.L, n_eff):
        raise ValueError(f"d={d} must lie in [1, min(L, N_eff)] = [1, {min(sel.L, n_eff)}]")
    return _score_records(A, keep_fraction, [d], rng, null_samples, n_eff,
                          null_model, consumed)[0]


def _shared_permutation_taus(A, sels, null_samples, rng, consumed):
    """Null ``tau`` profiles for nested selections from shared permutations.

    Each draw permutes every row of ``A`` once and all selections read their
    rows from that same permuted matrix. Scores of different subsets are then
    compared under common random numbers, which removes most of the null
    noise from their differences.
    """
    taus = [[] for _ in sels]
    for _ in range(null_samples):
        G = rng.permuted(A, axis=1)
        if consumed is not None and consumed.shape[1]:
            G = G - (G @ consumed) @ consumed.T
        for i, sel in enumerate(sels):
            taus[i].append(tau_profile(squared_singular_values(sel.apply(G))))
    return [np.array(t) for t in taus]


def optimize_selection(X, grid: Sequence[float], d_max: int, seed,
                       null_samples: int = DEFAULT_NULL_SAMPLES, n_consumed: int = 0,
                       d_min: int = 1, null_model: str = "permutation",
                       consumed: np.ndarray | None = None):
    """Maximise the projection score over keep fractions and dimensions.

    Dimensions ``d_min .. min(d_max, L, N - n_consumed)`` are searched.

    With the permutation null all grid points share the same permuted
    matrices, drawn from ``seed``. With the Gaussian null each grid point
    draws from its own substream of ``seed`` (keyed by position in
    ``grid``). Either way results do not depend on evaluation order. Ties
    go to the larger ``L``, then the smaller ``d``.

    Returns
    -------
    selection : SelectionMap
    d : int
    record : ProjectionScoreRecord
    """
    A = _values(X)
    if len(grid) == 0:
        raise ValueError("the keep-fraction grid is empty")
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    if null_model not in NULL_MODELS:
        raise ValueError(f"unknown null model {null_model!r}; expected one of {NULL_MODELS}")
    if null_samples < 1:
        raise ValueError("null_samples must be at least 1")
    t, consumed = _consumed(n_consumed, consumed, A.shape[1])
    n_eff = A.shape[1] - t
    lo = max(d_min, 1)

    cands = []  # (grid index, fraction, selection, observed taus, d range)
    for j, f in enumerate(grid):
        sel = variance_filter(A, f)
        top = min(d_max, sel.L, n_eff)
        if top < lo:
            continue
        s2 = squared_singular_values(sel.apply(A))
        if s2.sum() <= 0.0:
            continue
        cands.append((j, f, sel, tau_profile(s2), range(lo, top + 1)))
    if not cands:
        raise ValueError("no feasible (keep_fraction, d) pair")

    if null_model == "permutation":
        nulls = _shared_permutation_taus(A, [c[2] for c in cands], null_samples,
                                         make_rng(substream(seed, 0)), consumed)
    else:
        nulls = [tau_profile(null_spectra(c[2].L, n_eff, null_samples,
                                          make_rng(substream(seed, c[0]))))
                 for c in cands]

    best = None
    for (j, f, sel, tau_obs, ds), null in zip(cands, nulls):
        mean = null.mean(axis=0)
        std = null.std(axis=0, ddof=1) if null_samples > 1 else np.zeros_like(mean)
        for d in ds:
            t_obs = float(tau_obs[min(d, tau_obs.size) - 1])
            r = ProjectionScoreRecord(float(f), sel.L, int(d), t_obs, float(mean[d - 1]),
                                      float(std[d - 1]), t_obs - float(mean[d - 1]),
                                      int(null_samples))
            key = (r.score, r.L, -r.d)
            if best is None or key > best[0]:
                best = (key, sel, r)
    _, sel, rec = best
    return sel, rec.d, rec


__all__ = [
    "SelectionMap",
    "ProjectionScoreRecord",
    "keep_count",
    "row_variances",
    "variance_filter",
    "default_grid",
    "default_d_max",
    "squared_singular_values",
    "tau_profile",
    "null_spectra",
    "permutation_spectra",
    "NULL_MODELS",
    "projection_score",
    "optimize_selection",
]
