"""Dense matrix containers, truncated SVD, projections and rank.

Conventions used throughout the package:

* Data matrices are ``P x N``: rows are variables, columns are samples.
* Singular vectors follow a fixed sign rule so results are reproducible:
  in every column of ``V`` the entry of largest magnitude is nonnegative
  (lowest index wins on ties), and ``U`` columns are flipped with ``V``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Default relative tolerance for "nonzero" singular values.
RANK_TOL = 1e-10

_ORTHO_CHECK_TOL = 1e-8


def _as_finite_matrix(X, name="X") -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


@dataclass(frozen=True)
class DataMatrix:
    """A ``P x N`` matrix of variables (rows) by samples (columns).

    Parameters
    ----------
    values : ndarray, shape (P, N)
        Finite real entries.
    variable_ids, sample_ids : sequence of str
        Distinct identifiers, one per row and per column.
    """

    values: np.ndarray
    variable_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        A = _as_finite_matrix(self.values, "values")
        P, N = A.shape
        if P < 1 or N < 1:
            raise ValueError("a data matrix needs at least one row and one column")
        vids = tuple(str(v) for v in self.variable_ids)
        sids = tuple(str(s) for s in self.sample_ids)
        if len(vids) != P or len(sids) != N:
            raise ValueError(
                f"id counts ({len(vids)}, {len(sids)}) do not match shape {A.shape}"
            )
        if len(set(vids)) != P:
            raise ValueError("variable_ids are not distinct")
        if len(set(sids)) != N:
            raise ValueError("sample_ids are not distinct")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "values", A)
        object.__setattr__(self, "variable_ids", vids)
        object.__setattr__(self, "sample_ids", sids)

    @classmethod
    def from_array(cls, values, variable_ids=None, sample_ids=None) -> "DataMatrix":
        A = np.asarray(values, dtype=float)
        if A.ndim != 2:
            raise ValueError(f"values must be two-dimensional, got shape {A.shape}")
        P, N = A.shape
        if variable_ids is None:
            variable_ids = [f"v{i + 1}" for i in range(P)]
        if sample_ids is None:
            sample_ids = [f"s{j + 1}" for j in range(N)]
        return cls(A, tuple(variable_ids), tuple(sample_ids))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def center_rows(self) -> "DataMatrix":
        """Return a copy with every row shifted to zero mean."""
        A = self.values - self.values.mean(axis=1, keepdims=True)
        return DataMatrix(A, self.variable_ids, self.sample_ids)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD factors ``U diag(sigma) V^T`` with ``d`` components."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T

    def orthonormality_error(self) -> float:
        d = self.d
        if d == 0:
            return 0.0
        eye = np.eye(d)
        return float(max(np.abs(self.U.T @ self.U - eye).max(),
                         np.abs(self.V.T @ self.V - eye).max()))


def apply_sign_convention(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip column pairs so each column of ``V`` has a nonnegative peak entry."""
    U = np.array(U, dtype=float, copy=True)
    V = np.array(V, dtype=float, copy=True)
    if V.shape[1] == 0:
        return U, V
    # argmax returns the first index on ties
    peak = np.argmax(np.abs(V), axis=0)
    flip = V[peak, np.arange(V.shape[1])] < 0
    U[:, flip] *= -1.0
    V[:, flip] *= -1.0
    return U, V


def svd_truncated(X, d: int) -> SvdFactors:
    """Leading ``d`` singular triplets of ``X``.

    By Eckart-Young, ``U diag(sigma) V^T`` is the best rank-``d``
    approximation of ``X`` in Frobenius and spectral norm.

    Parameters
    ----------
    X : array_like, shape (P, N)
    d : int
        Number of components, ``0 <= d <= min(P, N)``.

    Returns
    -------
    SvdFactors
        Factors under the package sign convention.
    """
    A = _as_finite_matrix(X)
    d = int(d)
    if d < 0 or d > min(A.shape):
        raise ValueError(f"d={d} out of range for a matrix of shape {A.shape}")
    if d == 0:
        return SvdFactors(np.zeros((A.shape[0], 0)), np.zeros(0), np.zeros((A.shape[1], 0)))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    U, V = apply_sign_convention(U[:, :d], Vt[:d].T)
    return SvdFactors(U, s[:d].copy(), V)


def singular_values(X) -> np.ndarray:
    A = _as_finite_matrix(X)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def numerical_rank(X, rel_tol: float = RANK_TOL, scale: float | None = None) -> int:
    """Number of singular values above ``rel_tol * scale``.

    ``scale`` defaults to the largest singular value of ``X``. Pass the norm
    of a parent matrix when ``X`` is a deflated remainder that may be zero
    up to rounding.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    s = singular_values(X)
    if scale is None:
        scale = s[0] if s.size else 0.0
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * scale))


def check_orthonormal_columns(U, tol: float = _ORTHO_CHECK_TOL, name="U") -> np.ndarray:
    U = _as_finite_matrix(U, name)
    if U.shape[1] == 0:
        return U
    err = np.abs(U.T @ U - np.eye(U.shape[1])).max()
    if err > tol:
        raise ValueError(f"{name} is not column-orthonormal (max |{name}^T{name} - I| = {err:.3g})")
    return U


def project_complement(X, U) -> np.ndarray:
    """Compute ``(I - U U^T) X`` for a column-orthonormal ``U``."""
    A = _as_finite_matrix(X)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != A.shape[0]:
        raise ValueError(f"U of shape {U.shape} does not match X with {A.shape[0]} rows")
    U = check_orthonormal_columns(U)
    if U.shape[1] == 0:
        return A.copy()
    return A - U @ (U.T @ A)


def orthonormalize(A, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (via QR) for the column span of ``A``.

    Raises ``ValueError`` when the columns are numerically dependent.
    """
    A = _as_finite_matrix(A, "A")
    if A.shape[1] == 0:
        return A.copy()
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    if diag.min() <= rel_tol * max(diag.max(), np.finfo(float).tiny):
        raise ValueError("columns are linearly dependent")
    return Q


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``seed`` may be an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def substream(seed, *key: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by ``key`` (independent of call order)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


__all__ = [
    "RANK_TOL",
    "DataMatrix",
    "SvdFactors",
    "apply_sign_convention",
    "svd_truncated",
    "singular_values",
    "numerical_rank",
    "check_orthonormal_columns",
    "project_complement",
    "orthonormalize",
    "make_rng",
    "substream",
]
