"""SVD of a linear map restricted to a subspace of sample space.

Given ``X : R^N -> R^P`` and an orthonormal basis ``B`` (``N x d``) of a
subspace ``Pi`` that avoids the kernel of ``X``, the restricted SVD is
obtained by factoring ``X B = W_u S W^T`` and rotating the basis,
``V = B W``. The resulting triplets satisfy ``X V = U S`` and the deflation
``(I - U U^T) X`` lowers the rank of ``X`` by exactly ``d``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    RANK_TOL,
    SvdFactors,
    _as_finite_matrix,
    apply_sign_convention,
    check_orthonormal_columns,
    numerical_rank,
)


def restrict_svd(X, B, rel_tol: float = RANK_TOL) -> SvdFactors:
    """SVD of ``X`` restricted to the column span of ``B``.

    Parameters
    ----------
    X : array_like, shape (P, N)
    B : array_like, shape (N, d)
        Column-orthonormal basis of the subspace. Use
        :func:`smssvd.linalg.orthonormalize` for a general spanning set.
    rel_tol : float
        The subspace must avoid the kernel of ``X`` in the sense
        ``sigma_min(X B) > rel_tol * sigma_max(X)``.

    Returns
    -------
    SvdFactors
        ``U`` (P x d), ``sigma`` (d,), ``V`` (N x d) with ``span(V) = span(B)``.
    """
    A = _as_finite_matrix(X)
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != A.shape[1]:
        raise ValueError(f"basis of shape {B.shape} does not match X with {A.shape[1]} columns")
    d = B.shape[1]
    if d < 1 or d > A.shape[1]:
        raise ValueError(f"subspace dimension {d} out of range")
    check_orthonormal_columns(B, name="B")

    XB = A @ B
    Wu, s, Wt = np.linalg.svd(XB, full_matrices=False)
    smax = np.linalg.norm(A, 2)
    if smax == 0.0 or s[-1] <= rel_tol * smax:
        raise np.linalg.LinAlgError(
            "subspace intersects the kernel of X (restricted map is rank deficient)"
        )
    U, V = apply_sign_convention(Wu, B @ Wt.T)
    return SvdFactors(U, s, V)


@dataclass(frozen=True)
class Theorem1Report:
    """Max-abs residuals of the restricted-SVD identities.

    ``kernel``: ``V`` lies in the row space of ``X``.
    ``cokernel``: ``U`` lies in the column space of ``X``.
    ``xv``: ``X V - U S``.
    ``utx``: ``U^T X - S V^T - U^T X (I - V V^T)``.
    ``deflation``: ``(I - UU^T) X (I - VV^T) - (I - UU^T) X``.
    ``rank_gap``: ``rank X - d - rank (I - UU^T) X`` (an integer).
    ``utx_simple``: ``U^T X - S V^T``; zero only when ``V`` spans a set
    of right singular vectors of ``X``.
    """

    kernel: float
    cokernel: float
    xv: float
    utx: float
    deflation: float
    rank_gap: int
    utx_simple: float

    def identities(self) -> dict[str, float]:
        return {
            "kernel": self.kernel,
            "cokernel": self.cokernel,
            "xv": self.xv,
            "utx": self.utx,
            "deflation": self.deflation,
        }


def _range_projector(A, rel_tol):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.count_nonzero(s > rel_tol * s[0]))
    return U[:, :r], Vt[:r].T


def check_theorem1(X, f: SvdFactors, rel_tol: float = RANK_TOL) -> Theorem1Report:
    """Evaluate every restricted-SVD identity for ``X`` and factors ``f``."""
    A = _as_finite_matrix(X)
    U, s, V = f.U, f.sigma, f.V
    d = s.shape[0]
    col, row = _range_projector(A, rel_tol)
    I_N = np.eye(A.shape[1])

    kernel = np.abs(V - row @ (row.T @ V)).max(initial=0.0)
    cokernel = np.abs(U - col @ (col.T @ U)).max(initial=0.0)
    xv = np.abs(A @ V - U * s).max(initial=0.0)
    UtX = U.T @ A
    off = I_N - V @ V.T
    utx = np.abs(UtX - s[:, None] * V.T - UtX @ off).max(initial=0.0)
    deflated = A - U @ UtX
    deflation = np.abs(deflated @ off - deflated).max(initial=0.0)
    scale = np.linalg.norm(A, 2)
    rank_gap = (numerical_rank(A, rel_tol, scale)
                - d - numerical_rank(deflated, rel_tol, scale))
    utx_simple = np.abs(UtX - s[:, None] * V.T).max(initial=0.0)
    return Theorem1Report(
        float(kernel), float(cokernel), float(xv), float(utx), float(deflation),
        int(rank_gap), float(utx_simple),
    )


__all__ = ["restrict_svd", "check_theorem1", "Theorem1Report"]
