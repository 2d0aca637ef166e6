"""Sparse principal components: rank-1 penalized matrix decomposition.

Each factor solves

    maximize  u^T X v   s.t.  ||u||_2 <= 1, ||u||_1 <= c, ||v||_2 <= 1,

by alternating closed-form updates. ``v`` is kept orthogonal to the
sample factors found earlier, so sample factors are orthonormal while
variable factors generally are not.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .linalg import _as_finite_matrix, svd_truncated

log = logging.getLogger(__name__)

_BISECTION_STEPS = 50


def soft_threshold(x, lam: float) -> np.ndarray:
    """``sign(x) * max(|x| - lam, 0)`` elementwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


@dataclass(frozen=True)
class SpcConfig:
    c: float
    n_factors: int = 1
    max_iter: int = 200
    conv_tol: float = 1e-7

    def validate(self, P: int) -> None:
        if not 1.0 <= self.c <= math.sqrt(P) * (1 + 1e-12):
            raise ValueError(f"c={self.c} outside [1, sqrt(P)] = [1, {math.sqrt(P):.6g}]")
        if self.n_factors < 1:
            raise ValueError("n_factors must be at least 1")
        if self.max_iter < 1 or self.conv_tol <= 0:
            raise ValueError("max_iter and conv_tol must be positive")


@dataclass(frozen=True)
class SpcFactors:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    converged: tuple[bool, ...]
    iterations: tuple[int, ...]

    def components(self) -> list[tuple[np.ndarray, float, np.ndarray]]:
        return [(self.U[:, i], float(self.sigma[i]), self.V[:, i]) for i in range(self.sigma.size)]


def l1_unit_update(a, c: float) -> np.ndarray:
    """Unit-L2 maximiser of ``u^T a`` subject to ``||u||_1 <= c``.

    The threshold is the smallest ``lam`` (found by bisection) for which
    ``soft_threshold(a, lam)`` normalised has L1 norm at most ``c``.
    """
    a = np.asarray(a, dtype=float)
    peak = np.abs(a).max(initial=0.0)
    if peak == 0.0:
        return np.zeros_like(a)
    # rescale so that squaring tiny entries cannot underflow
    a = a / peak
    norm = np.linalg.norm(a)
    u = a / norm
    if np.abs(u).sum() <= c:
        return u
    lo, hi = 0.0, float(np.abs(a).max())
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        s = soft_threshold(a, mid)
        n2 = np.linalg.norm(s)
        # a threshold that zeroes everything counts as feasible from above
        if n2 == 0.0 or np.abs(s).sum() / n2 <= c:
            hi = mid
        else:
            lo = mid
    s = soft_threshold(a, hi)
    n2 = np.linalg.norm(s)
    if n2 == 0.0 or np.abs(s).sum() / n2 > c:
        # threshold overshot (ties at the top); keep only the largest entry
        u = np.zeros_like(a)
        i = int(np.argmax(np.abs(a)))
        u[i] = np.sign(a[i])
        return u
    return s / n2


def spc(X, config: SpcConfig) -> SpcFactors:
    """Sparse principal components with an L1 bound on the variable factor.

    Parameters
    ----------
    X : array_like, shape (P, N)
    config : SpcConfig

    Returns
    -------
    SpcFactors
        ``U`` (P x m) unit columns with ``||u||_1 <= c``, ``V`` (N x m)
        orthonormal columns, ``sigma`` the values ``u^T X_i v`` on the
        deflated matrices. Non-converged factors are returned as the last
        iterate and flagged in ``converged``.
    """
    A = np.array(_as_finite_matrix(X), dtype=float, copy=True)
    P, N = A.shape
    config.validate(P)
    m = min(config.n_factors, N, P)
    Us, Vs, sig, conv, iters = [], [], [], [], []
    for i in range(m):
        Vprev = np.column_stack(Vs) if Vs else np.zeros((N, 0))

        def v_update(u):
            w = A.T @ u
            w = w - Vprev @ (Vprev.T @ w)
            n = np.linalg.norm(w)
            return w / n if n > 0 else w

        v = svd_truncated(A, 1).V[:, 0]
        v = v - Vprev @ (Vprev.T @ v)
        if np.linalg.norm(v) < 1e-12:
            break
        v /= np.linalg.norm(v)
        u = l1_unit_update(A @ v, config.c)
        ok = False
        it = 0
        for it in range(1, config.max_iter + 1):
            v = v_update(u)
            u_new = l1_unit_update(A @ v, config.c)
            delta = np.linalg.norm(u_new - u)
            u = u_new
            if delta < config.conv_tol:
                ok = True
                break
        v = v_update(u)
        if not ok:
            log.warning("spc factor %d did not converge in %d iterations", i, config.max_iter)
        s = float(u @ A @ v)
        if not np.isfinite(s) or np.linalg.norm(v) == 0.0:
            break
        A -= s * np.outer(u, v)
        Us.append(u)
        Vs.append(v)
        sig.append(s)
        conv.append(ok)
        iters.append(it)
    U = np.column_stack(Us) if Us else np.zeros((P, 0))
    V = np.column_stack(Vs) if Vs else np.zeros((N, 0))
    return SpcFactors(U, np.array(sig), V, tuple(conv), tuple(iters))


__all__ = ["soft_threshold", "l1_unit_update", "SpcConfig", "SpcFactors", "spc"]
