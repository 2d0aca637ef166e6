"""Planted orthogonal low-rank signals with sparse variable support.

Signal ``k`` (1-based) is ``Y_k = U_k diag(sigma_k) V_k^T`` with
``sigma_k[i] = 0.6**(k-1) * 0.9**(i-1)``. Every new column of ``U`` or
``V`` is a Gaussian vector projected onto the orthogonal complement of all
previous columns, so ``Y_i^T Y_j = 0`` and ``Y_i Y_j^T = 0`` for ``i != j``.
``U_k`` lives on ``L`` randomly chosen rows.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .linalg import DataMatrix, make_rng

SIGNAL_DECAY = 0.6
COMPONENT_DECAY = 0.9

_MAX_RETRIES = 10
_DEGENERATE = 1e-8


class InfeasibleSpec(ValueError):
    """The requested signal layout cannot be generated."""


@dataclass(frozen=True)
class SyntheticSpec:
    N: int = 100
    P: int = 1000
    L: int = 64
    K: int = 8
    d: int = 2
    noise_sigma: float = 0.0
    seed: int = 0
    disjoint: bool = True
    noise_mode: str = "all"

    def validate(self) -> None:
        if min(self.N, self.P, self.L, self.K, self.d) < 1:
            raise InfeasibleSpec("N, P, L, K and d must all be positive")
        if self.K * self.d > min(self.N, self.P):
            raise InfeasibleSpec(
                f"K*d <= min(N, P) violated: {self.K}*{self.d} > {min(self.N, self.P)}"
            )
        if self.L < self.d:
            raise InfeasibleSpec(f"L >= d violated: {self.L} < {self.d}")
        if self.L > self.P:
            raise InfeasibleSpec(f"L <= P violated: {self.L} > {self.P}")
        if self.disjoint and self.K * self.L > self.P:
            raise InfeasibleSpec(f"K*L <= P violated for disjoint supports: {self.K * self.L} > {self.P}")
        if not self.disjoint and self.K * self.d > self.L:
            raise InfeasibleSpec(f"overlapping supports need K*d <= L: {self.K * self.d} > {self.L}")
        if self.noise_sigma < 0:
            raise InfeasibleSpec("noise_sigma must be nonnegative")
        if self.noise_mode not in ("all", "off_support"):
            raise InfeasibleSpec(f"noise_mode must be 'all' or 'off_support', got {self.noise_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(**d)


@dataclass(frozen=True)
class Signal:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    support: np.ndarray

    @property
    def Y(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    @property
    def strength(self) -> float:
        return float(np.linalg.norm(self.sigma))


@dataclass(frozen=True)
class GroundTruth:
    signals: tuple[Signal, ...]
    X_clean: np.ndarray
    X_noisy: np.ndarray
    spec: SyntheticSpec | None = None
    label: str = ""

    @property
    def K(self) -> int:
        return len(self.signals)

    def data(self) -> DataMatrix:
        P, N = self.X_noisy.shape
        w = len(str(P))
        return DataMatrix(self.X_noisy,
                          tuple(f"g{i + 1:0{w}d}" for i in range(P)),
                          tuple(f"s{j + 1:0{len(str(N))}d}" for j in range(N)))


def signal_sigmas(k: int, d: int) -> np.ndarray:
    """Diagonal of ``Sigma_k`` for 1-based signal index ``k``."""
    return SIGNAL_DECAY ** (k - 1) * COMPONENT_DECAY ** np.arange(d)


def _next_column(rng, dim, basis):
    """Gaussian vector in R^dim orthogonal to the columns of ``basis``, unit length."""
    for _ in range(_MAX_RETRIES):
        g = rng.standard_normal(dim)
        if basis.shape[1]:
            # two passes of Gram-Schmidt for numerical orthogonality
            g = g - basis @ (basis.T @ g)
            g = g - basis @ (basis.T @ g)
        n = np.linalg.norm(g)
        if n > _DEGENERATE * np.sqrt(dim):
            return g / n
    raise InfeasibleSpec("projection degenerated repeatedly; subspace exhausted")


def _orth_basis(M):
    """Orthonormal basis of the column span of ``M``.

    Columns of earlier signals are often zero on the current support, so
    an SVD is used; unpivoted QR would hand zero columns arbitrary
    directions and orthogonalise against those.
    """
    if M.shape[1] == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, s > 1e-10]


def generate(spec: SyntheticSpec, noise_scale: np.ndarray | None = None) -> GroundTruth:
    """Draw ground-truth signals and the noisy observation.

    Parameters
    ----------
    spec : SyntheticSpec
        With ``noise_mode="off_support"`` rows inside any support stay clean.
    noise_scale : array of shape (P, N), optional
        Per-entry noise standard deviations (overrides ``spec.noise_sigma``).
    """
    spec.validate()
    rng = make_rng(spec.seed)
    P, N, L, K, d = spec.P, spec.N, spec.L, spec.K, spec.d

    if spec.disjoint:
        perm = rng.permutation(P)
        supports = [np.sort(perm[k * L:(k + 1) * L]) for k in range(K)]
    else:
        supports = [np.sort(rng.choice(P, size=L, replace=False)) for _ in range(K)]

    Vcols = np.zeros((N, 0))
    Ucols = np.zeros((P, 0))
    signals = []
    for k in range(K):
        sup = supports[k]
        Vk = np.zeros((N, d))
        Uk = np.zeros((P, d))
        for i in range(d):
            v = _next_column(rng, N, Vcols)
            Vcols = np.column_stack([Vcols, v])
            Vk[:, i] = v
            # orthogonality to earlier columns only involves their support rows
            u_s = _next_column(rng, L, _orth_basis(Ucols[sup]))
            u = np.zeros(P)
            u[sup] = u_s
            Ucols = np.column_stack([Ucols, u])
            Uk[:, i] = u
        signals.append(Signal(Uk, signal_sigmas(k + 1, d), Vk, sup))

    X_clean = sum((s.Y for s in signals), np.zeros((P, N)))
    if noise_scale is not None:
        scale = np.broadcast_to(np.asarray(noise_scale, dtype=float), (P, N))
    else:
        scale = np.full((P, N), float(spec.noise_sigma))
    if spec.noise_mode == "off_support":
        scale = scale.copy()
        for sup in supports:
            scale[sup] = 0.0
    if np.any(scale > 0):
        X_noisy = X_clean + scale * rng.standard_normal((P, N))
    else:
        X_noisy = X_clean.copy()
    return GroundTruth(tuple(signals), X_clean, X_noisy, spec)


BIPLOT_MODES = ("no_noise", "noise_off_support", "noise_all")

#: Noise level of the biplot scenarios. The signal entries have RMS of
#: roughly ``0.02`` (signal 1) and ``0.01`` (signal 2).
BIPLOT_NOISE = 0.007


def biplot_scenario(mode: str, seed: int = 0, noise_sigma: float = BIPLOT_NOISE) -> GroundTruth:
    """Two rank-2 signals on 64 of 5000 variables, 32 samples.

    ``mode`` is ``"no_noise"``, ``"noise_off_support"`` (noise only on rows
    outside both supports) or ``"noise_all"``.
    """
    if mode not in BIPLOT_MODES:
        raise ValueError(f"unknown biplot mode {mode!r}; expected one of {BIPLOT_MODES}")
    sigma = 0.0 if mode == "no_noise" else noise_sigma
    spec = SyntheticSpec(N=32, P=5000, L=64, K=2, d=2, noise_sigma=sigma, seed=seed,
                         noise_mode="off_support" if mode == "noise_off_support" else "all")
    gt = generate(spec)
    return GroundTruth(gt.signals, gt.X_clean, gt.X_noisy, gt.spec, label=mode)


#: Residual-grid sweep dimensions and noise levels.
GRID_P = (1000, 5000)
GRID_L = (16, 64, 256)
GRID_D = (1, 2)
NOISE_LEVELS = {"low": 0.003, "medium": 0.01, "high": 0.03}


def residual_grid(noise: str = "medium", K: int = 4, N: int = 100, seed: int = 0,
                  P_values: Sequence[int] = GRID_P, L_values: Sequence[int] = GRID_L,
                  d_values: Sequence[int] = GRID_D) -> list[SyntheticSpec]:
    """Specs for the ``P x L x d`` sweep at one noise level.

    Supports are disjoint where ``K * L <= P`` and overlap otherwise.
    """
    sigma = NOISE_LEVELS[noise]
    out = []
    for P in P_values:
        for L in L_values:
            for d in d_values:
                out.append(SyntheticSpec(N=N, P=P, L=L, K=K, d=d, noise_sigma=sigma, seed=seed,
                                       disjoint=K * L <= P))
    return out


__all__ = [
    "SyntheticSpec",
    "Signal",
    "GroundTruth",
    "InfeasibleSpec",
    "signal_sigmas",
    "generate",
    "biplot_scenario",
    "BIPLOT_MODES",
    "BIPLOT_NOISE",
    "residual_grid",
    "NOISE_LEVELS",
]
