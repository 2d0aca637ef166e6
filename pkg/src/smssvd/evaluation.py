"""Scoring decompositions against planted signals and sample labels."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .engine import EngineConfig, smssvd
from .linalg import svd_truncated
from .spc import SpcConfig, spc
from .synthetic import GroundTruth, Signal

Component = tuple[np.ndarray, float, np.ndarray]


def signal_error(signal: Signal, Y_hat: np.ndarray) -> float:
    """Frobenius error of ``Y_hat`` against the signal, on its support rows."""
    sup = signal.support
    return float(np.linalg.norm(signal.Y[sup] - Y_hat[sup]))


@dataclass(frozen=True)
class MatchResult:
    assignment: dict[int, int]
    per_signal_error: np.ndarray
    signal_strength: np.ndarray

    @property
    def total_error(self) -> float:
        return float(self.per_signal_error.sum())

    def components_of(self, k: int) -> list[int]:
        return sorted(c for c, s in self.assignment.items() if s == k)


def _signals(truth) -> Sequence[Signal]:
    return truth.signals if isinstance(truth, GroundTruth) else tuple(truth)


def greedy_match(components: Sequence[Component], truth, allow_partial: bool = False) -> MatchResult:
    """Assign rank-1 components to signals, greedily lowering the total error.

    At every step the (component, signal) pair whose assignment lowers the
    summed support-row error the most is taken, until each signal ``k`` holds
    ``rank(Y_k)`` components. Ties go to the lower component index, then the
    lower signal index.

    Parameters
    ----------
    components : sequence of (u, s, v)
    truth : GroundTruth or sequence of Signal
    allow_partial : bool
        When there are too few components, assign all of them instead of
        raising ``ValueError``.
    """
    signals = _signals(truth)
    K = len(signals)
    need = sum(s.rank for s in signals)
    if len(components) < need and not allow_partial:
        raise ValueError(f"{len(components)} components cannot fill {need} signal slots")
    supports = [s.support for s in signals]
    resid = [s.Y[sup] for s, sup in zip(signals, supports)]
    err = np.array([np.linalg.norm(r) for r in resid])
    strength = err.copy()
    capacity = np.array([s.rank for s in signals])
    # support-row pieces of each component
    pieces = [[(u[sup] * s, v) for sup in supports] for (u, s, v) in components]

    free = list(range(len(components)))
    assignment: dict[int, int] = {}
    while free and capacity.sum() > 0:
        best = None
        for c in free:
            for k in range(K):
                if capacity[k] == 0:
                    continue
                us, v = pieces[c][k]
                new = np.linalg.norm(resid[k] - np.outer(us, v))
                gain = err[k] - new
                if best is None or gain > best[0]:
                    best = (gain, c, k, new)
        _, c, k, new = best
        us, v = pieces[c][k]
        resid[k] = resid[k] - np.outer(us, v)
        err[k] = new
        capacity[k] -= 1
        assignment[c] = k
        free.remove(c)
    return MatchResult(assignment, err, strength)


@dataclass(frozen=True)
class AicResult:
    """Gaussian-mixture fit of labelled coordinates.

    ``loglik`` is the conditional log-likelihood of the labels given the
    coordinates, ``joint_loglik`` the joint log-likelihood of labels and
    coordinates; ``aic = 2 * n_params - 2 * loglik``.
    """

    loglik: float
    joint_loglik: float
    n_params: int
    aic: float
    dims: int
    n_classes: int
    ridged: bool


def _class_cov(Z, global_scale):
    m = Z.shape[1]
    C = np.atleast_2d(np.cov(Z, rowvar=False, bias=True)) if Z.shape[0] > 1 else np.zeros((m, m))
    ev = np.linalg.eigvalsh(C)
    if ev[-1] > 0 and ev[0] >= 1e-10 * ev[-1]:
        return C, False
    tr = np.trace(C)
    scale = tr / m if tr > 0 else global_scale
    return C + 1e-6 * scale * np.eye(m), True


def _gauss_logpdf(Z, mu, C):
    m = Z.shape[1]
    L = np.linalg.cholesky(C)
    y = np.linalg.solve(L, (Z - mu).T)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return -0.5 * (np.sum(y * y, axis=0) + logdet + m * math.log(2 * math.pi))


def aic_gmm(coords, labels) -> AicResult:
    """AIC of a one-Gaussian-per-label mixture with priors fixed to class sizes.

    Parameters
    ----------
    coords : array_like, shape (N, m)
        Sample representation.
    labels : sequence of length N

    Notes
    -----
    The means and covariances are maximum-likelihood estimates and are the
    only counted parameters, ``G * (m + m (m + 1) / 2)``. A class covariance
    whose eigenvalue ratio falls below ``1e-10`` gets a ridge of
    ``1e-6 * trace / m`` and ``ridged`` is set.
    """
    Z = np.asarray(coords, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    labels = np.asarray(labels)
    N, m = Z.shape
    if labels.shape != (N,):
        raise ValueError(f"{labels.shape[0] if labels.ndim else 0} labels for {N} samples")
    if not np.all(np.isfinite(Z)):
        raise ValueError("coordinates contain non-finite entries")
    classes = sorted(set(labels.tolist()))
    G = len(classes)
    gvar = float(np.mean(Z.var(axis=0))) if N > 1 else 0.0
    global_scale = gvar if gvar > 0 else 1.0

    logp = np.empty((N, G))
    ridged = False
    own = np.empty(N, dtype=int)
    for g, cls in enumerate(classes):
        mask = labels == cls
        own[mask] = g
        Zg = Z[mask]
        C, r = _class_cov(Zg, global_scale)
        ridged |= r
        logp[:, g] = math.log(mask.sum() / N) + _gauss_logpdf(Z, Zg.mean(axis=0), C)
    rows = np.arange(N)
    joint = float(logp[rows, own].sum())
    loglik = float((logp[rows, own] - logsumexp(logp, axis=1)).sum())
    k = G * (m + m * (m + 1) // 2)
    return AicResult(loglik, joint, k, 2.0 * k - 2.0 * loglik, m, G, ridged)


def aic_curve(coords, labels, max_dims: int | None = None) -> list[AicResult]:
    """``aic_gmm`` on the first ``m`` columns for ``m = 1 .. max_dims``."""
    Z = np.asarray(coords, dtype=float)
    top = Z.shape[1] if max_dims is None else max_dims
    if top < 1 or top > Z.shape[1]:
        raise ValueError(f"max_dims={top} outside [1, {Z.shape[1]}]")
    return [aic_gmm(Z[:, :m], labels) for m in range(1, top + 1)]


@dataclass(frozen=True)
class MethodSpec:
    """A method to compare: ``svd``, ``smssvd`` or ``spc`` with an L1 bound.

    ``c_relative`` means ``c = c * sqrt(P)``.
    """

    name: str
    c: float | None = None
    c_relative: bool = False

    @property
    def label(self) -> str:
        if self.name != "spc":
            return self.name
        return f"spc:c=r{self.c:g}" if self.c_relative else f"spc:c={self.c:g}"

    def resolve_c(self, P: int) -> float:
        return self.c * math.sqrt(P) if self.c_relative else self.c


_SPC_RE = re.compile(r"^spc:c=(r?)([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


def parse_method(text: str) -> MethodSpec:
    """Parse ``svd``, ``smssvd``, ``spc:c=8`` or ``spc:c=r0.04`` (``0.04 sqrt(P)``)."""
    t = text.strip()
    if t in ("svd", "smssvd"):
        return MethodSpec(t)
    m = _SPC_RE.match(t)
    if not m:
        raise ValueError(f"cannot parse method {text!r}")
    return MethodSpec("spc", float(m.group(2)), bool(m.group(1)))


_C_RE = re.compile(r"^(r?)([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


def parse_methods(text: str) -> list[MethodSpec]:
    """Parse a comma-separated method list.

    A bare number after an SPC entry adds another SPC run, so
    ``"svd,spc:c=2,8,32"`` means SVD plus SPC with ``c`` = 2, 8 and 32.
    """
    out: list[MethodSpec] = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        m = _C_RE.match(tok)
        if m and out and out[-1].name == "spc":
            out.append(MethodSpec("spc", float(m.group(2)), bool(m.group(1))))
        else:
            out.append(parse_method(tok))
    return out


def method_components(X, method: MethodSpec, n_components: int,
                      engine_config: EngineConfig | None = None) -> list[Component]:
    """Rank-1 components of ``X`` produced by one method."""
    X = np.asarray(X, dtype=float)
    if method.name == "svd":
        f = svd_truncated(X, min(n_components, *X.shape))
        return [(f.U[:, i], float(f.sigma[i]), f.V[:, i]) for i in range(f.d)]
    if method.name == "smssvd":
        cfg = replace(engine_config or EngineConfig(), max_components=n_components)
        return smssvd(X, cfg).components()
    if method.name == "spc":
        c = min(method.resolve_c(X.shape[0]), math.sqrt(X.shape[0]))
        return spc(X, SpcConfig(c=max(c, 1.0), n_factors=n_components)).components()
    raise ValueError(f"unknown method {method.name!r}")


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    signal: int
    err: float
    strength: float

    @property
    def flagged(self) -> bool:
        """Errors above the signal strength mean another signal was found."""
        return self.err > self.strength


def compare_methods(truth: GroundTruth, methods: Sequence[MethodSpec | str],
                    engine_config: EngineConfig | None = None,
                    n_components: int | None = None) -> list[ComparisonRow]:
    """``err(k)`` of each method on ``truth.X_noisy`` after greedy matching.

    Every method gets the same budget of rank-1 components, by default the
    total rank of the planted signals.
    """
    budget = n_components or sum(s.rank for s in truth.signals)
    rows = []
    for m in methods:
        spec = parse_method(m) if isinstance(m, str) else m
        comps = method_components(truth.X_noisy, spec, budget, engine_config)
        res = greedy_match(comps, truth, allow_partial=True)
        for k in range(truth.K):
            rows.append(ComparisonRow(spec.label, k + 1, float(res.per_signal_error[k]),
                                      float(res.signal_strength[k])))
    return rows


__all__ = [
    "signal_error",
    "MatchResult",
    "greedy_match",
    "AicResult",
    "aic_gmm",
    "aic_curve",
    "MethodSpec",
    "parse_method",
    "parse_methods",
    "method_components",
    "ComparisonRow",
    "compare_methods",
]
