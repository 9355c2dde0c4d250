"""Chain-quality metrics: effective sample size and preconditioner distance.

The ESS estimator is the initial-positive-sequence one: per coordinate,
empirical autocorrelations are summed in even/odd lag pairs and truncated
just before the first nonpositive pair sum, giving

    ESS = N / (1 + 2 * sum_k rho_k)

with the truncated sum.  Autocovariances come from one FFT per chain, so
the whole report is O(N log N) per coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .errors import InvalidParameterError
from .preconditioner import normalized_matrix

__all__ = [
    "EssReport",
    "ReplicateSummary",
    "ess",
    "frobenius_distance",
    "aggregate_replicates",
]


@dataclass(frozen=True)
class EssReport:
    """Per-dimension effective sample sizes with their summary order stats."""

    per_dim: np.ndarray
    max: float
    median: float
    min: float
    degenerate: tuple[int, ...] = ()


def _autocovariances(X: np.ndarray) -> np.ndarray:
    """Biased autocovariances for each column, via FFT convolution."""
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    m = next_fast_len(2 * n)
    F = rfft(Xc, m, axis=0)
    acov = irfft(F * np.conj(F), m, axis=0)[:n]
    return acov.real / n


def ess(chain) -> EssReport:
    """Effective sample size of each coordinate of an (N, d) chain."""
    X = np.asarray(chain, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidParameterError("chain must be an (N, d) array")
    n, d = X.shape
    if n < 100:
        raise InvalidParameterError(f"need at least 100 samples, got {n}")

    acov = _autocovariances(X)
    per_dim = np.empty(d)
    degenerate = []
    for j in range(d):
        c0 = acov[0, j]
        if not c0 > 0.0:
            per_dim[j] = float(n)
            degenerate.append(j)
            continue
        rho = acov[:, j] / c0
        n_pairs = n // 2
        pair_sums = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
        nonpos = np.nonzero(pair_sums <= 0.0)[0]
        cutoff = int(nonpos[0]) if nonpos.size else n_pairs
        tau = 2.0 * float(pair_sums[:cutoff].sum()) - 1.0
        tau = max(tau, 1.0 / n)
        per_dim[j] = n / tau

    return EssReport(
        per_dim=per_dim,
        max=float(per_dim.max()),
        median=float(np.median(per_dim)),
        min=float(per_dim.min()),
        degenerate=tuple(degenerate),
    )


def frobenius_distance(A, Sigma) -> float:
    """Frobenius distance between trace-normalized matrices.

    Both arguments are rescaled to unit average eigenvalue first, so the
    distance ignores overall scale on either side and is symmetric.
    """
    return float(np.linalg.norm(normalized_matrix(A) - normalized_matrix(Sigma)))


@dataclass(frozen=True)
class ReplicateSummary:
    """Mean and sample standard deviation of ESS order stats over replicates."""

    n_replicates: int
    max_mean: float
    max_std: float
    median_mean: float
    median_std: float
    min_mean: float
    min_std: float

    def row(self, stat: str) -> str:
        """Table cell like ``1923.753 ± 95.820``."""
        mean = getattr(self, f"{stat}_mean")
        std = getattr(self, f"{stat}_std")
        return f"{mean:.3f} ± {std:.3f}"


def aggregate_replicates(reports) -> ReplicateSummary:
    """Aggregate the max/median/min ESS of independent replicate runs."""
    reports = list(reports)
    if len(reports) < 2:
        raise InvalidParameterError("need at least 2 replicates to aggregate")
    stats = {}
    for name in ("max", "median", "min"):
        vals = np.array([getattr(r, name) for r in reports], dtype=float)
        stats[f"{name}_mean"] = float(vals.mean())
        stats[f"{name}_std"] = float(vals.std(ddof=1))
    return ReplicateSummary(n_replicates=len(reports), **stats)
