"""Numerical checks of the preconditioning optimality results.

For the discretized Langevin jump

    x' - x = (delta/2) A grad_log_pi(x) + sqrt(A) w,   w ~ N(0, delta I),

started at stationarity, the jump has zero mean and covariance
(delta^2/4) A F A + delta A, where F is the covariance of the score under
the target.  Maximizing the trace of that covariance over SPD matrices A
with fixed trace is solved exactly by A* proportional to inv(F).  The
functions here evaluate the objective, construct the maximizer, and
estimate the jump covariance by direct simulation so the closed forms can
be falsified against brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, UnsupportedTargetError

__all__ = [
    "EsjdProblem",
    "esjd_objective",
    "optimal_preconditioner",
    "jump_covariance_mc",
]


def _check_spd(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(M))))
    if float(np.max(np.abs(M - M.T))) > 1e-10 * scale:
        raise InvalidParameterError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(M)
    if not eigs[0] > 0.0:
        raise InvalidParameterError(f"{name} must be positive definite (min eig {eigs[0]!r})")
    return M


@dataclass(frozen=True)
class EsjdProblem:
    """Expected-squared-jump problem data: score covariance, step, budget."""

    fisher: np.ndarray
    delta: float
    trace_budget: float

    def __post_init__(self):
        object.__setattr__(self, "fisher", _check_spd(self.fisher, "fisher"))
        if not self.delta > 0.0:
            raise InvalidParameterError("delta must be positive")
        if not self.trace_budget > 0.0:
            raise InvalidParameterError("trace_budget must be positive")

    @property
    def dim(self) -> int:
        return self.fisher.shape[0]


def esjd_objective(problem: EsjdProblem, A) -> float:
    """Expected squared jumped distance tr((delta^2/4) A F A + delta A)."""
    A = _check_spd(A, "A")
    if A.shape != problem.fisher.shape:
        raise InvalidParameterError("A must match the problem dimension")
    delta = problem.delta
    quad = float(np.einsum("ij,jk,ki->", A, problem.fisher, A))
    return 0.25 * delta * delta * quad + delta * float(np.trace(A))


def optimal_preconditioner(problem: EsjdProblem) -> np.ndarray:
    """Trace-constrained maximizer of the jump objective: k * inv(F).

    k is fixed by the budget, so tr(result) equals trace_budget exactly;
    eigenvectors coincide with F's and eigenvalues are proportional to the
    reciprocals of F's.
    """
    mu, U = np.linalg.eigh(problem.fisher)
    k = problem.trace_budget / float(np.sum(1.0 / mu))
    A = (U * (k / mu)) @ U.T
    return 0.5 * (A + A.T)


def jump_covariance_mc(
    target,
    A,
    delta: float,
    n_samples: int,
    rng,
    *,
    batch_size: int = 65536,
    return_mean: bool = False,
):
    """Second moment of the discretized Langevin jump, by simulation.

    Draws start points exactly from the target (which therefore must
    support exact sampling, i.e. be Gaussian), applies one discretized
    jump to each, and averages the jump outer products.  With
    ``return_mean`` also returns the empirical mean jump, whose norm
    should sit within Monte Carlo noise of zero at stationarity.
    """
    if n_samples < 10_000:
        raise InvalidParameterError("n_samples must be at least 10^4")
    if not delta > 0.0:
        raise InvalidParameterError("delta must be positive")
    A = _check_spd(A, "A")
    if not (hasattr(target, "sample") and hasattr(target, "grad_batch")):
        raise UnsupportedTargetError("jump simulation requires exact sampling (Gaussian target)")
    d = A.shape[0]
    sqrtA = np.linalg.cholesky(A)
    sqrt_delta = math.sqrt(delta)
    second = np.zeros((d, d))
    mean = np.zeros(d)
    remaining = int(n_samples)
    while remaining > 0:
        b = min(batch_size, remaining)
        X = target.sample(rng, b)
        G = target.grad_batch(X)
        noise = rng.standard_normal((b, d))
        jumps = (0.5 * delta) * (G @ A.T) + sqrt_delta * (noise @ sqrtA.T)
        second += jumps.T @ jumps
        mean += jumps.sum(axis=0)
        remaining -= b
    second /= n_samples
    mean /= n_samples
    if return_mean:
        return second, mean
    return second
