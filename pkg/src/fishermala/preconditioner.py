"""Online square-root estimation of damped inverse-Fisher matrices.

The estimators in this module consume a stream of d-dimensional signal
vectors s_1, s_2, ... and maintain

    A_n = (sum_{i<=n} s_i s_i^T + lambda * I)^(-1)

(or a centered variant, see :class:`PairedEstimator`) at O(d^2) cost per
signal.  They track a square-root factor R_n with R_n R_n^T = A_n rather
than A_n itself, because samplers need a factor of the preconditioner to
draw correlated Gaussian noise; this sidesteps any per-step factorization.

The rank-one square-root downdate is the classical one from square-root
Kalman filtering: for z with z^T z <= 1,

    I - z z^T = (I - r z z^T)(I - r z z^T)^T,   r = 1 / (1 + sqrt(1 - z^T z)).

:func:`woodbury_update` provides the plain (non-square-root) rank-one
inverse update and deliberately shares no code with the square-root path,
so the two can cross-check each other.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError, InvalidSignalError

__all__ = [
    "SqrtPreconditioner",
    "PairedEstimator",
    "sqrt_init",
    "sqrt_update",
    "sqrt_update_general",
    "paired_update",
    "woodbury_update",
    "normalized_matrix",
]


def _as_signal(s, dim=None) -> np.ndarray:
    s = np.asarray(s, dtype=float).reshape(-1)
    if dim is not None and s.shape != (dim,):
        raise InvalidSignalError(f"signal has shape {s.shape}, expected ({dim},)")
    if not np.all(np.isfinite(s)):
        raise InvalidSignalError("signal contains non-finite entries")
    return s


def _check_damping(lam: float) -> float:
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise InvalidParameterError(f"damping must be a positive real, got {lam!r}")
    return lam


class SqrtPreconditioner:
    """Square root R of a damped inverse-Fisher estimate.

    After n signals, ``R @ R.T`` equals ``inv(sum s_i s_i^T + lam * I)``.
    Before the first signal (n = 0) R is the identity, which is what
    adaptive samplers propose with while warming up.

    Updates mutate the instance in place.  One instance belongs to one
    chain: updates are strictly sequential, never concurrent.
    """

    __slots__ = ("dim", "lam", "n", "R", "trace_rrt")

    def __init__(self, dim: int, lam: float):
        dim = int(dim)
        if dim < 1:
            raise InvalidParameterError("dim must be a positive integer")
        self.dim = dim
        self.lam = _check_damping(lam)
        self.n = 0
        self.R = np.eye(dim)
        self.trace_rrt = float(dim)

    def _refresh_trace(self) -> None:
        self.trace_rrt = float(np.einsum("ij,ij->", self.R, self.R))

    def update(self, s) -> "SqrtPreconditioner":
        """Absorb one signal; dispatches between the first-signal closed
        form and the rank-one recursion."""
        s = _as_signal(s, self.dim)
        if self.n == 0:
            self._first_signal(s)
        else:
            self._rank_one(s)
        self.n += 1
        self._refresh_trace()
        return self

    def _first_signal(self, s: np.ndarray) -> None:
        # R_1 = (I - r1 * s s^T / (lam + s^T s)) / sqrt(lam),
        # r1 = 1 / (1 + sqrt(lam / (lam + s^T s)))
        lam = self.lam
        denom = lam + float(s @ s)
        r1 = 1.0 / (1.0 + math.sqrt(lam / denom))
        R = np.eye(self.dim)
        R -= (r1 / denom) * np.outer(s, s)
        R /= math.sqrt(lam)
        self.R = R

    def _rank_one(self, s: np.ndarray) -> None:
        # R <- R - r * (R phi) phi^T / (1 + phi^T phi),  phi = R^T s,
        # r = 1 / (1 + sqrt(1 / (1 + phi^T phi)))
        phi = self.R.T @ s
        denom = 1.0 + float(phi @ phi)
        r = 1.0 / (1.0 + math.sqrt(1.0 / denom))
        Rphi = self.R @ phi
        self.R -= np.outer(Rphi, (r / denom) * phi)

    def update_general(self, s, gamma: float) -> "SqrtPreconditioner":
        """Variable-learning-rate step: R R^T tracks the inverse of

            F_n = (1 - gamma) * F_{n-1} + gamma * s s^T,

        with F_1 = s_1 s_1^T + lam * I set by the first plain
        :meth:`update`.  Requires at least one prior signal.
        """
        gamma = float(gamma)
        if not (0.0 < gamma < 1.0):
            raise InvalidParameterError(f"learning rate must lie in (0, 1), got {gamma!r}")
        if self.n < 1:
            raise InvalidParameterError("general-rate update requires an initialized estimator")
        s = _as_signal(s, self.dim)
        ratio = (1.0 - gamma) / gamma
        phi = self.R.T @ s
        denom = ratio + float(phi @ phi)
        r = 1.0 / (1.0 + math.sqrt(ratio / denom))
        Rphi = self.R @ phi
        self.R -= np.outer(Rphi, (r / denom) * phi)
        self.R /= math.sqrt(1.0 - gamma)
        self.n += 1
        self._refresh_trace()
        return self

    def matrix(self) -> np.ndarray:
        """Dense preconditioner A = R R^T (O(d^3); diagnostics only)."""
        return self.R @ self.R.T

    def copy(self) -> "SqrtPreconditioner":
        dup = SqrtPreconditioner(self.dim, self.lam)
        dup.n = self.n
        dup.R = self.R.copy()
        dup.trace_rrt = self.trace_rrt
        return dup


class PairedEstimator:
    """Centered square-root estimator with a paired running mean.

    Tracks the mean m_n of the signals alongside R such that, for n >= 2,

        R R^T = inv( (1/(n-1)) sum_i (s_i - m_n)(s_i - m_n)^T
                     + (lam/(n-1)) * I ).

    The first signal only initializes the mean; the matrix recursion
    starts with the second signal via the centered increment s_2 - s_1.
    The scalar sequence multiplying the previous estimate is lam for the
    first matrix step and (n-1)/n afterwards.
    """

    __slots__ = ("dim", "lam", "n", "mean", "R", "trace_rrt")

    def __init__(self, dim: int, lam: float):
        dim = int(dim)
        if dim < 1:
            raise InvalidParameterError("dim must be a positive integer")
        self.dim = dim
        self.lam = _check_damping(lam)
        self.n = 0
        self.mean = np.zeros(dim)
        self.R = np.eye(dim)
        self.trace_rrt = float(dim)

    def update(self, s) -> "PairedEstimator":
        s = _as_signal(s, self.dim)
        if self.n == 0:
            self.mean = s.copy()
            self.n = 1
            return self
        m = self.n + 1
        lam_prev = self.lam if self.n == 1 else (self.n - 1) / self.n
        delta = s - self.mean
        phi = self.R.T @ delta
        denom = m * lam_prev + float(phi @ phi)
        r = 1.0 / (1.0 + math.sqrt(m * lam_prev / denom))
        Rphi = self.R @ phi
        self.R -= np.outer(Rphi, (r / denom) * phi)
        self.R /= math.sqrt(lam_prev)
        self.mean += (s - self.mean) / m
        self.n = m
        self.trace_rrt = float(np.einsum("ij,ij->", self.R, self.R))
        return self

    def matrix(self) -> np.ndarray:
        return self.R @ self.R.T

    def copy(self) -> "PairedEstimator":
        dup = PairedEstimator(self.dim, self.lam)
        dup.n = self.n
        dup.mean = self.mean.copy()
        dup.R = self.R.copy()
        dup.trace_rrt = self.trace_rrt
        return dup


def sqrt_init(s1, lam: float) -> SqrtPreconditioner:
    """Build the estimator from its first signal.

    Returns P with ``P.R @ P.R.T == inv(s1 s1^T + lam * I)``.
    """
    s1 = _as_signal(s1)
    precond = SqrtPreconditioner(s1.shape[0], lam)
    return precond.update(s1)


def sqrt_update(precond: SqrtPreconditioner, s) -> SqrtPreconditioner:
    """One rank-one square-root step; mutates and returns ``precond``."""
    if precond.n < 1:
        raise InvalidParameterError("sqrt_update requires an initialized estimator (n >= 1)")
    return precond.update(s)


def sqrt_update_general(precond: SqrtPreconditioner, s, gamma: float) -> SqrtPreconditioner:
    """Variable-rate square-root step; mutates and returns ``precond``."""
    return precond.update_general(s, gamma)


def paired_update(est: PairedEstimator, s) -> PairedEstimator:
    """One centered-signal step; mutates and returns ``est``.

    The estimator must already hold at least one signal (the first call
    on a fresh instance only seeds the mean).
    """
    if est.n < 1:
        raise InvalidParameterError("paired_update requires at least one prior signal")
    return est.update(s)


def woodbury_update(A, s) -> np.ndarray:
    """Rank-one inverse update: returns ``inv(inv(A) + s s^T)`` directly.

        A - (A s)(A s)^T / (1 + s^T A s)

    ``A`` must be symmetric positive definite.  Serves as the independent
    oracle for the square-root recursion; O(d^2).
    """
    s = _as_signal(s)
    A = np.asarray(A, dtype=float)
    As = A @ s
    return A - np.outer(As, As) / (1.0 + float(s @ As))


def normalized_matrix(B) -> np.ndarray:
    """Rescale B by its average eigenvalue so that tr(result) = d."""
    B = np.asarray(B, dtype=float)
    tr = float(np.trace(B))
    if not tr > 0.0:
        raise InvalidParameterError(f"trace must be positive, got {tr!r}")
    return B * (B.shape[0] / tr)
