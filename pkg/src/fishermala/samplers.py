"""Metropolis-Hastings transition kernels with Langevin and Hamiltonian proposals.

All MALA-family kernels share the same proposal shape

    y = x + (s2/2) * A grad_log_pi(x) + sqrt(s2) * sqrt(A) * eta

and the same acceptance computation, which never forms inv(A): the log
proposal ratio collapses to h(x, y) - h(y, x) with

    h(z, v) = 0.5 * (z - v - (s2/4) * A grad(v))^T grad(v),

so one gradient per iteration is all a step costs.

Scale handling: every preconditioned kernel stores the *trace-normalized*
factor root_hat = root / sqrt(tr(root root^T)/d) and proposes with the raw
step size sigma2.  This is algebraically identical to dividing sigma2 by
the average eigenvalue of A, and it makes the whole step exactly invariant
when the supplied root is rescaled by any constant whose entrywise
products and trace are floating-point exact (powers of two in particular).
The equivalent normalized step size is still tracked for diagnostics.

RNG discipline: each step draws the proposal noise first, then one
uniform.  Fixed generator state therefore implies a bit-identical
trajectory, and the accept/reject uniform doubles as the coin for the
non-Rao-Blackwellized adaptation signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidParameterError, NumericalAbortError, UnsupportedTargetError
from .preconditioner import PairedEstimator, SqrtPreconditioner
from .targets import GaussianTarget, TargetModel

__all__ = [
    "ChainState",
    "StepSizeController",
    "StepInfo",
    "mala_propose",
    "h_term",
    "leapfrog",
    "MalaKernel",
    "FisherMalaKernel",
    "AdaMalaKernel",
    "MmalaKernel",
    "HmcKernel",
    "default_sigma2",
    "MALA_TARGET_RATE",
    "HMC_TARGET_RATE",
]

MALA_TARGET_RATE = 0.574
HMC_TARGET_RATE = 0.651

INIT_MALA = "init_mala"
WARMUP = "warmup"
ADAPTING = "adapting"
FROZEN = "frozen"


@dataclass
class ChainState:
    """Current position with its cached log-density and gradient."""

    x: np.ndarray
    logpi: float
    grad: np.ndarray

    @classmethod
    def at(cls, target: TargetModel, x) -> "ChainState":
        x = np.asarray(x, dtype=float).copy()
        logpi, grad = target.log_and_grad(x)
        return cls(x, float(logpi), np.asarray(grad, dtype=float))

    def check_cache(self, target: TargetModel, tol: float = 1e-12) -> None:
        """Assert the cache matches fresh evaluations (debugging aid)."""
        logpi, grad = target.log_and_grad(self.x)
        if abs(logpi - self.logpi) > tol * max(1.0, abs(logpi)):
            raise AssertionError("cached log-density is stale")
        if float(np.max(np.abs(grad - self.grad))) > tol * max(1.0, float(np.max(np.abs(grad)))):
            raise AssertionError("cached gradient is stale")


@dataclass
class StepSizeController:
    """Multiplicative step-size adaptation toward a target acceptance rate.

    sigma2 <- sigma2 * (1 + rho * (alpha - target_rate)); the factor lies
    in [1 - rho*target, 1 + rho*(1-target)], so sigma2 stays positive for
    rho < 1.
    """

    sigma2: float
    rho: float = 0.015
    target_rate: float = MALA_TARGET_RATE
    adapting: bool = True

    def __post_init__(self):
        if not self.sigma2 > 0.0:
            raise InvalidParameterError("sigma2 must be positive")
        if not 0.0 < self.rho < 1.0:
            raise InvalidParameterError("adaptation rate must lie in (0, 1)")
        if not 0.0 < self.target_rate < 1.0:
            raise InvalidParameterError("target acceptance rate must lie in (0, 1)")

    def update(self, alpha: float) -> "StepSizeController":
        if self.adapting:
            self.sigma2 *= 1.0 + self.rho * (alpha - self.target_rate)
        return self


@dataclass
class StepInfo:
    """Per-step diagnostics returned alongside the new chain state."""

    alpha: float
    accepted: bool
    logpi: float
    anomaly: bool = False


def default_sigma2(dim: int, kind: str = "mala") -> float:
    """Step-size initialization heuristics; adaptation takes over.

    MALA-family kernels start from d**(-3/2), deliberately on the small
    side: an oversized start stalls the whole burn-in (near-zero
    acceptance yields a frozen chain, which poisons covariance-based
    adaptation), while an undersized one is corrected at a steady
    multiplicative rate.  HMC starts from 2.38**2 / d for its
    identity-mass leapfrog.
    """
    if kind == "hmc":
        return 2.38**2 / float(dim)
    return float(dim) ** (-1.5)


def mala_propose(x, grad, R, sigma2_R: float, noise) -> np.ndarray:
    """Preconditioned Langevin proposal; never materializes R R^T.

    ``R is None`` means the identity preconditioner (plain MALA).
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    noise = np.asarray(noise, dtype=float)
    sigma = math.sqrt(sigma2_R)
    if R is None:
        return x + (0.5 * sigma2_R) * grad + sigma * noise
    R = np.asarray(R, dtype=float)
    drift = R @ (R.T @ grad)
    return x + (0.5 * sigma2_R) * drift + sigma * (R @ noise)


def h_term(z, v, grad_v, A_grad_v, sigma2: float) -> float:
    """Half-quadratic term of the inverse-free log proposal ratio.

    The caller supplies A @ grad(v) (typically as R (R^T grad)), so the
    preconditioner is never inverted or even formed.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    grad_v = np.asarray(grad_v, dtype=float)
    A_grad_v = np.asarray(A_grad_v, dtype=float)
    return 0.5 * float((z - v - (0.25 * sigma2) * A_grad_v) @ grad_v)


def _log_alpha(state: ChainState, y, logpi_y, grad_y, A_grad_x, A_grad_y, sigma2) -> float:
    hxy = h_term(state.x, y, grad_y, A_grad_y, sigma2)
    hyx = h_term(y, state.x, state.grad, A_grad_x, sigma2)
    return logpi_y + hxy - state.logpi - hyx


class _KernelBase:
    """Shared bookkeeping: controller access, anomaly counter, freezing."""

    controller: StepSizeController
    dim: int

    def __init__(self):
        self.anomalies = 0

    @property
    def sigma2(self) -> float:
        return self.controller.sigma2

    def freeze(self) -> None:
        self.controller.adapting = False

    def preconditioner_matrix(self) -> np.ndarray:
        """Effective proposal covariance shape A (up to scale)."""
        return np.eye(self.dim)

    def _finish(self, state, y, logpi_y, grad_y, log_a, u):
        """Shared accept/reject bookkeeping given the log acceptance ratio."""
        if not math.isfinite(log_a):
            # non-finite target at the proposal: auto-reject, count it
            self.anomalies += 1
            return state, StepInfo(0.0, False, state.logpi, anomaly=True)
        alpha = math.exp(min(0.0, log_a))
        if u < alpha:
            new = ChainState(y, float(logpi_y), grad_y)
            return new, StepInfo(alpha, True, float(logpi_y))
        return state, StepInfo(alpha, False, state.logpi)


def _eval_proposal(target, y):
    """Evaluate the target once at y; flag non-finite results."""
    logpi_y, grad_y = target.log_and_grad(y)
    ok = math.isfinite(logpi_y) and bool(np.all(np.isfinite(grad_y)))
    return logpi_y, np.asarray(grad_y, dtype=float), ok


class MalaKernel(_KernelBase):
    """Plain MALA: isotropic proposal, adaptive global step size."""

    def __init__(self, dim: int, sigma2: float | None = None, rho: float = 0.015,
                 target_rate: float = MALA_TARGET_RATE):
        super().__init__()
        self.dim = int(dim)
        self.controller = StepSizeController(
            sigma2 if sigma2 is not None else default_sigma2(dim), rho, target_rate
        )
        self.phase = ADAPTING

    def freeze(self) -> None:
        super().freeze()
        self.phase = FROZEN

    def step(self, state: ChainState, target: TargetModel, rng):
        noise = rng.standard_normal(self.dim)
        u = rng.random()
        s2 = self.controller.sigma2
        y = mala_propose(state.x, state.grad, None, s2, noise)
        logpi_y, grad_y, ok = _eval_proposal(target, y)
        log_a = _log_alpha(state, y, logpi_y, grad_y, state.grad, grad_y, s2) if ok else float("nan")
        new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
        self.controller.update(info.alpha)
        return new_state, info


class _PreconditionedStepMixin:
    """One normalized preconditioned MALA step given a stored root_hat."""

    def _precond_step(self, state: ChainState, target: TargetModel, rng):
        noise = rng.standard_normal(self.dim)
        u = rng.random()
        s2 = self.controller.sigma2
        root = self._root_hat
        if root is None:
            A_grad_x = state.grad
            y = mala_propose(state.x, state.grad, None, s2, noise)
        else:
            A_grad_x = root @ (root.T @ state.grad)
            y = state.x + (0.5 * s2) * A_grad_x + math.sqrt(s2) * (root @ noise)
        logpi_y, grad_y, ok = _eval_proposal(target, y)
        if ok:
            A_grad_y = grad_y if root is None else root @ (root.T @ grad_y)
            log_a = _log_alpha(state, y, logpi_y, grad_y, A_grad_x, A_grad_y, s2)
        else:
            log_a = float("nan")
        return y, logpi_y, grad_y, log_a, u


def _normalize_root(root: np.ndarray, trace_rrt: float, dim: int) -> np.ndarray:
    """Divide a root by sqrt of its average squared-entry trace (fast path)."""
    return root / math.sqrt(trace_rrt / dim)


def _sqrt_rational_rn(p: int, q: int) -> float:
    """Correctly rounded double sqrt(p/q) for positive integers p, q."""
    guard = 64
    n = p * q  # sqrt(p/q) = sqrt(p*q)/q
    while True:
        a = math.isqrt(n << (2 * guard))
        if a * a == n << (2 * guard):
            return float(Fraction(a, q << guard))
        lo = float(Fraction(a, q << guard))
        hi = float(Fraction(a + 1, q << guard))
        if lo == hi:
            return lo
        guard *= 2


def _normalize_root_exact(root: np.ndarray, dim: int) -> np.ndarray:
    """Trace-normalize with exact rational intermediates.

    Entry-wise result is the correctly rounded value of
    root_ij / sqrt(sum(root**2)/d).  Because the mean square and each
    quotient are formed exactly before the single final rounding, any
    rescaling of ``root`` whose entrywise float products are exact (for
    instance scaling a power-of-two matrix by any constant) cancels
    bit-for-bit.  Cold-path only: cost is dominated by big-int sqrt.
    """
    t = Fraction(0)
    for v in root.flat:
        f = Fraction(v)
        t += f * f
    if t <= 0:
        raise InvalidParameterError("root must be nonzero")
    mean_sq = t / dim
    out = np.empty_like(root)
    flat_in = root.ravel()
    flat_out = out.ravel()
    for i, x in enumerate(flat_in):
        if x == 0.0:
            flat_out[i] = 0.0
            continue
        ratio = Fraction(x) * Fraction(x) / mean_sq  # (x / sqrt(mean_sq))^2
        val = _sqrt_rational_rn(ratio.numerator, ratio.denominator)
        flat_out[i] = val if x > 0.0 else -val
    return out


class FisherMalaKernel(_KernelBase, _PreconditionedStepMixin):
    """Adaptive MALA that learns the inverse score-covariance online.

    Phase machine: ``init_mala`` runs plain MALA for ``init_iters`` steps
    adapting only sigma2; ``adapting`` runs the preconditioned proposal
    while feeding one signal per iteration into the square-root recursion
    and retuning sigma2; ``frozen`` fixes everything.

    Signal modes:
      * ``rb``      sqrt(alpha) * (grad(y) - grad(x)), nonzero even for
                    rejected proposals as long as alpha > 0;
      * ``no_rb``   the realized gradient increment, i.e. the same
                    difference gated by the accept coin;
      * ``paired``  raw score of the current state into the centered
                    mean/covariance estimator.
    """

    SIGNAL_MODES = ("rb", "no_rb", "paired")

    def __init__(self, dim: int, *, lam: float = 10.0, rho: float = 0.015,
                 target_rate: float = MALA_TARGET_RATE, init_iters: int = 500,
                 signal_mode: str = "rb", sigma2: float | None = None):
        super().__init__()
        if signal_mode not in self.SIGNAL_MODES:
            raise InvalidParameterError(f"signal_mode must be one of {self.SIGNAL_MODES}")
        if init_iters < 0:
            raise InvalidParameterError("init_iters must be nonnegative")
        self.dim = int(dim)
        self.signal_mode = signal_mode
        self.init_iters = int(init_iters)
        self.controller = StepSizeController(
            sigma2 if sigma2 is not None else default_sigma2(dim), rho, target_rate
        )
        if signal_mode == "paired":
            self.precond = PairedEstimator(dim, lam)
        else:
            self.precond = SqrtPreconditioner(dim, lam)
        self.phase = INIT_MALA if self.init_iters > 0 else ADAPTING
        self.sigma2_R = self.controller.sigma2
        self._init_done = 0
        self._root_hat: np.ndarray | None = None

    def freeze(self) -> None:
        super().freeze()
        self.phase = FROZEN

    def set_root(self, root) -> None:
        """Install an explicit square-root factor (frozen-kernel use).

        Normalization runs through exact rational arithmetic, so two roots
        that differ by an exactly representable rescaling yield the same
        kernel bit-for-bit; the global scale lives solely in sigma2.
        """
        root = np.asarray(root, dtype=float)
        if root.shape != (self.dim, self.dim):
            raise InvalidParameterError("root must be a dense d x d matrix")
        trace = float(np.einsum("ij,ij->", root, root))
        self._root_hat = _normalize_root_exact(root, self.dim)
        self.sigma2_R = self.controller.sigma2 / (trace / self.dim)

    def preconditioner_matrix(self) -> np.ndarray:
        if self._root_hat is None:
            return np.eye(self.dim)
        return self._root_hat @ self._root_hat.T

    def _refresh_root(self) -> None:
        trace = self.precond.trace_rrt
        self._root_hat = _normalize_root(self.precond.R, trace, self.dim)
        self.sigma2_R = self.controller.sigma2 / (trace / self.dim)

    def _signal(self, state: ChainState, grad_y, alpha: float, u: float) -> np.ndarray:
        if self.signal_mode == "paired":
            return state.grad
        if alpha <= 0.0:
            return np.zeros(self.dim)
        diff = grad_y - state.grad
        if self.signal_mode == "rb":
            return math.sqrt(alpha) * diff
        return diff if u < alpha else np.zeros(self.dim)

    def step(self, state: ChainState, target: TargetModel, rng):
        if self.phase == INIT_MALA:
            noise = rng.standard_normal(self.dim)
            u = rng.random()
            s2 = self.controller.sigma2
            y = mala_propose(state.x, state.grad, None, s2, noise)
            logpi_y, grad_y, ok = _eval_proposal(target, y)
            log_a = _log_alpha(state, y, logpi_y, grad_y, state.grad, grad_y, s2) if ok else float("nan")
            new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
            self.controller.update(info.alpha)
            self._init_done += 1
            if self._init_done >= self.init_iters:
                self.phase = ADAPTING
                self.sigma2_R = self.controller.sigma2
            return new_state, info

        y, logpi_y, grad_y, log_a, u = self._precond_step(state, target, rng)
        alpha = 0.0 if not math.isfinite(log_a) else math.exp(min(0.0, log_a))
        if self.phase == ADAPTING:
            self.precond.update(self._signal(state, grad_y, alpha, u))
            self.controller.update(alpha)
            self._refresh_root()
        return self._finish(state, y, logpi_y, grad_y, log_a, u)


class AdaMalaKernel(_KernelBase, _PreconditionedStepMixin):
    """Preconditioned MALA whose metric is the running state covariance.

    Phase machine: ``init_mala`` (plain MALA, sigma2 adapts), then
    ``warmup`` (plain MALA while the mean/covariance recursion accumulates
    visited states), then ``adapting`` (normalized preconditioned proposal
    with the running covariance, still updated every iteration), then
    ``frozen``.

    The covariance recursion over visited states x_1, x_2, ... is

        mu_n    = ((n-1)/n) mu_{n-1} + (1/n) x_n
        Sigma_n = ((n-2)/(n-1)) Sigma_{n-1}
                  + (1/n) (x_n - mu_{n-1})(x_n - mu_{n-1})^T

    seeded with mu_1 = x_1 and Sigma_2 = 0.5 (x_2 - mu_1)(x_2 - mu_1)^T
    + lam * I; the damping keeps the factorization alive early on.
    """

    def __init__(self, dim: int, *, lam: float = 10.0, rho: float = 0.015,
                 target_rate: float = MALA_TARGET_RATE, init_iters: int = 500,
                 warmup_iters: int = 500, sigma2: float | None = None):
        super().__init__()
        if init_iters < 0 or warmup_iters < 1:
            raise InvalidParameterError("phase lengths must be positive")
        self.dim = int(dim)
        self.lam = float(lam)
        self.init_iters = int(init_iters)
        self.warmup_iters = int(warmup_iters)
        self.controller = StepSizeController(
            sigma2 if sigma2 is not None else default_sigma2(dim), rho, target_rate
        )
        self.phase = INIT_MALA if self.init_iters > 0 else WARMUP
        self.mean: np.ndarray | None = None
        self.cov: np.ndarray | None = None
        self.n_states = 0
        self.sigma2_A = self.controller.sigma2
        self._root_hat: np.ndarray | None = None
        self._counter = 0

    def freeze(self) -> None:
        super().freeze()
        self.phase = FROZEN

    def preconditioner_matrix(self) -> np.ndarray:
        if self.cov is None:
            return np.eye(self.dim)
        return self.cov.copy()

    def _feed(self, x: np.ndarray) -> None:
        if self.n_states == 0:
            self.mean = x.copy()
            self.n_states = 1
            return
        m = self.n_states + 1
        delta = x - self.mean
        if m == 2:
            self.cov = 0.5 * np.outer(delta, delta) + self.lam * np.eye(self.dim)
        else:
            self.cov *= (m - 2) / (m - 1)
            self.cov += np.outer(delta, delta / m)
        self.mean += delta / m
        self.n_states = m

    def _refresh_root(self) -> None:
        A = self.cov
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            # jitter once for the factorization only; the recursion itself
            # keeps accumulating on the unmodified matrix
            A = self.cov + (self.lam * 1e-6) * np.eye(self.dim)
            try:
                L = np.linalg.cholesky(A)
            except np.linalg.LinAlgError as exc:
                try:
                    eigs = np.linalg.eigvalsh(self.cov)
                except np.linalg.LinAlgError:
                    eigs = None
                raise NumericalAbortError(
                    "covariance factorization failed twice; "
                    f"n_states={self.n_states}, trace={float(np.trace(self.cov))!r}, "
                    f"eigen_range={None if eigs is None else (float(eigs[0]), float(eigs[-1]))}"
                ) from exc
        trace = float(np.trace(A))
        self._root_hat = _normalize_root(L, trace, self.dim)
        self.sigma2_A = self.controller.sigma2 / (trace / self.dim)

    def step(self, state: ChainState, target: TargetModel, rng):
        if self.phase in (INIT_MALA, WARMUP):
            noise = rng.standard_normal(self.dim)
            u = rng.random()
            s2 = self.controller.sigma2
            y = mala_propose(state.x, state.grad, None, s2, noise)
            logpi_y, grad_y, ok = _eval_proposal(target, y)
            log_a = _log_alpha(state, y, logpi_y, grad_y, state.grad, grad_y, s2) if ok else float("nan")
            new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
            self.controller.update(info.alpha)
            self._counter += 1
            if self.phase == INIT_MALA:
                if self._counter >= self.init_iters:
                    self.phase = WARMUP
                    self._counter = 0
                    self._feed(new_state.x)  # seeds the mean recursion
            else:
                self._feed(new_state.x)
                if self._counter >= self.warmup_iters:
                    self.phase = ADAPTING
                    self._refresh_root()
            return new_state, info

        y, logpi_y, grad_y, log_a, u = self._precond_step(state, target, rng)
        new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
        if self.phase == ADAPTING:
            self._feed(new_state.x)
            self.controller.update(info.alpha)
            self._refresh_root()
        return new_state, info


class MmalaKernel(_KernelBase, _PreconditionedStepMixin):
    """Preconditioned MALA with the exact Gaussian covariance as metric.

    Only valid for Gaussian targets, where the constant metric equals the
    inverse score covariance exactly; it is the oracle the adaptive
    samplers are judged against.  Only sigma2 adapts.
    """

    def __init__(self, target: TargetModel, *, rho: float = 0.015,
                 target_rate: float = MALA_TARGET_RATE, sigma2: float | None = None):
        super().__init__()
        if not isinstance(target, GaussianTarget):
            raise UnsupportedTargetError(
                "constant-metric MALA requires a Gaussian target; "
                "position-dependent metrics are out of scope"
            )
        self.dim = target.dim
        self.controller = StepSizeController(
            sigma2 if sigma2 is not None else default_sigma2(target.dim), rho, target_rate
        )
        self.phase = ADAPTING
        self._cov = target.covariance
        L = np.linalg.cholesky(target.covariance)
        trace = float(np.trace(target.covariance))
        self._root_hat = _normalize_root_exact(L, self.dim)
        self.sigma2_A = self.controller.sigma2 / (trace / self.dim)
        self._trace = trace

    def freeze(self) -> None:
        super().freeze()
        self.phase = FROZEN

    def preconditioner_matrix(self) -> np.ndarray:
        return self._cov.copy()

    def step(self, state: ChainState, target: TargetModel, rng):
        y, logpi_y, grad_y, log_a, u = self._precond_step(state, target, rng)
        new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
        if self.phase == ADAPTING:
            self.controller.update(info.alpha)
            self.sigma2_A = self.controller.sigma2 / (self._trace / self.dim)
        return new_state, info


def leapfrog(x, p, eps: float, n_steps: int, target: TargetModel):
    """Symplectic integrator for H = -log pi(x) + 0.5 p.p.

    Returns (x', p', grad(x')); performs n_steps + 1 gradient evaluations.
    Volume preserving and time reversible: integrating from (x', -p')
    recovers (x, -p).
    """
    x = np.asarray(x, dtype=float).copy()
    p = np.asarray(p, dtype=float).copy()
    grad = np.asarray(target.grad_log_density(x), dtype=float)
    p = p + (0.5 * eps) * grad
    for i in range(n_steps):
        x = x + eps * p
        grad = np.asarray(target.grad_log_density(x), dtype=float)
        p = p + (eps if i < n_steps - 1 else 0.5 * eps) * grad
    return x, p, grad


class HmcKernel(_KernelBase):
    """Hamiltonian Monte Carlo with identity mass and fixed path length.

    Uses leapfrog with step size sqrt(sigma2); sigma2 adapts with the same
    multiplicative rule as the MALA kernels but toward the higher HMC
    target rate.
    """

    def __init__(self, dim: int, *, leapfrog_steps: int = 10, rho: float = 0.015,
                 target_rate: float = HMC_TARGET_RATE, sigma2: float | None = None):
        super().__init__()
        if leapfrog_steps < 1:
            raise InvalidParameterError("leapfrog_steps must be positive")
        self.dim = int(dim)
        self.leapfrog_steps = int(leapfrog_steps)
        self.controller = StepSizeController(
            sigma2 if sigma2 is not None else default_sigma2(dim, "hmc"), rho, target_rate
        )
        self.phase = ADAPTING

    def freeze(self) -> None:
        super().freeze()
        self.phase = FROZEN

    def step(self, state: ChainState, target: TargetModel, rng):
        p0 = rng.standard_normal(self.dim)
        u = rng.random()
        eps = math.sqrt(self.controller.sigma2)
        y, p1, grad_y = leapfrog(state.x, p0, eps, self.leapfrog_steps, target)
        if np.all(np.isfinite(y)) and np.all(np.isfinite(p1)):
            logpi_y = float(target.log_density(y))
        else:
            logpi_y = float("nan")
        if math.isfinite(logpi_y):
            log_a = (logpi_y - 0.5 * float(p1 @ p1)) - (state.logpi - 0.5 * float(p0 @ p0))
        else:
            log_a = float("nan")
        new_state, info = self._finish(state, y, logpi_y, grad_y, log_a, u)
        self.controller.update(info.alpha)
        return new_state, info
