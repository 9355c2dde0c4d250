"""Target distributions: log-densities, gradients, and dataset ingestion.

Every target exposes ``dim``, ``log_density(x)`` (up to an additive
constant) and ``grad_log_density(x)``.  Samplers call ``log_and_grad`` so
a single evaluation serves both the acceptance ratio and the next
proposal's drift.
"""

from __future__ import annotations

import csv
import math
import warnings

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import expit

from .errors import DatasetError, InvalidParameterError

__all__ = [
    "TargetModel",
    "GaussianTarget",
    "LogisticRegressionTarget",
    "gaussian_2d_correlated",
    "gaussian_gp_target",
    "gaussian_inhomogeneous",
    "standard_normal_target",
    "synthetic_logreg_target",
    "load_csv_dataset",
]

_LOG_2PI = math.log(2.0 * math.pi)


class TargetModel:
    """Interface for an unnormalized target density on R^d."""

    dim: int

    def log_density(self, x) -> float:
        raise NotImplementedError

    def grad_log_density(self, x) -> np.ndarray:
        raise NotImplementedError

    def log_and_grad(self, x) -> tuple[float, np.ndarray]:
        """One evaluation returning both pieces; override when they share work."""
        return self.log_density(x), self.grad_log_density(x)


class GaussianTarget(TargetModel):
    """Multivariate normal N(mean, covariance) with cached factorizations.

    The covariance is Cholesky-factored once; gradients use the dense
    precision matrix so each evaluation is a single mat-vec.  For this
    family the score-covariance matrix is exactly the precision, so the
    optimal preconditioner equals the covariance itself, which is why
    these targets double as ground truth in adaptation diagnostics.
    """

    def __init__(self, mean, covariance):
        mean = np.asarray(mean, dtype=float).reshape(-1)
        cov = np.asarray(covariance, dtype=float)
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InvalidParameterError(f"covariance shape {cov.shape} does not match dim {d}")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if float(np.max(np.abs(cov - cov.T))) > 1e-12 * scale:
            raise InvalidParameterError("covariance must be symmetric (tolerance 1e-12)")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidParameterError("covariance is not positive definite") from exc
        self.dim = d
        self.mean = mean
        self.covariance = cov
        self._chol = chol
        precision = cho_solve((chol, True), np.eye(d))
        self._precision = 0.5 * (precision + precision.T)
        self._logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))

    @property
    def precision(self) -> np.ndarray:
        """Dense inverse covariance (equals the score-covariance matrix)."""
        return self._precision

    def log_density(self, x) -> float:
        dev = np.asarray(x, dtype=float) - self.mean
        quad = float(dev @ (self._precision @ dev))
        return -0.5 * (self.dim * _LOG_2PI + self._logdet + quad)

    def grad_log_density(self, x) -> np.ndarray:
        dev = np.asarray(x, dtype=float) - self.mean
        return -(self._precision @ dev)

    def log_and_grad(self, x) -> tuple[float, np.ndarray]:
        dev = np.asarray(x, dtype=float) - self.mean
        pdev = self._precision @ dev
        logp = -0.5 * (self.dim * _LOG_2PI + self._logdet + float(dev @ pdev))
        return logp, -pdev

    def solve_covariance(self, v) -> np.ndarray:
        """Solve covariance @ out = v through the Cholesky factor."""
        return cho_solve((self._chol, True), np.asarray(v, dtype=float))

    def sample(self, rng, n: int) -> np.ndarray:
        """n exact draws, one per row."""
        eta = rng.standard_normal((int(n), self.dim))
        return self.mean + eta @ self._chol.T

    def grad_batch(self, X) -> np.ndarray:
        """Gradients for a batch of rows."""
        dev = np.asarray(X, dtype=float) - self.mean
        return -(dev @ self._precision)


def standard_normal_target(dim: int) -> GaussianTarget:
    """Isotropic unit Gaussian, the usual smoke-test target."""
    dim = int(dim)
    return GaussianTarget(np.zeros(dim), np.eye(dim))


def gaussian_2d_correlated() -> GaussianTarget:
    """2-D Gaussian with correlation 0.995 (condition number 399)."""
    cov = np.array([[1.0, 0.995], [0.995, 1.0]])
    return GaussianTarget(np.ones(2), cov)


def gaussian_gp_target(dim: int = 100) -> GaussianTarget:
    """Gaussian whose covariance is a product kernel on a grid.

    Grid points s_1..s_d are equally spaced on [1, 2] inclusive and

        cov[i, j] = s_i s_j exp(-(s_i - s_j)^2 / 0.18) + 0.001 * delta_ij,

    a linear times squared-exponential kernel plus white noise.  The
    white-noise term keeps the smallest eigenvalue at 0.001 or above.
    """
    dim = int(dim)
    if dim < 2:
        raise InvalidParameterError("grid kernel needs dim >= 2")
    s = np.linspace(1.0, 2.0, dim)
    diff = s[:, None] - s[None, :]
    cov = np.outer(s, s) * np.exp(-(diff**2) / 0.18) + 0.001 * np.eye(dim)
    return GaussianTarget(np.ones(dim), cov)


def gaussian_inhomogeneous(dim: int = 100) -> GaussianTarget:
    """Diagonal Gaussian with standard deviations 0.01, 0.02, ..., 1.

    Defined for dim = 100; other dimensions use the scaled grid i/dim
    (same endpoints-to-scale shape) and emit a warning since that is a
    deviation from the reference setup.
    """
    dim = int(dim)
    if dim < 1:
        raise InvalidParameterError("dim must be positive")
    if dim != 100:
        warnings.warn(
            f"inhomogeneous grid is defined for dim=100; using scaled grid i/{dim}",
            stacklevel=2,
        )
    sd = np.arange(1, dim + 1) / dim
    return GaussianTarget(np.ones(dim), np.diag(sd**2))


class LogisticRegressionTarget(TargetModel):
    """Bayesian logistic-regression posterior with a unit-normal prior.

    log pi(theta) = sum_i [ y_i log s(theta.z_i) + (1-y_i) log(1 - s(theta.z_i)) ]
                    - 0.5 * theta.theta

    where s is the logistic function.  Log-sigmoids are evaluated through
    log(1 + exp(.)) in its overflow-safe form, so |theta.z_i| up to ~700
    stays finite.  The prior variance is fixed at one.
    """

    def __init__(self, inputs, labels):
        Z = np.asarray(inputs, dtype=float)
        y = np.asarray(labels, dtype=float).reshape(-1)
        if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
            raise InvalidParameterError(
                f"inputs {Z.shape} and labels {y.shape} are inconsistent"
            )
        if not np.all(np.isfinite(Z)):
            raise InvalidParameterError("inputs contain non-finite entries")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise InvalidParameterError("labels must be strictly binary (0 or 1)")
        self.inputs = Z
        self.labels = y
        self.dim = Z.shape[1]
        self.n_obs = Z.shape[0]
        self.prior_variance = 1.0

    def log_density(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        a = self.inputs @ theta
        # log s(a) = -log(1+e^{-a}), log(1-s(a)) = -log(1+e^{a})
        loglik = -np.sum(self.labels * np.logaddexp(0.0, -a) + (1.0 - self.labels) * np.logaddexp(0.0, a))
        return float(loglik) - 0.5 * float(theta @ theta)

    def grad_log_density(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        a = self.inputs @ theta
        return self.inputs.T @ (self.labels - expit(a)) - theta

    def log_and_grad(self, theta) -> tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        a = self.inputs @ theta
        loglik = -np.sum(self.labels * np.logaddexp(0.0, -a) + (1.0 - self.labels) * np.logaddexp(0.0, a))
        logp = float(loglik) - 0.5 * float(theta @ theta)
        grad = self.inputs.T @ (self.labels - expit(a)) - theta
        return logp, grad


def synthetic_logreg_target(
    dim: int = 20,
    n_obs: int = 500,
    scale_span: float = 1e3,
    seed: int = 20240,
) -> LogisticRegressionTarget:
    """Deterministic synthetic logistic-regression posterior.

    Feature columns are left unstandardized with scales log-spaced over a
    ratio of ``scale_span``, producing a sharply anisotropic posterior:
    the benchmark regime where single-step-size samplers stall.
    """
    if scale_span <= 1.0:
        raise InvalidParameterError("scale_span must exceed 1")
    rng = np.random.default_rng(seed)
    half = 0.5 * math.log10(scale_span)
    scales = np.logspace(-half, half, int(dim))
    Z = rng.standard_normal((int(n_obs), int(dim))) * scales
    # coefficients shrink with the column scale so logits stay O(1)
    theta_true = 2.0 * rng.standard_normal(int(dim)) / (scales * math.sqrt(dim))
    y = (rng.random(int(n_obs)) < expit(Z @ theta_true)).astype(float)
    return LogisticRegressionTarget(Z, y)


def _looks_like_header(row: list[str]) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def load_csv_dataset(
    path,
    label_column,
    add_bias: bool = False,
    scale_pixels: bool = False,
) -> LogisticRegressionTarget:
    """Load a binary-classification CSV into a logistic-regression target.

    One row per observation, comma separated, '.' decimal, UTF-8, with an
    optional header.  ``label_column`` selects the label by header name or
    zero-based index; remaining columns become the features in file order.
    Features are deliberately NOT standardized.  ``scale_pixels`` divides
    the features by 255 (grey-scale image convention) before the optional
    bias column of ones is appended.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    if not rows:
        raise DatasetError(f"{path}: empty dataset")

    header: list[str] | None = None
    if _looks_like_header(rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"{path}: no data rows after header")

    ncol = len(rows[0][1])
    if isinstance(label_column, str):
        if header is None:
            raise DatasetError(f"{path}: label column {label_column!r} needs a header row")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DatasetError(
                f"{path}: label column {label_column!r} not in header {header}"
            ) from None
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < ncol:
            raise DatasetError(f"{path}: label index {label_idx} out of range for {ncol} columns")

    data = np.empty((len(rows), ncol))
    for i, (lineno, row) in enumerate(rows):
        if len(row) != ncol:
            raise DatasetError(f"{path}: line {lineno}: expected {ncol} fields, got {len(row)}")
        try:
            data[i] = [float(c) for c in row]
        except ValueError as exc:
            raise DatasetError(f"{path}: line {lineno}: {exc}") from None

    labels = data[:, label_idx]
    bad = np.nonzero(~((labels == 0.0) | (labels == 1.0)))[0]
    if bad.size:
        lineno = rows[bad[0]][0]
        raise DatasetError(
            f"{path}: line {lineno}: non-binary label {labels[bad[0]]!r} (labels must be 0 or 1)"
        )

    feats = np.delete(data, label_idx, axis=1)
    if scale_pixels:
        feats = feats / 255.0
    if add_bias:
        feats = np.hstack([feats, np.ones((feats.shape[0], 1))])
    return LogisticRegressionTarget(feats, labels)
