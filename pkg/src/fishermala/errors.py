"""Exception hierarchy shared across the package."""


class FisherMalaError(Exception):
    """Base class for all library-specific errors."""


class InvalidSignalError(FisherMalaError, ValueError):
    """An adaptation signal was non-finite or had the wrong shape."""


class InvalidParameterError(FisherMalaError, ValueError):
    """A numeric parameter violated its domain (e.g. damping <= 0)."""


class UnsupportedTargetError(FisherMalaError, TypeError):
    """A sampler received a target it cannot handle (e.g. mMALA on non-Gaussian)."""


class DatasetError(FisherMalaError, ValueError):
    """A dataset file failed to parse or validate."""


class NumericalAbortError(FisherMalaError, RuntimeError):
    """An unrecoverable numerical failure (e.g. repeated Cholesky breakdown)."""


class ConfigError(FisherMalaError, ValueError):
    """An experiment configuration failed to parse or validate."""


class TargetConstructionError(FisherMalaError, ValueError):
    """A target distribution could not be constructed from its spec."""
