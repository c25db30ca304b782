"""Exception types shared across the package."""


class StructureError(ValueError):
    """Mismatched grids, wrong array lengths, or otherwise malformed inputs."""


class SolverError(RuntimeError):
    """Linear solver failed to converge; carries the final residual."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class FormatError(ValueError):
    """Corrupt or unsupported dataset file; names the failing byte offset."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class NumericsError(RuntimeError):
    """Factorization or optimization failure after all fallbacks."""


class NumericalJitterWarning(UserWarning):
    """A covariance had to be clamped or jittered to stay positive-definite."""
