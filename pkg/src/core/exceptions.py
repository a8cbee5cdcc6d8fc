"""
Error hierarchy for Vertical Consensus Inference.
"""
from typing import Optional


class VCIError(Exception):
    """Base class for all library errors."""
    exit_code = 1


class InvalidArgumentError(VCIError, ValueError):
    """Invalid input to a library operation."""
    exit_code = 2


class ConfigError(VCIError, ValueError):
    """Invalid run configuration or shard layout."""
    exit_code = 2


class SizeGuardError(VCIError, ValueError):
    """Problem too large for exhaustive enumeration."""
    exit_code = 2


class DegenerateWeightsError(VCIError, ValueError):
    """Power projection of an all-zero weight vector."""
    exit_code = 2


class DegenerateKernelError(VCIError, ArithmeticError):
    """Gibbs kernel with an all-zero row or column."""
    exit_code = 3

    def __init__(self, message: str, shard: Optional[int] = None):
        super().__init__(message)
        self.shard = shard

    def __reduce__(self):
        return type(self), (str(self), self.shard)


class ConvergenceError(VCIError, ArithmeticError):
    """Iterative solver stopped before reaching its tolerance."""
    exit_code = 3

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

    def __reduce__(self):
        return type(self), (str(self), self.residual, self.iterations)


class DataIOError(VCIError, OSError):
    """Missing, unreadable or malformed file."""
    exit_code = 4


class StageError(VCIError):
    """Failure inside a pipeline stage."""

    def __init__(self, stage: str, cause: BaseException, shard: Optional[int] = None):
        where = f"stage '{stage}'" if shard is None else f"stage '{stage}' (shard {shard})"
        super().__init__(f"{where} failed: {cause}")
        self.stage = stage
        self.shard = shard
        self.cause = cause
        self.exit_code = exit_code_for(cause)

    # worker processes send exceptions back pickled
    def __reduce__(self):
        return type(self), (self.stage, self.cause, self.shard)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, VCIError):
        return exc.exit_code
    try:
        from pydantic import ValidationError
        if isinstance(exc, ValidationError):
            return 2
    except ImportError:  # pragma: no cover
        pass
    if isinstance(exc, OSError):
        return 4
    if isinstance(exc, ValueError):
        return 2
    return 1
