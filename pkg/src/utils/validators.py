"""
Validation utility functions shared by the numerical modules.
"""

from typing import Optional, Sequence

import numpy as np

from src.core.exceptions import InvalidArgumentError

SIMPLEX_TOL = 1e-9


def validate_simplex(weights: Sequence[float], name: str = "weights",
                     tol: float = SIMPLEX_TOL, renormalize: bool = True) -> np.ndarray:
    """
    Validate a probability vector.

    Drift below ``tol`` is renormalized silently; larger drift is an error.

    Args:
        weights: Candidate simplex vector
        name: Name used in error messages
        tol: Allowed deviation of the sum from one
        renormalize: Divide by the sum before returning

    Returns:
        Weights as a float array
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    if np.any(w < 0):
        raise InvalidArgumentError(f"{name} contains negative entries")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise InvalidArgumentError(f"{name} must sum to 1 (got {total:.12g})")
    return w / total if renormalize else w


def validate_nonnegative_weights(weights: Sequence[float], length: Optional[int] = None,
                                 name: str = "weights") -> np.ndarray:
    """Validate unnormalized weights: finite, nonnegative, not all zero."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector")
    if length is not None and w.size != length:
        raise InvalidArgumentError(f"{name} has length {w.size}, expected {length}")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    if np.any(w < 0):
        raise InvalidArgumentError(f"{name} contains negative entries")
    if not np.any(w > 0):
        raise InvalidArgumentError(f"{name} are all zero")
    return w


def validate_data_matrix(data, name: str = "data", min_rows: int = 1) -> np.ndarray:
    """Validate a finite real n x d matrix."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be a 2-d matrix")
    if x.shape[0] < min_rows:
        raise InvalidArgumentError(f"{name} needs at least {min_rows} rows, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return x


def validate_count_matrix(counts, name: str = "counts") -> np.ndarray:
    """Validate a nonnegative integer matrix with a positive total in every row."""
    x = np.asarray(counts)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidArgumentError(f"{name} must be a nonempty 2-d matrix")
    xf = x.astype(float)
    if not np.all(np.isfinite(xf)) or np.any(xf < 0) or np.any(xf != np.round(xf)):
        raise InvalidArgumentError(f"{name} must contain nonnegative integers")
    row_totals = xf.sum(axis=1)
    empty = np.flatnonzero(row_totals <= 0)
    if empty.size:
        raise InvalidArgumentError(f"{name} row {int(empty[0])} has no positive count")
    return xf.astype(np.int64)


def validate_positive(value: float, name: str) -> float:
    """Check that a scalar is a finite positive number."""
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be a positive number, got {value}")
    return float(value)
