"""Input validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    InvalidInputError,
)


def as_vector(x, name="x", dim=None) -> np.ndarray:
    """Coerce to a finite float64 1-d array, optionally of fixed length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-d, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(
            f"{name} has length {arr.shape[0]}, expected {dim}"
        )
    return arr


def as_matrix(x, name="X", cols=None) -> np.ndarray:
    """Coerce to a finite float64 2-d array, optionally with a fixed column count."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-d, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionMismatchError(
            f"{name} has {arr.shape[1]} columns, expected {cols}"
        )
    return arr


def as_labels(y, name="y", n_classes=None) -> np.ndarray:
    """Coerce to an int64 1-d label array with entries in [0, n_classes)."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-d, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.round(np.asarray(arr, dtype=np.float64))
        if not np.all(np.isfinite(rounded)) or np.any(rounded != np.asarray(arr, dtype=np.float64)):
            raise InvalidInputError(f"{name} must hold integer class labels")
        arr = rounded
    arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise InvalidInputError(f"{name} contains negative labels")
    if n_classes is not None and np.any(arr >= n_classes):
        raise InvalidInputError(f"{name} contains labels >= n_classes ({n_classes})")
    return arr


def check_distribution(p, name="p", tol=1e-9) -> np.ndarray:
    """Validate a probability vector: non-negative entries summing to 1 within tol."""
    arr = as_vector(p, name)
    if np.any(arr < -tol):
        raise InvalidDistributionError(f"{name} has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise InvalidDistributionError(
            f"{name} sums to {total!r}, expected 1 within {tol}"
        )
    return arr


def check_positive(value, name) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be positive and finite, got {value!r}")
    return value


def check_non_negative(value, name) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise InvalidInputError(f"{name} must be non-negative and finite, got {value!r}")
    return value
