"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf values")
    return arr


def check_measurement_tensor(X, name: str = "X") -> np.ndarray:
    """Validate an (m, M, n) per-node measurement tensor."""
    arr = as_float_array(X, name)
    if arr.ndim != 3:
        raise ValueError(f"{name} must have shape (m, M, n), got {arr.shape}")
    m, M, n = arr.shape
    if m < 1 or M < 1 or n < 1:
        raise ValueError(f"{name} has an empty axis: {arr.shape}")
    return arr


def check_design_matrix(X, name: str = "X") -> np.ndarray:
    arr = as_float_array(X, name)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d design matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} has an empty axis: {arr.shape}")
    return arr


def check_observations(y, m: int, name: str = "y") -> np.ndarray:
    arr = as_float_array(y, name)
    arr = arr.reshape(-1)
    if arr.shape[0] != m:
        raise ValueError(f"{name} has {arr.shape[0]} entries, expected {m}")
    return arr


def check_weight_matrix(W, node_count: int | None = None) -> np.ndarray:
    arr = as_float_array(W, "weights")
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"weights must be an (M, N) matrix, got shape {arr.shape}")
    if node_count is not None and arr.shape[0] != node_count:
        raise ValueError(
            f"weights has {arr.shape[0]} rows, expected one per node ({node_count})"
        )
    return arr


def require_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
