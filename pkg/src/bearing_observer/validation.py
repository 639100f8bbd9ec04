"""Input validation helpers used at API boundaries.

All helpers return a float64 numpy array (converting as needed) or raise
ValueError whose message names the offending argument, so CLI and config
layers can surface the field directly.
"""

from __future__ import annotations

import numpy as np

UNIT_NORM_TOL = 1e-12


def as_vector(x, name: str, n: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float64 array, optionally of length n."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_unit_vector(y, name: str, n: int | None = None,
                   tol: float = UNIT_NORM_TOL) -> np.ndarray:
    """Coerce to a unit-norm vector; the norm must be 1 within tol."""
    arr = as_vector(y, name, n)
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{name} must be unit-norm (|{name}| = {nrm!r})")
    return arr


def as_square_matrix(m, name: str, n: int | None = None) -> np.ndarray:
    """Coerce to a finite square float64 matrix, optionally n-by-n."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} must be {n}x{n}, got {arr.shape[0]}x{arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_spd_matrix(m, name: str, n: int | None = None,
                  sym_tol: float = 1e-12) -> np.ndarray:
    """Coerce to a symmetric positive definite matrix."""
    arr = as_square_matrix(m, name, n)
    if not np.allclose(arr, arr.T, rtol=0.0, atol=sym_tol * max(1.0, abs(arr).max())):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(arr).min() <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return arr


def positive_float(v, name: str) -> float:
    val = float(v)
    if not np.isfinite(val) or val <= 0.0:
        raise ValueError(f"{name} must be a positive number, got {v!r}")
    return val
