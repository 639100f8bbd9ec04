"""Dimension-generic small dense linear algebra and fixed-step ODE steps.

Vectors are 1-D float64 numpy arrays, matrices 2-D; the dimension n >= 2 is
a runtime property and storage is always dense (n stays small). All
functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DegenerateDirection, IllConditioned, NonFiniteField

#: |x| at or below this has no usable direction (meters for positions).
DIRECTION_EPS = 1e-9

#: Default condition-number guard for invert().
COND_LIMIT = 1e12

#: f(t, state) -> d(state)/dt; state may be any ndarray shape.
VectorField = Callable[[float, np.ndarray], np.ndarray]


_EYE_CACHE: dict[int, np.ndarray] = {}


def identity(n: int) -> np.ndarray:
    """Cached identity matrix (do not mutate the result)."""
    eye = _EYE_CACHE.get(n)
    if eye is None:
        eye = np.eye(n)
        eye.setflags(write=False)
        _EYE_CACHE[n] = eye
    return eye


def projector(y: np.ndarray) -> np.ndarray:
    """Orthogonal projector I - y y^T onto the complement of the unit vector y.

    The result is symmetric and idempotent, with eigenvalue 0 along y and 1
    on the orthogonal complement. y is assumed unit-norm (enforced where
    directions are constructed); this is a hot path and does not re-check.
    """
    y = np.asarray(y, dtype=float)
    return identity(y.shape[0]) - y[:, None] * y[None, :]


def direction(x: np.ndarray, eps: float = DIRECTION_EPS) -> np.ndarray:
    """Unit vector x / |x|.

    Raises:
        DegenerateDirection: if |x| <= eps, i.e. the direction is undefined.
    """
    x = np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(x))
    if nrm <= eps:
        raise DegenerateDirection(f"|x| = {nrm:.3e} <= {eps:.3e}; direction undefined")
    return x / nrm


def norm1(m: np.ndarray) -> float:
    """Induced 1-norm (maximum absolute column sum)."""
    return float(np.abs(m).sum(axis=0).max())


def invert(m: np.ndarray, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Dense inverse with a 1-norm condition-number guard.

    Uses pivoted LU via LAPACK. The residual ||M M^-1 - I|| stays below
    ~n*eps*cond(M), far inside the 1e-9*cond contract.

    Raises:
        IllConditioned: if the matrix is singular or the estimated condition
            number exceeds cond_limit.
    """
    m = np.asarray(m, dtype=float)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(inv)):
        raise IllConditioned("matrix inverse is non-finite")
    cond = norm1(m) * norm1(inv)
    if cond > cond_limit:
        raise IllConditioned(
            f"condition number {cond:.3e} exceeds limit {cond_limit:.3e}"
        )
    return inv


def rk4_step(f: VectorField, t: float, state: np.ndarray, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step; local error O(h^5).

    Raises:
        ValueError: if h <= 0.
        NonFiniteField: if f evaluates to NaN/inf at any stage (non-finite
            stage values always contaminate the combined increment, which is
            where the check runs).
    """
    if h <= 0.0:
        raise ValueError(f"step size h must be positive, got {h!r}")
    k1 = f(t, state)
    k2 = f(t + 0.5 * h, state + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, state + 0.5 * h * k2)
    k4 = f(t + h, state + h * k3)
    increment = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(increment).all():
        raise NonFiniteField(f"vector field returned non-finite values near t = {t!r}")
    return state + increment


def euler_step(f: VectorField, t: float, state: np.ndarray, h: float) -> np.ndarray:
    """One explicit Euler step; local error O(h^2). Cross-check integrator."""
    if h <= 0.0:
        raise ValueError(f"step size h must be positive, got {h!r}")
    k1 = np.asarray(f(t, state), dtype=float)
    if not np.isfinite(k1).all():
        raise NonFiniteField(f"vector field returned non-finite values at t = {t!r}")
    return state + h * k1
