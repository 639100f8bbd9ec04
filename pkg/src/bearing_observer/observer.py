"""Cascade observer: basic filter, auxiliary matrix flow, and dual observer.

The estimator integrates three coupled systems driven by a unit bearing y
and a biased velocity measurement v (true kinematics: dx/dt = v + a with a
an unknown constant bias):

    basic filter   d(x_hat_1)/dt = v - k * pi_y @ x_hat_1
    matrix flow    dM/dt         = I - k * pi_y @ M,  M(0) SPD
    dual observer  d(z_hat*)/dt  = v* - k* * pi_{y*} @ z_hat*

where pi_y = I - y y^T, the dual output y* is M^-1 y renormalized, and
v* = M^-1 (v - M^-1 x_hat_1). The position and bias estimates are the
algebraic reconstructions x_hat = M z_hat* and a_hat = z_hat* - M^-1 x_hat_1.
Under persistently exciting bearings all estimation errors converge
exponentially; the `analysis` module checks the associated bounds.

Units: positions in meters, velocities in m/s, gains in 1/s; M then carries
units of seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirection, IllConditioned
from .linalg import (
    COND_LIMIT,
    DIRECTION_EPS,
    identity,
    invert,
    norm1,
    projector,
    rk4_step,
)

#: det(M) at or below this trips the invertibility guard. Under persistent
#: excitation det(M) grows toward an O(1) floor, so reaching 1e-12 indicates
#: a configuration or integration fault worth surfacing.
DET_FLOOR = 1e-12


@dataclass(frozen=True)
class Gains:
    """Observer gains, both in 1/s and strictly positive."""

    k: float
    k_star: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.k) and self.k > 0.0):
            raise ValueError(f"gains.k must be positive, got {self.k!r}")
        if not (np.isfinite(self.k_star) and self.k_star > 0.0):
            raise ValueError(f"gains.k_star must be positive, got {self.k_star!r}")


@dataclass(frozen=True)
class Measurement:
    """One sample of the sensor pair: unit bearing y and measured velocity v."""

    y: np.ndarray
    v: np.ndarray
    t: float


@dataclass(frozen=True)
class ObserverState:
    """Everything the cascade integrates: x_hat_1 (m), M (s), z_hat_star (m/s)."""

    x_hat_1: np.ndarray
    M: np.ndarray
    z_hat_star: np.ndarray
    t: float

    @property
    def n(self) -> int:
        return self.x_hat_1.shape[0]


@dataclass(frozen=True)
class ObserverOutput:
    """Algebraic reconstructions from one state/measurement pair."""

    x_hat: np.ndarray    # position estimate, m
    a_hat: np.ndarray    # velocity-bias estimate, m/s
    y_star: np.ndarray   # dual bearing (unit)
    v_star: np.ndarray   # dual velocity input


def initial_state(n: int, x_hat_1_0=None, m0=None, z_hat_star_0=None,
                  t: float = 0.0) -> ObserverState:
    """Default initial state: x_hat_1 = 0, M = I, z_hat_star = 0."""
    x1 = np.zeros(n) if x_hat_1_0 is None else np.asarray(x_hat_1_0, dtype=float).copy()
    m = np.eye(n) if m0 is None else np.asarray(m0, dtype=float).copy()
    zs = np.zeros(n) if z_hat_star_0 is None else np.asarray(z_hat_star_0, dtype=float).copy()
    return ObserverState(x_hat_1=x1, M=m, z_hat_star=zs, t=t)


# ---------------------------------------------------------------------------
# Right-hand sides of the three subsystems
# ---------------------------------------------------------------------------

def basic_filter_rhs(x_hat_1: np.ndarray, y: np.ndarray, v: np.ndarray,
                     k: float) -> np.ndarray:
    """d(x_hat_1)/dt = v - k * pi_y @ x_hat_1."""
    return v - k * (projector(y) @ x_hat_1)


def m_matrix_rhs(m: np.ndarray, y: np.ndarray, k: float) -> np.ndarray:
    """dM/dt = I - k * pi_y @ M."""
    return identity(m.shape[0]) - k * (projector(y) @ m)


def dual_output(m: np.ndarray, y: np.ndarray, eps: float = DIRECTION_EPS,
                cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Dual bearing: M^-1 y renormalized to the unit sphere.

    Raises:
        IllConditioned: propagated from the inversion guard.
        DegenerateDirection: if |M^-1 y| <= eps.
    """
    m_inv = invert(m, cond_limit)
    my = m_inv @ np.asarray(y, dtype=float)
    nrm = float(np.linalg.norm(my))
    if nrm <= eps:
        raise DegenerateDirection(f"|M^-1 y| = {nrm:.3e} <= {eps:.3e}")
    return my / nrm


def dual_velocity(m: np.ndarray, v: np.ndarray, x_hat_1: np.ndarray,
                  cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Dual velocity input: M^-1 (v - M^-1 x_hat_1)."""
    m_inv = invert(m, cond_limit)
    return m_inv @ (np.asarray(v, dtype=float) - m_inv @ x_hat_1)


def dual_observer_rhs(z_hat_star: np.ndarray, y_star: np.ndarray,
                      v_star: np.ndarray, k_star: float) -> np.ndarray:
    """d(z_hat_star)/dt = v_star - k_star * pi_{y_star} @ z_hat_star."""
    return v_star - k_star * (projector(y_star) @ z_hat_star)


# ---------------------------------------------------------------------------
# One integration step of the full cascade
# ---------------------------------------------------------------------------

def _pack(x1: np.ndarray, m: np.ndarray, zs: np.ndarray) -> np.ndarray:
    return np.concatenate([x1, m.ravel(), zs])


def _unpack(flat: np.ndarray, n: int):
    return flat[:n], flat[n:n + n * n].reshape(n, n), flat[n + n * n:]


def observer_step(state: ObserverState, meas: Measurement, gains: Gains,
                  h: float, det_floor: float = DET_FLOOR,
                  cond_limit: float = COND_LIMIT) -> ObserverState:
    """Advance the full cascade one RK4 step with the measurement held fixed.

    The same (y, v) sample is used for all four stages (zero-order hold);
    the dual quantities y_star and v_star are algebraic functions of the
    state and are recomputed from the stage values of M and x_hat_1.

    Raises:
        ValueError: if h <= 0.
        IllConditioned: if det(M) <= det_floor or cond(M) > cond_limit at
            entry, or a stage inversion trips the guard.
        NonFiniteField: propagated from the integrator.
    """
    if h <= 0.0:
        raise ValueError(f"step size h must be positive, got {h!r}")
    n = state.n
    det_m = float(np.linalg.det(state.M))
    if det_m <= det_floor:
        raise IllConditioned(
            f"det(M) = {det_m:.3e} <= {det_floor:.3e} at t = {state.t!r}"
        )
    cond = condition_number_1norm(state.M)
    if cond > cond_limit:
        raise IllConditioned(
            f"cond(M) = {cond:.3e} exceeds {cond_limit:.3e} at t = {state.t!r}"
        )

    y = np.asarray(meas.y, dtype=float)
    v = np.asarray(meas.v, dtype=float)
    k, k_star = gains.k, gains.k_star
    eye = identity(n)
    pi_y = eye - y[:, None] * y[None, :]

    def rhs(_t: float, flat: np.ndarray) -> np.ndarray:
        # Stage values stay within O(h) of the guarded entry state, so the
        # stages use a plain inverse; an exactly singular stage still raises.
        x1, m, zs = _unpack(flat, n)
        dx1 = v - k * (pi_y @ x1)
        dm = eye - k * (pi_y @ m)
        try:
            minv = np.linalg.inv(m)
        except np.linalg.LinAlgError as exc:
            raise IllConditioned(f"M singular during step at t = {_t!r}") from exc
        my = minv @ y
        nrm = float(np.sqrt(my @ my))
        if nrm <= DIRECTION_EPS:
            raise DegenerateDirection(f"|M^-1 y| = {nrm:.3e} during step at t = {_t!r}")
        y_star = my / nrm
        v_star = minv @ (v - minv @ x1)
        dzs = v_star - k_star * (zs - y_star * (y_star @ zs))
        return _pack(dx1, dm, dzs)

    flat = rk4_step(rhs, state.t, _pack(state.x_hat_1, state.M, state.z_hat_star), h)
    x1, m, zs = _unpack(flat, n)
    return ObserverState(x_hat_1=x1.copy(), M=m.copy(), z_hat_star=zs.copy(),
                         t=state.t + h)


def reconstruct(state: ObserverState, meas: Measurement,
                cond_limit: float = COND_LIMIT) -> ObserverOutput:
    """Position and bias estimates plus the dual quantities at one sample.

    x_hat = M z_hat_star holds exactly by construction; a_hat satisfies
    a_hat + M^-1 x_hat_1 - z_hat_star = 0 to rounding.
    """
    m_inv = invert(state.M, cond_limit)
    y = np.asarray(meas.y, dtype=float)
    my = m_inv @ y
    nrm = float(np.linalg.norm(my))
    if nrm <= DIRECTION_EPS:
        raise DegenerateDirection(f"|M^-1 y| = {nrm:.3e} at t = {state.t!r}")
    return ObserverOutput(
        x_hat=state.M @ state.z_hat_star,
        a_hat=state.z_hat_star - m_inv @ state.x_hat_1,
        y_star=my / nrm,
        v_star=m_inv @ (np.asarray(meas.v, dtype=float) - m_inv @ state.x_hat_1),
    )


def virtual_state(state: ObserverState, a_true: np.ndarray) -> np.ndarray:
    """Analysis-only quantity x_hat_1 + M a_true (needs the true bias).

    Its error x - virtual_state obeys the same contracting dynamics as the
    unbiased basic filter, which is what makes the cascade work; only the
    analysis layer may call this since a_true is unknown to the observer.
    """
    return state.x_hat_1 + state.M @ np.asarray(a_true, dtype=float)


def condition_number_1norm(m: np.ndarray) -> float:
    """1-norm condition estimate used by the step guard and health checks."""
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return float("inf")
    return norm1(m) * norm1(inv)
