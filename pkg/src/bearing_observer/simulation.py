"""Ground-truth kinematics, scenarios, measurement noise, and the sim loop.

A Scenario fully describes one experiment (dimension, input trajectory,
bias, gains, initial conditions, step size, noise, seed); `simulate` turns
it into a SimulationTrace by co-integrating the ground truth dx/dt = v + a
and the cascade observer on a shared fixed grid. Identical scenarios
(including the seed) produce bit-identical traces.

Measurement noise follows the sensor construction: a uniform perturbation
is added to the position *before* projecting onto the unit sphere. The
noise generator is numpy's default PCG64 bit generator, seeded from
Scenario.seed, drawing one n-vector per recorded sample.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import BearingObserverError
from .linalg import DIRECTION_EPS, direction, rk4_step
from .observer import (
    Gains,
    Measurement,
    ObserverState,
    basic_filter_rhs,
    initial_state,
    observer_step,
    reconstruct,
    virtual_state,
)
from .validation import (
    as_spd_matrix,
    as_vector,
    positive_float,
)

TRAJECTORY_KINDS = ("circle", "constant")
NOISE_KINDS = ("none", "uniform_position")


@dataclass(frozen=True)
class TrajectorySpec:
    """Total-velocity generator id plus parameters.

    kind = "circle": total velocity (-radius*omega*sin(omega t),
    radius*omega*cos(omega t), 0, ...) confined to the first two axes,
    tracing a circle of the given radius about the starting axis offset.

    kind = "constant": total velocity fixed at `velocity` (length n).
    """

    kind: str = "circle"
    omega: float = 0.5      # rad/s, circle only
    radius: float = 1.0     # m, circle only
    velocity: Optional[tuple] = None  # m/s, constant only


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise: per-axis i.i.d. uniform on [-half_width, half_width] m."""

    kind: str = "none"
    half_width: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """Full experiment description; see `circle_scenario` for the reference one."""

    n: int
    trajectory: TrajectorySpec
    a_true: np.ndarray          # m/s, constant velocity bias
    x0: np.ndarray              # m, true initial position
    gains: Gains
    M0: np.ndarray              # SPD initial matrix for the auxiliary flow
    x_hat_1_0: np.ndarray
    z_hat_star_0: np.ndarray
    h: float                    # s, integration step
    duration: float             # s
    noise: NoiseSpec = NoiseSpec()
    seed: int = 1

    def validate(self) -> "Scenario":
        """Check every invariant; raises ValueError naming the bad field."""
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.trajectory.kind not in TRAJECTORY_KINDS:
            raise ValueError(
                f"trajectory.kind must be one of {TRAJECTORY_KINDS}, "
                f"got {self.trajectory.kind!r}"
            )
        total_velocity(self.trajectory, self.n)  # validates parameters
        as_vector(self.a_true, "a_true", self.n)
        x0 = as_vector(self.x0, "x0", self.n)
        if np.linalg.norm(x0) <= DIRECTION_EPS:
            raise ValueError("x0 must be bounded away from zero (degenerate direction)")
        as_spd_matrix(self.M0, "m0", self.n)
        as_vector(self.x_hat_1_0, "x_hat_1_0", self.n)
        as_vector(self.z_hat_star_0, "z_hat_star_0", self.n)
        positive_float(self.h, "h")
        if not (np.isfinite(self.duration) and self.duration >= 10.0 * self.h):
            raise ValueError(
                f"duration must be >= 10*h = {10.0 * self.h}, got {self.duration!r}"
            )
        if self.noise.kind not in NOISE_KINDS:
            raise ValueError(
                f"noise.kind must be one of {NOISE_KINDS}, got {self.noise.kind!r}"
            )
        if self.noise.half_width < 0.0:
            raise ValueError(
                f"noise.half_width must be >= 0, got {self.noise.half_width!r}"
            )
        if int(self.seed) < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        return self

    def sample_count(self) -> int:
        return int(np.floor(self.duration / self.h + 1e-9)) + 1

    def with_noise(self, kind: str, half_width: float = 0.0,
                   seed: Optional[int] = None) -> "Scenario":
        out = replace(self, noise=NoiseSpec(kind=kind, half_width=half_width))
        if seed is not None:
            out = replace(out, seed=seed)
        return out


@dataclass(frozen=True)
class FailureMarker:
    """Recorded when integration aborts; the trace is truncated there."""

    t: float
    step: int
    error: str
    message: str


@dataclass
class SimulationTrace:
    """Time-indexed record of truth, measurements, observer state, and errors.

    Arrays are indexed by sample; M is (N, n, n). err_xz is the virtual-state
    error |x - (x_hat_1 + M a)|, err_x the position error |x - x_hat|, err_a
    the bias error |a_hat - a|.
    """

    scenario: Optional[Scenario]
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    y: np.ndarray
    x_hat_1: np.ndarray
    z_hat_star: np.ndarray
    M: np.ndarray
    x_hat: np.ndarray
    a_hat: np.ndarray
    err_xz: np.ndarray
    err_x: np.ndarray
    err_a: np.ndarray
    failure: Optional[FailureMarker] = None

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0])

    def basic_filter_error(self) -> np.ndarray:
        """|x - x_hat_1| per sample (the bias-free filter's error norm)."""
        return np.linalg.norm(self.x - self.x_hat_1, axis=1)

    def bearing_signal(self):
        from .excitation import DirectionSignal

        return DirectionSignal(t=self.t, y=self.y)

    def dual_bearing_signal(self):
        """Dual bearings M^-1 y renormalized, per sample."""
        from .excitation import DirectionSignal

        my = np.linalg.solve(self.M, self.y[..., None])[..., 0]
        nrm = np.linalg.norm(my, axis=1, keepdims=True)
        if nrm.min() <= DIRECTION_EPS:
            raise BearingObserverError("dual bearing degenerate on this trace")
        return DirectionSignal(t=self.t, y=my / nrm)


@dataclass
class BasicFilterTrace:
    """Trace of a run with the cascade disabled (basic filter only)."""

    scenario: Scenario
    t: np.ndarray
    x: np.ndarray
    x_hat_1: np.ndarray

    def basic_filter_error(self) -> np.ndarray:
        return np.linalg.norm(self.x - self.x_hat_1, axis=1)


def total_velocity(traj: TrajectorySpec, n: int) -> Callable[[float], np.ndarray]:
    """Build the total-velocity function t -> v(t) + a for a trajectory spec."""
    if traj.kind == "circle":
        if n < 2:
            raise ValueError("trajectory.kind circle needs n >= 2")
        omega = positive_float(traj.omega, "trajectory.omega")
        radius = positive_float(traj.radius, "trajectory.radius")
        speed = radius * omega

        def u(t: float) -> np.ndarray:
            out = np.zeros(n)
            out[0] = -speed * np.sin(omega * t)
            out[1] = speed * np.cos(omega * t)
            return out

        return u
    if traj.kind == "constant":
        if traj.velocity is None:
            raise ValueError("trajectory.velocity is required for kind constant")
        vel = as_vector(np.asarray(traj.velocity, dtype=float), "trajectory.velocity", n)

        def u(_t: float) -> np.ndarray:
            return vel.copy()

        return u
    raise ValueError(f"trajectory.kind must be one of {TRAJECTORY_KINDS}, got {traj.kind!r}")


def true_kinematics_step(x: np.ndarray, v_meas, a_true: np.ndarray, h: float,
                         t: float = 0.0) -> np.ndarray:
    """Advance the truth one RK4 step under dx/dt = v_meas + a_true.

    v_meas may be a constant vector (held over the step) or a callable
    t -> vector, in which case it is evaluated at the RK4 stage times;
    `simulate` passes the trajectory generator so the truth integration is
    accurate to RK4 order rather than limited by a held input.
    """
    a = np.asarray(a_true, dtype=float)
    if callable(v_meas):
        def f(tt: float, _x: np.ndarray) -> np.ndarray:
            return v_meas(tt) + a
    else:
        vm = np.asarray(v_meas, dtype=float)

        def f(_tt: float, _x: np.ndarray) -> np.ndarray:
            return vm + a

    return rk4_step(f, t, np.asarray(x, dtype=float), h)


def measure(x: np.ndarray, noise: NoiseSpec, rng: np.random.Generator,
            eps: float = DIRECTION_EPS) -> np.ndarray:
    """Bearing measurement: direction of x plus (optional) uniform position noise.

    Noise is added to the position before projection, drawing one i.i.d.
    uniform sample per axis from [-half_width, half_width]. The generator
    is consumed deterministically: exactly one draw per call when noise is
    enabled, none otherwise.

    Raises:
        DegenerateDirection: if |x + w| <= eps.
    """
    x = np.asarray(x, dtype=float)
    if noise.kind == "uniform_position" and noise.half_width > 0.0:
        x = x + rng.uniform(-noise.half_width, noise.half_width, size=x.shape[0])
    return direction(x, eps)


def circle_scenario() -> Scenario:
    """Reference experiment: circular target over a camera looking up.

    A point moves on a radius-1 m circle at 3 m altitude (angular rate
    0.5 rad/s); the velocity measurement carries the constant bias
    (0.33, 0.66, 0.99) m/s; observer gains k = 0.5, k* = 5. Starts at
    (1, 0, 3) with x_hat_1 = z_hat* = 0 and M = I; h = 10 ms for 100 s,
    noise free, seed 1.
    """
    return Scenario(
        n=3,
        trajectory=TrajectorySpec(kind="circle", omega=0.5, radius=1.0),
        a_true=np.array([0.33, 0.66, 0.99]),
        x0=np.array([1.0, 0.0, 3.0]),
        gains=Gains(k=0.5, k_star=5.0),
        M0=np.eye(3),
        x_hat_1_0=np.zeros(3),
        z_hat_star_0=np.zeros(3),
        h=0.01,
        duration=100.0,
        noise=NoiseSpec(kind="none", half_width=0.0),
        seed=1,
    )


def radial_scenario(duration: float = 20.0, scale: float = 1.0) -> Scenario:
    """Non-exciting counterexample: constant total velocity, x0 on the same ray.

    The bearing is constant, persistence of excitation fails, and initial
    conditions along the ray are indistinguishable from the output.
    """
    u = np.array([1.0, 0.0, 0.0])
    return Scenario(
        n=3,
        trajectory=TrajectorySpec(kind="constant", velocity=tuple(u)),
        a_true=np.zeros(3),
        x0=scale * u,
        gains=Gains(k=0.5, k_star=5.0),
        M0=np.eye(3),
        x_hat_1_0=np.zeros(3),
        z_hat_star_0=np.zeros(3),
        h=0.01,
        duration=duration,
        noise=NoiseSpec(),
        seed=1,
    )


def simulate(scenario: Scenario) -> SimulationTrace:
    """Run truth and observer on the shared grid and record everything.

    Per step: measure from the current truth, record the row, advance the
    observer with that measurement held constant, then advance the truth.
    On a runtime fault (ill-conditioned M, non-finite field, degenerate
    direction) the trace is returned truncated at the failing step with a
    FailureMarker instead of raising.
    """
    scenario.validate()
    n = scenario.n
    a = np.asarray(scenario.a_true, dtype=float)
    u = total_velocity(scenario.trajectory, n)
    rng = np.random.default_rng(int(scenario.seed))
    n_samples = scenario.sample_count()
    h = scenario.h

    cols = {
        name: np.empty((n_samples, n))
        for name in ("x", "v", "y", "x_hat_1", "z_hat_star", "x_hat", "a_hat")
    }
    m_col = np.empty((n_samples, n, n))
    errs = {name: np.empty(n_samples) for name in ("err_xz", "err_x", "err_a")}
    t_col = np.empty(n_samples)

    x = np.asarray(scenario.x0, dtype=float).copy()
    state = initial_state(n, scenario.x_hat_1_0, scenario.M0,
                          scenario.z_hat_star_0, t=0.0)
    failure = None
    recorded = 0
    for i in range(n_samples):
        t = i * h
        try:
            y = measure(x, scenario.noise, rng)
            v = u(t) - a
            meas = Measurement(y=y, v=v, t=t)
            out = reconstruct(state, meas)
            t_col[i] = t
            cols["x"][i] = x
            cols["v"][i] = v
            cols["y"][i] = y
            cols["x_hat_1"][i] = state.x_hat_1
            cols["z_hat_star"][i] = state.z_hat_star
            m_col[i] = state.M
            cols["x_hat"][i] = out.x_hat
            cols["a_hat"][i] = out.a_hat
            errs["err_xz"][i] = np.linalg.norm(x - virtual_state(state, a))
            errs["err_x"][i] = np.linalg.norm(x - out.x_hat)
            errs["err_a"][i] = np.linalg.norm(out.a_hat - a)
            recorded = i + 1
            if i == n_samples - 1:
                break
            state = observer_step(state, meas, scenario.gains, h)
            x = true_kinematics_step(x, lambda tt: u(tt) - a, a, h, t=t)
        except BearingObserverError as exc:
            failure = FailureMarker(t=t, step=i, error=type(exc).__name__,
                                    message=str(exc))
            break

    sl = slice(0, recorded)
    return SimulationTrace(
        scenario=scenario,
        t=t_col[sl].copy(),
        x=cols["x"][sl].copy(),
        v=cols["v"][sl].copy(),
        y=cols["y"][sl].copy(),
        x_hat_1=cols["x_hat_1"][sl].copy(),
        z_hat_star=cols["z_hat_star"][sl].copy(),
        M=m_col[sl].copy(),
        x_hat=cols["x_hat"][sl].copy(),
        a_hat=cols["a_hat"][sl].copy(),
        err_xz=errs["err_xz"][sl].copy(),
        err_x=errs["err_x"][sl].copy(),
        err_a=errs["err_a"][sl].copy(),
        failure=failure,
    )


def simulate_basic_filter(scenario: Scenario) -> BasicFilterTrace:
    """Run only the basic filter (cascade disabled) alongside the truth.

    The basic filter does not depend on the auxiliary matrix or the dual
    state, so its trajectory here is bit-identical to the one inside a full
    cascade run; this entry point exists for bound audits that are framed
    on the filter alone.
    """
    scenario.validate()
    n = scenario.n
    a = np.asarray(scenario.a_true, dtype=float)
    u = total_velocity(scenario.trajectory, n)
    rng = np.random.default_rng(int(scenario.seed))
    n_samples = scenario.sample_count()
    h = scenario.h
    k = scenario.gains.k

    t_col = np.empty(n_samples)
    x_col = np.empty((n_samples, n))
    x1_col = np.empty((n_samples, n))

    x = np.asarray(scenario.x0, dtype=float).copy()
    x1 = np.asarray(scenario.x_hat_1_0, dtype=float).copy()
    for i in range(n_samples):
        t = i * h
        y = measure(x, scenario.noise, rng)
        v = u(t) - a
        t_col[i] = t
        x_col[i] = x
        x1_col[i] = x1
        if i == n_samples - 1:
            break
        x1 = rk4_step(lambda _tt, s: basic_filter_rhs(s, y, v, k), t, x1, h)
        x = true_kinematics_step(x, lambda tt: u(tt) - a, a, h, t=t)
    return BasicFilterTrace(scenario=scenario, t=t_col, x=x_col, x_hat_1=x1_col)
