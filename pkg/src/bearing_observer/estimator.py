"""Scikit-learn style wrapper around the cascade observer.

`CascadeBearingObserver` consumes a uniformly sampled measurement stream as
a 2-D array whose rows stack the unit bearing and the measured velocity,
and produces the position and bias estimates per sample. It follows the
estimator conventions (get_params/set_params, clone-compatible __init__,
fit attributes with trailing underscores) so it composes with pipelines and
model-selection tooling.

The transform is stateless with respect to fit: each call runs the observer
from the configured initial conditions over the rows it is given, which
keeps results deterministic and clone-friendly.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .linalg import COND_LIMIT
from .observer import (
    DET_FLOOR,
    Gains,
    Measurement,
    initial_state,
    observer_step,
    reconstruct,
)


class CascadeBearingObserver(BaseEstimator):
    """Position and velocity-bias estimator from bearing + velocity streams.

    Parameters
    ----------
    k : float, default=0.5
        Basic-filter gain (1/s).
    k_star : float, default=5.0
        Dual-observer gain (1/s).
    step : float, default=0.01
        Sample spacing of the input stream (s); measurements are held
        constant over each integration step.
    m0 : array-like of shape (n, n) or None
        Initial auxiliary matrix; identity when None. Must be symmetric
        positive definite.
    x1_0, z_star_0 : array-like of shape (n,) or None
        Initial basic-filter and dual-observer states; zeros when None.
    det_floor, cond_limit : float
        Invertibility guard on the auxiliary matrix.

    Attributes
    ----------
    n_features_in_ : int
        Number of input columns (2n).
    position_estimate_ : ndarray of shape (n_samples, n)
        Per-sample position estimates from fit.
    bias_estimate_ : ndarray of shape (n_samples, n)
        Per-sample velocity-bias estimates from fit.
    final_state_ : ObserverState
        Observer state after the last fitted sample.

    Examples
    --------
    >>> import numpy as np
    >>> from bearing_observer import CascadeBearingObserver, circle_scenario, simulate
    >>> trace = simulate(circle_scenario())
    >>> X = np.hstack([trace.y, trace.v])
    >>> est = CascadeBearingObserver(k=0.5, k_star=5.0, step=0.01).fit(X)
    >>> est.position_estimate_.shape == trace.x.shape
    True
    """

    def __init__(self, k=0.5, k_star=5.0, step=0.01, m0=None, x1_0=None,
                 z_star_0=None, det_floor=DET_FLOOR, cond_limit=COND_LIMIT):
        self.k = k
        self.k_star = k_star
        self.step = step
        self.m0 = m0
        self.x1_0 = x1_0
        self.z_star_0 = z_star_0
        self.det_floor = det_floor
        self.cond_limit = cond_limit

    def _validate_stream(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] % 2 != 0 or X.shape[1] < 4:
            raise ValueError(
                f"X must stack [bearing | velocity] with an even number of "
                f"columns >= 4, got {X.shape[1]}"
            )
        n = X.shape[1] // 2
        y, v = X[:, :n], X[:, n:]
        norms = np.linalg.norm(y, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > 1e-6:
            raise ValueError(
                f"bearing columns must be unit-norm (worst deviation {worst:.3e})"
            )
        return y / norms[:, None], v

    def _run(self, y: np.ndarray, v: np.ndarray):
        if not (np.isfinite(self.step) and self.step > 0.0):
            raise ValueError(f"step must be positive, got {self.step!r}")
        gains = Gains(k=self.k, k_star=self.k_star)
        n = y.shape[1]
        state = initial_state(n, self.x1_0, self.m0, self.z_star_0)
        pos = np.empty_like(y)
        bias = np.empty_like(y)
        for i in range(y.shape[0]):
            meas = Measurement(y=y[i], v=v[i], t=state.t)
            out = reconstruct(state, meas, cond_limit=self.cond_limit)
            pos[i] = out.x_hat
            bias[i] = out.a_hat
            if i < y.shape[0] - 1:
                state = observer_step(state, meas, gains, self.step,
                                      det_floor=self.det_floor,
                                      cond_limit=self.cond_limit)
        return pos, bias, state

    def fit(self, X, y=None):
        """Run the observer over the stream and store the estimates.

        X stacks [bearing | velocity] row-wise at the configured step.
        Returns self.
        """
        bearings, velocities = self._validate_stream(X)
        self.n_features_in_ = X.shape[1] if hasattr(X, "shape") else 2 * bearings.shape[1]
        pos, bias, state = self._run(bearings, velocities)
        self.position_estimate_ = pos
        self.bias_estimate_ = bias
        self.final_state_ = state
        return self

    def transform(self, X) -> np.ndarray:
        """Estimates for a stream: columns [position | bias], one row per sample."""
        bearings, velocities = self._validate_stream(X)
        pos, bias, _ = self._run(bearings, velocities)
        return np.hstack([pos, bias])

    def predict(self, X) -> np.ndarray:
        """Position estimates only, one row per sample."""
        bearings, velocities = self._validate_stream(X)
        pos, _, _ = self._run(bearings, velocities)
        return pos

    def fit_transform(self, X, y=None) -> np.ndarray:
        self.fit(X)
        return np.hstack([self.position_estimate_, self.bias_estimate_])
