"""Shared fixtures: the reference runs are expensive, so build them once."""

from dataclasses import replace

import numpy as np
import pytest

from bearing_observer import (
    circle_scenario,
    pe_report,
    simulate,
    simulate_basic_filter,
    NoiseSpec,
)

#: Window length used throughout for the reference bearing (one input period).
REFERENCE_DELTA = 12.57
REFERENCE_EPSILON = 0.05


@pytest.fixture(scope="session")
def trace_iv():
    """Noise-free reference run: 100 s at h = 0.01."""
    return simulate(circle_scenario())


@pytest.fixture(scope="session")
def trace_iv_noisy():
    """Reference run with uniform position noise (half-width 0.5 m, seed 1)."""
    scen = replace(circle_scenario(),
                   noise=NoiseSpec(kind="uniform_position", half_width=0.5))
    return simulate(scen)


@pytest.fixture(scope="session")
def trace_long():
    """Long-horizon, finer-step run (400 s at h = 0.005) for convergence checks."""
    return simulate(replace(circle_scenario(), duration=400.0, h=0.005))


@pytest.fixture(scope="session")
def trace_half_step():
    """Reference run repeated at h = 0.005 for step-refinement checks."""
    return simulate(replace(circle_scenario(), h=0.005))


@pytest.fixture(scope="session")
def basic_long():
    """Basic-filter-only run over 500 s (cascade disabled)."""
    return simulate_basic_filter(replace(circle_scenario(), duration=500.0))


@pytest.fixture(scope="session")
def sig_iv(trace_iv):
    return trace_iv.bearing_signal()


@pytest.fixture(scope="session")
def pe_iv(sig_iv):
    """PE certification of the reference bearing at the standard window."""
    return pe_report(sig_iv, REFERENCE_DELTA, REFERENCE_EPSILON, k=0.5)


@pytest.fixture(scope="session")
def trace_zero_bias():
    """Reference geometry with a_true = 0 (pure basic-filter regime)."""
    return simulate(replace(circle_scenario(), a_true=np.zeros(3)))
