"""Cascade observer for bearing-only position and velocity-bias estimation.

The package simulates an object moving with a biased velocity measurement,
observed only through its unit direction (bearing), and runs a cascade
nonlinear observer that recovers both the position and the constant bias
whenever the bearing is persistently exciting. It ships the observer core,
an sklearn-style estimator surface, excitation/observability diagnostics,
convergence-bound audits, and a CLI harness with reproducible scenarios.
"""

from .analysis import (
    BoundReport,
    DecayFit,
    MatrixHealthAudit,
    TransitionAudit,
    UltimateBoundAudit,
    Violation,
    analyze_trace,
    check_transition_bounds,
    determinant_floor,
    fit_decay_rate,
    fit_log_linear,
    gamma_bound,
    m_health,
    transition_matrix,
    ultimate_bound_check,
)
from .config import (
    RunConfig,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from .errors import (
    BearingObserverError,
    ConfigError,
    DegenerateDirection,
    IllConditioned,
    InvalidPE,
    NonFiniteField,
    NonPositiveError,
    WindowTooShort,
)
from .estimator import CascadeBearingObserver
from .excitation import (
    DirectionSignal,
    EquivalenceAudit,
    PEReport,
    direction_derivative,
    distinguishing_input,
    dual_pe_check,
    indistinguishable_pair,
    pe_derivative,
    pe_equivalence_audit,
    pe_integral,
    pe_report,
    pe_scalar,
)
from .linalg import direction, euler_step, invert, projector, rk4_step
from .observer import (
    Gains,
    Measurement,
    ObserverOutput,
    ObserverState,
    basic_filter_rhs,
    dual_observer_rhs,
    dual_output,
    dual_velocity,
    initial_state,
    m_matrix_rhs,
    observer_step,
    reconstruct,
    virtual_state,
)
from .simulation import (
    BasicFilterTrace,
    FailureMarker,
    NoiseSpec,
    Scenario,
    SimulationTrace,
    TrajectorySpec,
    circle_scenario,
    measure,
    radial_scenario,
    simulate,
    simulate_basic_filter,
    total_velocity,
    true_kinematics_step,
)
from .tracefile import (
    read_trace,
    read_trace_csv,
    read_trace_json,
    write_figure_data,
    write_trace_csv,
    write_trace_json,
)

__version__ = "0.1.0"

__all__ = [
    "BasicFilterTrace",
    "BearingObserverError",
    "BoundReport",
    "CascadeBearingObserver",
    "ConfigError",
    "DecayFit",
    "DegenerateDirection",
    "DirectionSignal",
    "EquivalenceAudit",
    "FailureMarker",
    "Gains",
    "IllConditioned",
    "InvalidPE",
    "MatrixHealthAudit",
    "Measurement",
    "NoiseSpec",
    "NonFiniteField",
    "NonPositiveError",
    "ObserverOutput",
    "ObserverState",
    "PEReport",
    "RunConfig",
    "Scenario",
    "SimulationTrace",
    "TrajectorySpec",
    "TransitionAudit",
    "UltimateBoundAudit",
    "Violation",
    "WindowTooShort",
    "analyze_trace",
    "basic_filter_rhs",
    "check_transition_bounds",
    "circle_scenario",
    "determinant_floor",
    "direction",
    "direction_derivative",
    "distinguishing_input",
    "dual_observer_rhs",
    "dual_output",
    "dual_pe_check",
    "dual_velocity",
    "euler_step",
    "fit_decay_rate",
    "fit_log_linear",
    "gamma_bound",
    "indistinguishable_pair",
    "initial_state",
    "invert",
    "load_config",
    "m_health",
    "m_matrix_rhs",
    "measure",
    "observer_step",
    "parse_config",
    "pe_derivative",
    "pe_equivalence_audit",
    "pe_integral",
    "pe_report",
    "pe_scalar",
    "projector",
    "radial_scenario",
    "read_trace",
    "read_trace_csv",
    "read_trace_json",
    "reconstruct",
    "rk4_step",
    "save_config",
    "serialize_config",
    "simulate",
    "simulate_basic_filter",
    "total_velocity",
    "transition_matrix",
    "true_kinematics_step",
    "ultimate_bound_check",
    "virtual_state",
    "write_figure_data",
    "write_trace_csv",
    "write_trace_json",
]
