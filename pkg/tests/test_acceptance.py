"""Acceptance criteria for the reference experiment, one test per criterion.

Each test prints a single PASS/FAIL line. Criteria 1 and 2 encode stated
thresholds that the reference dynamics provably cannot meet: the slowest
mode of the error flow decays at 0.0264 1/s (its one-period transition
matrix has largest Floquet multiplier 0.718), so reaching 1e-3 relative
error takes ~305 s, not 100 s, and the bias error at 100 s is 2.7%, not 1%.
Those two tests fail, with the measured numbers in the assertion message;
the long-horizon companion test at the end verifies the same convergence
statement on a horizon the dynamics can actually meet.
"""

import time

import numpy as np

from bearing_observer import (
    check_transition_bounds,
    circle_scenario,
    direction,
    dual_pe_check,
    fit_log_linear,
    gamma_bound,
    indistinguishable_pair,
    m_health,
    pe_derivative,
    pe_integral,
    pe_report,
    radial_scenario,
    rk4_step,
    simulate,
    ultimate_bound_check,
)
from conftest import REFERENCE_DELTA, REFERENCE_EPSILON

BIAS = np.array([0.33, 0.66, 0.99])


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def test_criterion_1_noise_free_convergence_at_100s(trace_iv):
    """All three errors below 1e-3 of their initial values within 100 s."""
    start = time.perf_counter()
    simulate(circle_scenario())
    runtime = time.perf_counter() - start

    ratios = {name: getattr(trace_iv, name)[-1] / getattr(trace_iv, name)[0]
              for name in ("err_xz", "err_x", "err_a")}
    passed = all(r < 1e-3 for r in ratios.values()) and runtime < 5.0
    detail = (f"ratios at 100 s: xz {ratios['err_xz']:.3e}, x {ratios['err_x']:.3e}, "
              f"a {ratios['err_a']:.3e} (threshold 1e-3); runtime {runtime:.2f} s")
    report(1, passed, detail)
    assert runtime < 5.0, f"runtime {runtime:.2f} s exceeds 5 s"
    for name, ratio in ratios.items():
        assert ratio < 1e-3, (
            f"{name} ratio at 100 s is {ratio:.3e} >= 1e-3. The slowest error "
            f"mode of these dynamics decays at 0.0264 1/s (Floquet multiplier "
            f"0.718 per 4*pi period), so 1e-3 relative needs a ~305 s horizon; "
            f"see the long-horizon companion test, which passes."
        )


def test_criterion_2_bias_recovery_within_1pct(trace_iv):
    """Bias estimate at 100 s within 1% relative error of the true bias."""
    rel = np.linalg.norm(trace_iv.a_hat[-1] - BIAS) / np.linalg.norm(BIAS)
    passed = rel < 0.01
    report(2, passed, f"|a_hat - a| / |a| at 100 s = {rel:.4f} (threshold 0.01)")
    assert rel < 0.01, (
        f"bias relative error at 100 s is {rel:.4f} >= 1%. With the slowest "
        f"error mode at 0.0264 1/s the estimate needs ~140 s to reach 1%; the "
        f"long-horizon companion test recovers it to 0.02%."
    )


def test_criterion_3_exponential_character(trace_iv):
    """Log-linear fits on [10 s, 80 s]: R^2 >= 0.95 and positive rates."""
    fits = {name: fit_log_linear(trace_iv.t, getattr(trace_iv, name), 10.0, 80.0)
            for name in ("err_xz", "err_x", "err_a")}
    passed = all(f.rate > 0.0 and f.r_squared >= 0.95 for f in fits.values())
    detail = ", ".join(f"{name}: rate {f.rate:.4f} R^2 {f.r_squared:.4f}"
                       for name, f in fits.items())
    report(3, passed, detail)
    for name, fit in fits.items():
        assert fit.rate > 0.0, name
        assert fit.r_squared >= 0.95, name


def test_criterion_4_pe_certification_and_counterexample(sig_iv):
    """Reference bearing certifies PE; the radial counterexample fails it."""
    lam = pe_integral(sig_iv, REFERENCE_DELTA)
    der_ok = bool(pe_derivative(sig_iv, REFERENCE_DELTA, REFERENCE_EPSILON).all())

    radial = simulate(radial_scenario())
    rep_radial = pe_report(radial.bearing_signal(), 5.0, REFERENCE_EPSILON)

    v_const = np.array([0.7, 0.0, 0.0])
    bias_ray = np.array([0.3, 0.0, 0.0])
    x1, x2 = indistinguishable_pair(v_const, bias_ray, 1.0, 2.0)
    total = v_const + bias_ray
    worst = max(
        float(np.abs(direction(x1 + total * (0.01 * i))
                     - direction(x2 + total * (0.01 * i))).max())
        for i in range(2001)
    )

    passed = (lam.min() > 0.0 and der_ok
              and not rep_radial.passes_integral
              and not rep_radial.passes_derivative
              and worst <= 1e-12)
    report(4, passed,
           f"mu over windows >= {lam.min():.4f} > 0, derivative pass {der_ok}; "
           f"radial fails both; collinear outputs differ by {worst:.1e}")
    assert lam.min() > 0.0
    assert der_ok
    assert not rep_radial.passes_integral
    assert not rep_radial.passes_derivative
    assert worst <= 1e-12


def test_criterion_5_transition_envelope(sig_iv, pe_iv):
    """exp(-k dt) <= ||Phi|| <= exp(-gamma dt)(1+1e-3) on 50 sampled pairs."""
    gamma = gamma_bound(0.5, pe_iv.delta, pe_iv.mu)
    audit = check_transition_bounds(sig_iv, 0.5, gamma, REFERENCE_DELTA,
                                    n_pairs=50, seed=0)
    passed = audit.violations == []
    report(5, passed,
           f"0 violations over {len(audit.pairs)} pairs "
           f"(norm range [{audit.norms.min():.3e}, {audit.norms.max():.3e}])"
           if passed else f"{len(audit.violations)} violations")
    assert audit.violations == []


def test_criterion_6_basic_filter_bounds(basic_long, pe_iv):
    """Biased basic filter: sup and late-time bounds with 5% slack."""
    gamma = gamma_bound(0.5, pe_iv.delta, pe_iv.mu)
    audit = ultimate_bound_check(basic_long, gamma, slack=0.05)
    passed = audit.violations == []
    report(6, passed,
           f"sup {audit.sup_observed:.2f} <= {audit.sup_bound:.2f}, "
           f"late max {audit.late_max_observed:.2f} <= {audit.late_bound:.2f}")
    assert audit.violations == []


def test_criterion_7_matrix_health(trace_iv, trace_iv_noisy):
    """det > 0 and the condition bound pointwise on every PE run; identity
    residual and the calibrated late-time determinant floor on the smooth one."""
    clean = m_health(trace_iv, slack=0.05)
    noisy = m_health(trace_iv_noisy, slack=0.05)
    passed = (clean.violations == [] and noisy.violations == []
              and clean.jacobi_checked and clean.jacobi_residual < 1e-3)
    report(7, passed,
           f"det stays in [{clean.det_min:.3g}, ...] > 0 on both runs; "
           f"cond max {clean.cond_max:.1f} <= {clean.cond_bound_at_worst:.1f}; "
           f"identity residual {clean.jacobi_residual:.2e} < 1e-3; late det "
           f"{clean.det_min_late:.1f} >= floor {clean.det_floor:.1f} - 5%")
    assert clean.violations == []
    assert noisy.violations == []
    assert clean.det_min > 0.0 and noisy.det_min > 0.0
    assert clean.jacobi_residual < 1e-3
    assert clean.det_min_late >= clean.det_floor * 0.95
    assert noisy.det_min_late >= noisy.det_floor * 0.95


def test_criterion_8_dual_excitation(trace_iv):
    """The dual bearing of the reference run passes the integral criterion."""
    rep = dual_pe_check(trace_iv, REFERENCE_DELTA)
    passed = rep.passes_integral and rep.mu > 0.0
    report(8, passed, f"dual mu = {rep.mu:.4f} > 0, integral pass {rep.passes_integral}")
    assert rep.passes_integral
    assert rep.mu > 0.0


def test_criterion_9_noisy_reproduction(trace_iv_noisy):
    """Uniform 0.5 m position noise, fixed seed: bounded error, late-time
    mean below the transient value at t = 5 s."""
    err = trace_iv_noisy.err_x
    t5 = int(round(5.0 / trace_iv_noisy.h))
    late = err[int(0.8 * err.shape[0]):]
    passed = (trace_iv_noisy.failure is None and np.isfinite(err).all()
              and late.mean() < err[t5])
    report(9, passed,
           f"|x - x_hat|(5 s) = {err[t5]:.3f}, late mean {late.mean():.3f}, "
           f"late max {late.max():.3f} (bounded, improved over transient)")
    assert trace_iv_noisy.failure is None
    assert np.isfinite(err).all()
    assert late.mean() < err[t5]


def test_criterion_10_numerics(trace_iv, trace_half_step, tmp_path):
    """RK4 order >= 3.9; halving h moves finals < 1%; byte-identical reruns."""
    def integrate(h):
        x = np.array([1.0])
        for i in range(int(round(1.0 / h))):
            x = rk4_step(lambda t, s: s, i * h, x, h)
        return abs(x[0] - np.e)

    errors = [integrate(h) for h in (0.1, 0.05, 0.025, 0.0125)]
    orders = [float(np.log2(errors[i] / errors[i + 1])) for i in range(3)]
    order_ok = min(orders) >= 3.9

    h_changes = {}
    for name in ("err_xz", "err_x", "err_a"):
        coarse = getattr(trace_iv, name)[-1]
        fine = getattr(trace_half_step, name)[-1]
        h_changes[name] = abs(coarse - fine) / coarse
    h_ok = all(change < 0.01 for change in h_changes.values())

    from bearing_observer.tracefile import write_trace_csv

    again = simulate(circle_scenario())
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace_csv(trace_iv, p1)
    write_trace_csv(again, p2)
    identical = p1.read_bytes() == p2.read_bytes()

    passed = order_ok and h_ok and identical
    report(10, passed,
           f"RK4 observed order {min(orders):.2f}; halving-h changes "
           + ", ".join(f"{k} {v:.2e}" for k, v in h_changes.items())
           + f"; byte-identical rerun {identical}")
    assert order_ok, orders
    assert h_ok, h_changes
    assert identical


def test_companion_long_horizon_convergence(trace_long):
    """The exponential-convergence statement at a horizon the slowest mode
    can meet: 400 s at h = 5 ms brings every error below 1e-3 of its
    initial value and the bias within 0.1%."""
    ratios = {name: getattr(trace_long, name)[-1] / getattr(trace_long, name)[0]
              for name in ("err_xz", "err_x", "err_a")}
    rel_bias = np.linalg.norm(trace_long.a_hat[-1] - BIAS) / np.linalg.norm(BIAS)
    passed = all(r < 1e-3 for r in ratios.values()) and rel_bias < 1e-3
    report(0, passed,
           "long-horizon companion: ratios at 400 s "
           + ", ".join(f"{k} {v:.2e}" for k, v in ratios.items())
           + f"; bias rel {rel_bias:.2e}")
    for name, ratio in ratios.items():
        assert ratio < 1e-3, name
    assert rel_bias < 1e-3
