"""Command-line harness.

Subcommands:
    simulate         run a configured scenario, write trace files, print a summary
    reproduce-paper  run the bundled reference experiment (noisefree | noisy)
    pe-check         persistence-of-excitation report for a recorded trace
    analyze          bound-audit report for a recorded trace

Exit codes: 0 success, 1 analysis failure (criteria or bounds violated),
2 input/validation error, 3 runtime fault during integration.

Seed precedence for simulate/reproduce-paper: --seed flag, then the
BEARING_OBS_SEED environment variable, then the config/scenario value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import analyze_trace, fit_log_linear
from .config import RunConfig, load_config
from .errors import BearingObserverError, ConfigError, InvalidPE, WindowTooShort
from .excitation import pe_report
from .simulation import NoiseSpec, Scenario, SimulationTrace, circle_scenario, simulate
from .tracefile import (
    read_trace,
    write_figure_data,
    write_trace_csv,
    write_trace_json,
)

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _resolve_seed(args, fallback: int) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("BEARING_OBS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"BEARING_OBS_SEED must be an integer, got {env!r}") from exc
    return fallback


def _print_summary(trace: SimulationTrace, verbosity: str = "normal") -> None:
    if verbosity == "quiet":
        return
    t_end = trace.t[-1]
    print(f"samples: {trace.n_samples}   span: {t_end:.6g} s")
    print(
        f"final errors: |x - z| = {trace.err_xz[-1]:.6e}   "
        f"|x - xhat| = {trace.err_x[-1]:.6e}   |ahat - a| = {trace.err_a[-1]:.6e}"
    )
    span = float(t_end - trace.t[0])
    if span > 0 and trace.err_a.min() > 0:
        try:
            fits = {
                name: fit_log_linear(trace.t, getattr(trace, name),
                                     0.1 * span, 0.8 * span)
                for name in ("err_xz", "err_x", "err_a")
            }
            rates = "   ".join(
                f"{name}: {fit.rate:.4g} 1/s (R^2 {fit.r_squared:.3f})"
                for name, fit in fits.items()
            )
            print(f"fitted decay rates: {rates}")
        except (ValueError, BearingObserverError):
            pass
    if trace.scenario is not None and trace.n == trace.scenario.a_true.shape[0]:
        a_hat = trace.a_hat[-1]
        print("final bias estimate: (" + ", ".join(f"{v:.6g}" for v in a_hat) + ")")


def _write_outputs(trace: SimulationTrace, cfg: RunConfig, out_dir: Path,
                   formats: set[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.output_csv and "csv" in formats:
        path = out_dir / cfg.output_csv
        write_trace_csv(trace, path)
        print(f"wrote {path}")
    if cfg.output_json and "json" in formats:
        path = out_dir / cfg.output_json
        write_trace_json(trace, path)
        print(f"wrote {path}")


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scenario = replace(cfg.scenario, seed=_resolve_seed(args, cfg.scenario.seed))
    scenario.validate()
    trace = simulate(scenario)
    formats = {args.format} if args.format else {"csv", "json"}
    _write_outputs(trace, cfg, Path(args.out_dir), formats)
    if trace.failure is not None:
        print(
            f"integration failed at t = {trace.failure.t:.6g} s "
            f"(step {trace.failure.step}): {trace.failure.error}: "
            f"{trace.failure.message}",
            file=sys.stderr,
        )
        return EXIT_RUNTIME
    _print_summary(trace, cfg.verbosity)
    try:
        if cfg.pe_check:
            delta = args.delta if args.delta is not None else _default_delta(scenario)
            report = pe_report(trace.bearing_signal(), delta, args.epsilon,
                               k=scenario.gains.k)
            print(f"pe-check: integral {'pass' if report.passes_integral else 'FAIL'} "
                  f"(mu = {report.mu:.6g}), derivative "
                  f"{'pass' if report.passes_derivative else 'FAIL'}")
        if cfg.bounds:
            report = analyze_trace(trace, delta=args.delta)
            _print_bound_table(report)
    except (WindowTooShort, InvalidPE) as exc:
        raise ConfigError(f"analysis window does not fit this trace: {exc}") from exc
    return EXIT_OK


def _default_delta(scenario: Scenario) -> float:
    if scenario.trajectory.kind == "circle":
        return 2.0 * np.pi / scenario.trajectory.omega
    raise ConfigError("no default excitation window for this trajectory; pass --delta")


def _cmd_reproduce_paper(args) -> int:
    base = circle_scenario()
    if args.variant == "noisefree":
        scenario = base
    elif args.variant == "noisy":
        scenario = replace(base, noise=NoiseSpec(kind="uniform_position",
                                                 half_width=0.5))
    else:  # unreachable behind argparse choices; kept for direct calls
        raise ConfigError(f"unknown variant {args.variant!r}")
    scenario = replace(scenario, seed=_resolve_seed(args, scenario.seed))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    trace = simulate(scenario)
    prefix = args.variant
    formats = {args.format} if args.format else {"csv", "json"}
    if "csv" in formats:
        path = out_dir / f"{prefix}_trace.csv"
        write_trace_csv(trace, path)
        print(f"wrote {path}")
    if "json" in formats:
        path = out_dir / f"{prefix}_trace.json"
        write_trace_json(trace, path)
        print(f"wrote {path}")
    for path in write_figure_data(trace, out_dir, prefix):
        print(f"wrote {path}")
    if trace.failure is not None:
        print(f"integration failed: {trace.failure.error}", file=sys.stderr)
        return EXIT_RUNTIME
    _print_summary(trace)
    return EXIT_OK


def _cmd_pe_check(args) -> int:
    trace = read_trace(args.trace)
    k = trace.scenario.gains.k if trace.scenario is not None else None
    try:
        report = pe_report(trace.bearing_signal(), args.delta, args.epsilon, k=k)
    except WindowTooShort as exc:
        raise ConfigError(str(exc)) from exc
    doc = json.dumps(report.to_dict())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "pe_report.json"
        path.write_text(doc + "\n")
        print(f"wrote {path}")
    else:
        print(doc)
    ok = report.passes_integral and report.passes_derivative
    print(
        f"pe-check: integral {'pass' if report.passes_integral else 'FAIL'} "
        f"(mu = {report.mu:.6g}, delta = {report.delta:.6g}), "
        f"derivative {'pass' if report.passes_derivative else 'FAIL'} "
        f"(epsilon = {report.derivative_epsilon:.6g})",
        file=sys.stderr,
    )
    return EXIT_OK if ok else EXIT_ANALYSIS


def _print_bound_table(report) -> None:
    rows = [
        ("gamma (theory)", f"{report.gamma_theory:.6g}", ""),
        ("gamma (empirical fit)", f"{report.gamma_empirical:.6g}", ""),
        ("ultimate bound (late)", f"{report.ultimate_bound_observed:.6g}",
         f"<= {report.ultimate_bound_theory:.6g}"),
        ("det(M) min", f"{report.det_min_observed:.6g}", "> 0"),
        ("det(M) late floor", "", f">= {report.det_floor_theory:.6g} (with slack)"),
        ("cond(M) max", f"{report.cond_max_observed:.6g}",
         f"<= {report.cond_bound_theory:.6g} at worst sample"),
    ]
    print(f"{'check':28s} {'observed':>14s}   bound")
    for name, observed, bound in rows:
        print(f"{name:28s} {observed:>14s}   {bound}")
    if report.violations:
        print(f"VIOLATIONS ({len(report.violations)}):")
        for v in report.violations:
            print(f"  t = {v.t:.6g}  {v.bound}  margin {v.margin:.6g}")
    else:
        print("no violations")
    for note in report.notes:
        print(f"note: {note}")


def _cmd_analyze(args) -> int:
    trace = read_trace(args.trace)
    if trace.scenario is None:
        raise ConfigError(
            "analyze needs a JSON trace with an embedded scenario "
            "(the CSV schema does not carry gains)"
        )
    try:
        report = analyze_trace(trace, delta=args.delta)
    except (InvalidPE, WindowTooShort) as exc:
        raise ConfigError(str(exc)) from exc
    _print_bound_table(report)
    doc = json.dumps(report.to_dict())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "bound_report.json"
        path.write_text(doc + "\n")
        print(f"wrote {path}")
    else:
        print(doc)
    return EXIT_OK if not report.violations else EXIT_ANALYSIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bearing-observer",
        description=(
            "Simulate and analyze a cascade observer that estimates position "
            "and velocity bias from a single bearing measurement."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario from a config file")
    p_sim.add_argument("--config", required=True, help="path to a run config")
    p_sim.add_argument("--out-dir", default=".", help="directory for output files")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_sim.add_argument("--format", choices=("csv", "json"), default=None,
                       help="write only this trace format")
    p_sim.add_argument("--delta", type=float, default=None,
                       help="excitation window for the optional analyses (s)")
    p_sim.add_argument("--epsilon", type=float, default=0.05,
                       help="derivative-criterion threshold for pe-check")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rep = sub.add_parser("reproduce-paper",
                           help="run the bundled reference experiment")
    p_rep.add_argument("--variant", required=True, choices=("noisefree", "noisy"))
    p_rep.add_argument("--out-dir", default=".", help="directory for output files")
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--format", choices=("csv", "json"), default=None)
    p_rep.set_defaults(func=_cmd_reproduce_paper)

    p_pe = sub.add_parser("pe-check",
                          help="persistence-of-excitation report for a trace")
    p_pe.add_argument("trace", help="trace file (.json or .csv)")
    p_pe.add_argument("--delta", type=float, required=True,
                      help="window length (s)")
    p_pe.add_argument("--epsilon", type=float, default=0.05,
                      help="derivative-criterion threshold")
    p_pe.add_argument("--out-dir", default=None)
    p_pe.set_defaults(func=_cmd_pe_check)

    p_an = sub.add_parser("analyze", help="bound audit for a trace")
    p_an.add_argument("trace", help="trace file (.json; needs the scenario block)")
    p_an.add_argument("--delta", type=float, default=None,
                      help="excitation window (s); defaults to one input period")
    p_an.add_argument("--out-dir", default=None)
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BearingObserverError as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
