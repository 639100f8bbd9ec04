"""Run-configuration text format and scenario (de)serialization.

The config is a flat, human-editable `key = value` file with dotted keys
(one per line, full-line comments starting with '#', blank lines ignored).
Unknown or duplicate keys are rejected so typos fail loudly. Floats are
written with repr so a serialize/parse round trip is bit-exact.

Example::

    n = 3
    h = 0.01
    duration = 100.0
    seed = 1
    x0 = 1.0, 0.0, 3.0
    a_true = 0.33, 0.66, 0.99
    gains.k = 0.5
    gains.k_star = 5.0
    trajectory.kind = circle
    trajectory.omega = 0.5
    trajectory.radius = 1.0
    noise.kind = none
    noise.half_width = 0.0
    output.csv = trace.csv
    output.json = trace.json
    analysis.pe_check = false
    analysis.bounds = false
    report.verbosity = normal
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .observer import Gains
from .simulation import NoiseSpec, Scenario, TrajectorySpec

VERBOSITY_LEVELS = ("quiet", "normal", "verbose")

_SCALAR_KEYS = {
    "n": int,
    "h": float,
    "duration": float,
    "seed": int,
    "gains.k": float,
    "gains.k_star": float,
    "trajectory.kind": str,
    "trajectory.omega": float,
    "trajectory.radius": float,
    "noise.kind": str,
    "noise.half_width": float,
    "output.csv": str,
    "output.json": str,
    "analysis.pe_check": bool,
    "analysis.bounds": bool,
    "report.verbosity": str,
}
_VECTOR_KEYS = ("x0", "a_true", "x_hat_1_0", "z_hat_star_0", "m0",
                "trajectory.velocity")
_ALL_KEYS = set(_SCALAR_KEYS) | set(_VECTOR_KEYS)
_REQUIRED_KEYS = ("n", "h", "duration", "x0", "a_true", "gains.k",
                  "gains.k_star", "trajectory.kind")


@dataclass
class RunConfig:
    """A Scenario plus harness settings (outputs, analysis toggles, verbosity)."""

    scenario: Scenario
    output_csv: Optional[str] = None
    output_json: Optional[str] = None
    pe_check: bool = False
    bounds: bool = False
    verbosity: str = "normal"


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_value(key: str, raw: str):
    if key in _VECTOR_KEYS:
        if key == "m0" and raw.strip().lower() == "identity":
            return "identity"
        try:
            return tuple(float(part) for part in raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from exc
    kind = _SCALAR_KEYS[key]
    if kind is bool:
        return _parse_bool(raw, key)
    if kind is str:
        return raw.strip()
    try:
        return kind(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse config text into a validated RunConfig.

    Raises:
        ConfigError: on unknown/duplicate/missing keys, malformed values, or
            scenario invariant violations (the message names the key).
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)

    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    n = values["n"]
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")

    def vec(key: str, default=None):
        if key in values:
            v = np.asarray(values[key], dtype=float)
            if v.shape != (n,):
                raise ConfigError(f"{key} must have {n} entries, got {len(values[key])}")
            return v
        return default

    m0_raw = values.get("m0", "identity")
    if isinstance(m0_raw, str):
        m0 = np.eye(n)
    else:
        if len(m0_raw) != n * n:
            raise ConfigError(f"m0 must have {n * n} entries (row-major), got {len(m0_raw)}")
        m0 = np.asarray(m0_raw, dtype=float).reshape(n, n)

    traj_kind = values["trajectory.kind"]
    velocity = values.get("trajectory.velocity")
    if velocity is not None and len(velocity) != n:
        raise ConfigError(f"trajectory.velocity must have {n} entries")
    trajectory = TrajectorySpec(
        kind=traj_kind,
        omega=values.get("trajectory.omega", 0.5),
        radius=values.get("trajectory.radius", 1.0),
        velocity=velocity,
    )

    try:
        gains = Gains(k=values["gains.k"], k_star=values["gains.k_star"])
        scenario = Scenario(
            n=n,
            trajectory=trajectory,
            a_true=vec("a_true"),
            x0=vec("x0"),
            gains=gains,
            M0=m0,
            x_hat_1_0=vec("x_hat_1_0", np.zeros(n)),
            z_hat_star_0=vec("z_hat_star_0", np.zeros(n)),
            h=values["h"],
            duration=values["duration"],
            noise=NoiseSpec(
                kind=values.get("noise.kind", "none"),
                half_width=values.get("noise.half_width", 0.0),
            ),
            seed=values.get("seed", 1),
        ).validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    verbosity = values.get("report.verbosity", "normal")
    if verbosity not in VERBOSITY_LEVELS:
        raise ConfigError(
            f"report.verbosity must be one of {VERBOSITY_LEVELS}, got {verbosity!r}"
        )
    return RunConfig(
        scenario=scenario,
        output_csv=values.get("output.csv"),
        output_json=values.get("output.json"),
        pe_check=values.get("analysis.pe_check", False),
        bounds=values.get("analysis.bounds", False),
        verbosity=verbosity,
    )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _fmt_vec(arr) -> str:
    return ", ".join(repr(float(x)) for x in np.asarray(arr, dtype=float).ravel())


def serialize_config(cfg: RunConfig) -> str:
    """Render a RunConfig back to config text (parse round trip is lossless)."""
    s = cfg.scenario
    lines = [
        "# bearing-observer run configuration",
        f"n = {s.n}",
        f"h = {_fmt(float(s.h))}",
        f"duration = {_fmt(float(s.duration))}",
        f"seed = {int(s.seed)}",
        f"x0 = {_fmt_vec(s.x0)}",
        f"a_true = {_fmt_vec(s.a_true)}",
        f"x_hat_1_0 = {_fmt_vec(s.x_hat_1_0)}",
        f"z_hat_star_0 = {_fmt_vec(s.z_hat_star_0)}",
        f"m0 = {_fmt_vec(s.M0)}",
        f"gains.k = {_fmt(float(s.gains.k))}",
        f"gains.k_star = {_fmt(float(s.gains.k_star))}",
        f"trajectory.kind = {s.trajectory.kind}",
    ]
    if s.trajectory.kind == "circle":
        lines.append(f"trajectory.omega = {_fmt(float(s.trajectory.omega))}")
        lines.append(f"trajectory.radius = {_fmt(float(s.trajectory.radius))}")
    if s.trajectory.velocity is not None:
        lines.append(f"trajectory.velocity = {_fmt_vec(s.trajectory.velocity)}")
    lines.append(f"noise.kind = {s.noise.kind}")
    lines.append(f"noise.half_width = {_fmt(float(s.noise.half_width))}")
    if cfg.output_csv is not None:
        lines.append(f"output.csv = {cfg.output_csv}")
    if cfg.output_json is not None:
        lines.append(f"output.json = {cfg.output_json}")
    lines.append(f"analysis.pe_check = {_fmt(cfg.pe_check)}")
    lines.append(f"analysis.bounds = {_fmt(cfg.bounds)}")
    lines.append(f"report.verbosity = {cfg.verbosity}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(serialize_config(cfg))


# ---------------------------------------------------------------------------
# Scenario <-> plain dict (used by the JSON trace format)
# ---------------------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    out = {
        "n": int(s.n),
        "h": float(s.h),
        "duration": float(s.duration),
        "seed": int(s.seed),
        "x0": np.asarray(s.x0, dtype=float).tolist(),
        "a_true": np.asarray(s.a_true, dtype=float).tolist(),
        "x_hat_1_0": np.asarray(s.x_hat_1_0, dtype=float).tolist(),
        "z_hat_star_0": np.asarray(s.z_hat_star_0, dtype=float).tolist(),
        "m0": np.asarray(s.M0, dtype=float).ravel().tolist(),
        "gains": {"k": float(s.gains.k), "k_star": float(s.gains.k_star)},
        "trajectory": {"kind": s.trajectory.kind},
        "noise": {"kind": s.noise.kind, "half_width": float(s.noise.half_width)},
    }
    if s.trajectory.kind == "circle":
        out["trajectory"]["omega"] = float(s.trajectory.omega)
        out["trajectory"]["radius"] = float(s.trajectory.radius)
    if s.trajectory.velocity is not None:
        out["trajectory"]["velocity"] = [float(v) for v in s.trajectory.velocity]
    return out


def scenario_from_dict(d: dict) -> Scenario:
    try:
        n = int(d["n"])
        traj = d["trajectory"]
        velocity = traj.get("velocity")
        scenario = Scenario(
            n=n,
            trajectory=TrajectorySpec(
                kind=traj["kind"],
                omega=float(traj.get("omega", 0.5)),
                radius=float(traj.get("radius", 1.0)),
                velocity=tuple(velocity) if velocity is not None else None,
            ),
            a_true=np.asarray(d["a_true"], dtype=float),
            x0=np.asarray(d["x0"], dtype=float),
            gains=Gains(k=float(d["gains"]["k"]), k_star=float(d["gains"]["k_star"])),
            M0=np.asarray(d["m0"], dtype=float).reshape(n, n),
            x_hat_1_0=np.asarray(d["x_hat_1_0"], dtype=float),
            z_hat_star_0=np.asarray(d["z_hat_star_0"], dtype=float),
            h=float(d["h"]),
            duration=float(d["duration"]),
            noise=NoiseSpec(kind=d["noise"]["kind"],
                            half_width=float(d["noise"]["half_width"])),
            seed=int(d["seed"]),
        ).validate()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario block: {exc}") from exc
    return scenario
