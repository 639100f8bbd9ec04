"""Trace serialization: fixed-schema CSV and scenario-carrying JSON.

CSV columns (n = state dimension, 1 + 7n + n^2 + 3 total)::

    t, x1..xn, v1..vn, y1..yn, xhat1_1..n, zstar_1..n,
    M_11..M_nn (row-major), xhat_1..n, ahat_1..n, err_xz, err_x, err_a

Numbers carry 17 significant digits so a write/read round trip reproduces
every float exactly. The JSON format adds the scenario block and failure
marker; CSV alone cannot say which gains produced it.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
import numpy as np

from .config import scenario_from_dict, scenario_to_dict
from .errors import ConfigError
from .simulation import FailureMarker, SimulationTrace

TRACE_SCHEMA = "bearing-observer-trace/1"


def csv_header(n: int) -> list[str]:
    cols = ["t"]
    cols += [f"x{i}" for i in range(1, n + 1)]
    cols += [f"v{i}" for i in range(1, n + 1)]
    cols += [f"y{i}" for i in range(1, n + 1)]
    cols += [f"xhat1_{i}" for i in range(1, n + 1)]
    cols += [f"zstar_{i}" for i in range(1, n + 1)]
    cols += [f"M_{i}{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
    cols += [f"xhat_{i}" for i in range(1, n + 1)]
    cols += [f"ahat_{i}" for i in range(1, n + 1)]
    cols += ["err_xz", "err_x", "err_a"]
    return cols


def _row_matrix(trace: SimulationTrace) -> np.ndarray:
    n_samples = trace.n_samples
    return np.hstack([
        trace.t[:, None],
        trace.x, trace.v, trace.y, trace.x_hat_1, trace.z_hat_star,
        trace.M.reshape(n_samples, -1),
        trace.x_hat, trace.a_hat,
        trace.err_xz[:, None], trace.err_x[:, None], trace.err_a[:, None],
    ])


def write_trace_csv(trace: SimulationTrace, path) -> None:
    rows = _row_matrix(trace)
    header = ",".join(csv_header(trace.n))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trace_csv(path) -> SimulationTrace:
    """Load a CSV trace. The scenario is not part of the CSV schema (None).

    Raises:
        ConfigError: on a missing file or a malformed header/row.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        names = header.split(",") if header else []
        # 1 + 7n + n^2 + 3 columns
        n = next((m for m in range(2, 64) if 1 + 7 * m + m * m + 3 == len(names)), None)
        if n is None or names != csv_header(n):
            raise ConfigError(f"{path}: header does not match the trace schema")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"{path}: malformed row: {exc}") from exc
    if data.shape[0] == 0 or data.shape[1] != len(names):
        raise ConfigError(f"{path}: expected {len(names)} columns per row")
    return _trace_from_matrix(data, n, scenario=None, failure=None)


def _trace_from_matrix(data: np.ndarray, n: int, scenario, failure) -> SimulationTrace:
    idx = 0

    def take(width: int) -> np.ndarray:
        nonlocal idx
        out = data[:, idx:idx + width]
        idx += width
        return out.copy()

    t = take(1)[:, 0]
    x = take(n)
    v = take(n)
    y = take(n)
    x_hat_1 = take(n)
    z_hat_star = take(n)
    m = take(n * n).reshape(-1, n, n)
    x_hat = take(n)
    a_hat = take(n)
    err_xz = take(1)[:, 0]
    err_x = take(1)[:, 0]
    err_a = take(1)[:, 0]
    return SimulationTrace(
        scenario=scenario, t=t, x=x, v=v, y=y, x_hat_1=x_hat_1,
        z_hat_star=z_hat_star, M=m, x_hat=x_hat, a_hat=a_hat,
        err_xz=err_xz, err_x=err_x, err_a=err_a, failure=failure,
    )


def write_trace_json(trace: SimulationTrace, path) -> None:
    doc = {
        "schema": TRACE_SCHEMA,
        "scenario": scenario_to_dict(trace.scenario) if trace.scenario else None,
        "failure": asdict(trace.failure) if trace.failure else None,
        "data": {
            "t": trace.t.tolist(),
            "x": trace.x.tolist(),
            "v": trace.v.tolist(),
            "y": trace.y.tolist(),
            "x_hat_1": trace.x_hat_1.tolist(),
            "z_hat_star": trace.z_hat_star.tolist(),
            "M": trace.M.reshape(trace.n_samples, -1).tolist(),
            "x_hat": trace.x_hat.tolist(),
            "a_hat": trace.a_hat.tolist(),
            "err_xz": trace.err_xz.tolist(),
            "err_x": trace.err_x.tolist(),
            "err_a": trace.err_a.tolist(),
        },
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def read_trace_json(path) -> SimulationTrace:
    """Load a JSON trace, including its scenario and failure marker.

    Raises:
        ConfigError: on a missing file or schema mismatch.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != TRACE_SCHEMA:
        raise ConfigError(f"{path}: missing or unsupported trace schema marker")
    scenario = None
    if doc.get("scenario") is not None:
        scenario = scenario_from_dict(doc["scenario"])
    failure = None
    if doc.get("failure") is not None:
        try:
            failure = FailureMarker(**doc["failure"])
        except TypeError as exc:
            raise ConfigError(f"{path}: malformed failure marker: {exc}") from exc
    try:
        d = doc["data"]
        t = np.asarray(d["t"], dtype=float)
        n = len(d["x"][0])
        fields = [np.asarray(d[key], dtype=float)
                  for key in ("x", "v", "y", "x_hat_1", "z_hat_star")]
        m = np.asarray(d["M"], dtype=float).reshape(-1, n, n)
        tail = [np.asarray(d[key], dtype=float) for key in ("x_hat", "a_hat")]
        errs = [np.asarray(d[key], dtype=float) for key in ("err_xz", "err_x", "err_a")]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed data block: {exc}") from exc
    shapes = {arr.shape for arr in fields + tail} | {(m.shape[0], m.shape[1])}
    if shapes != {(t.shape[0], n)} or any(e.shape != t.shape for e in errs):
        raise ConfigError(f"{path}: inconsistent array shapes in data block")
    return SimulationTrace(
        scenario=scenario, t=t, x=fields[0], v=fields[1], y=fields[2],
        x_hat_1=fields[3], z_hat_star=fields[4], M=m, x_hat=tail[0],
        a_hat=tail[1], err_xz=errs[0], err_x=errs[1], err_a=errs[2],
        failure=failure,
    )


def read_trace(path) -> SimulationTrace:
    """Dispatch on extension: .json loads the rich format, anything else CSV."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return read_trace_json(path)
    return read_trace_csv(path)


def _write_columns(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_figure_data(trace: SimulationTrace, out_dir, prefix: str) -> list[Path]:
    """Columnar plot-data files for one run: 3-D paths, error norms, bias.

    Emits <prefix>_path3d.csv (true and estimated positions),
    <prefix>_error_norms.csv (the three error norms vs time), and
    <prefix>_bias_estimate.csv (estimated vs true bias components).
    Plotting is left to external tools.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = trace.n
    a_true = (np.asarray(trace.scenario.a_true, dtype=float)
              if trace.scenario is not None else np.full(n, np.nan))
    written = []

    path3d = out_dir / f"{prefix}_path3d.csv"
    _write_columns(
        path3d,
        ["t"] + [f"x{i}" for i in range(1, n + 1)]
        + [f"xhat_{i}" for i in range(1, n + 1)],
        [trace.t] + [trace.x[:, i] for i in range(n)]
        + [trace.x_hat[:, i] for i in range(n)],
    )
    written.append(path3d)

    errors = out_dir / f"{prefix}_error_norms.csv"
    _write_columns(errors, ["t", "err_xz", "err_x", "err_a"],
                   [trace.t, trace.err_xz, trace.err_x, trace.err_a])
    written.append(errors)

    bias = out_dir / f"{prefix}_bias_estimate.csv"
    _write_columns(
        bias,
        ["t"] + [f"ahat_{i}" for i in range(1, n + 1)]
        + [f"a{i}" for i in range(1, n + 1)],
        [trace.t] + [trace.a_hat[:, i] for i in range(n)]
        + [np.full(trace.n_samples, a_true[i]) for i in range(n)],
    )
    written.append(bias)
    return written
