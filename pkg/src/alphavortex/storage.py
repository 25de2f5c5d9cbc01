"""CSV and JSON persistence for trajectories, diagnostics, fields and traces.

Every CSV starts with a comment line ``# alphavortex <kind> v<version>``
followed by ``key=value`` metadata, then a column header.  Floats are
written with 17 significant digits so a write/read cycle is exact.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .boundary import SampledTrace
from .dynamics import DiagnosticsRecord, TraceWindow, Trajectory
from .halfplane import VortexEnsemble

SCHEMA_VERSION = 1

SNAPSHOT_COLUMNS = ("t", "j", "x1", "x2", "gamma")
FIELD_COLUMNS = ("x1", "x2", "u1", "u2")
TRACE_COLUMNS = ("x1", "g")

SNAPSHOTS = "snapshots.csv"
DIAGNOSTICS = "diagnostics.csv"
META = "trajectory.json"


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _header(kind, meta):
    extra = " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in meta.items())
    return f"# alphavortex {kind} v{SCHEMA_VERSION}" + (f" {extra}" if extra else "")


def write_table(path, kind, columns, rows, meta=None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(_header(kind, meta or {}) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path, kind):
    """(metadata dict of strings, column names, list of row string lists)."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except FileNotFoundError:
        raise FileNotFoundError(f"missing file: {path}") from None
    with fh:
        first = fh.readline().rstrip("\n").split(" ")
        if first[:3] != ["#", "alphavortex", kind]:
            raise ValueError(f"{path}: not an alphavortex {kind} file")
        if first[3] != f"v{SCHEMA_VERSION}":
            raise ValueError(f"{path}: unsupported schema {first[3]}")
        meta = dict(item.split("=", 1) for item in first[4:])
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return meta, columns, rows


# ---------------------------------------------------------------------------
# trajectories


def write_trajectory(traj, directory):
    """snapshots.csv, diagnostics.csv and trajectory.json in ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rows = []
    for t, q in zip(traj.times, traj.states):
        for j in range(len(q)):
            rows.append((float(t), j, q.positions[j, 0], q.positions[j, 1], q.strengths[j]))
    write_table(d / SNAPSHOTS, "snapshots", SNAPSHOT_COLUMNS, rows,
                {"alpha": traj.alpha, "dt": traj.dt})
    write_table(d / DIAGNOSTICS, "diagnostics", DiagnosticsRecord.FIELDS,
                [[getattr(r, f) for f in DiagnosticsRecord.FIELDS] for r in traj.diagnostics],
                {"alpha": traj.alpha})
    meta = {
        "schema": SCHEMA_VERSION,
        "alpha": traj.alpha,
        "dt": traj.dt,
        "config_hash": traj.config_hash,
        "aborted": traj.aborted,
        "window": None if traj.window is None else {
            "half_width": traj.window.half_width, "n": traj.window.n,
            "tail_tol": traj.window.tail_tol},
    }
    (d / META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return d


def read_trajectory(directory):
    d = Path(directory)
    meta_path = d / META
    if not meta_path.exists():
        raise FileNotFoundError(f"missing file: {meta_path}")
    meta = json.loads(meta_path.read_text())
    _, cols, rows = read_table(d / SNAPSHOTS, "snapshots")
    if tuple(cols) != SNAPSHOT_COLUMNS:
        raise ValueError(f"{d / SNAPSHOTS}: unexpected columns {cols}")
    times, states = [], []
    block_t, pos, gam = None, [], []

    def flush():
        times.append(block_t)
        states.append(VortexEnsemble(np.array(pos).reshape(-1, 2), np.array(gam)))

    for r in rows:
        t = float(r[0])
        if block_t is not None and t != block_t:
            flush()
            pos, gam = [], []
        block_t = t
        pos.append((float(r[2]), float(r[3])))
        gam.append(float(r[4]))
    if block_t is not None:
        flush()
    diags = read_diagnostics(d / DIAGNOSTICS)
    w = meta.get("window")
    window = None if w is None else TraceWindow(float(w["half_width"]), int(w["n"]), float(w["tail_tol"]))
    return Trajectory(times, states, diags, float(meta["alpha"]), float(meta["dt"]),
                      meta.get("config_hash", ""), window, meta.get("aborted"))


def read_diagnostics(path):
    _, cols, rows = read_table(path, "diagnostics")
    if tuple(cols) != DiagnosticsRecord.FIELDS:
        raise ValueError(f"{path}: unexpected columns {cols}")
    out = []
    for r in rows:
        vals = [float(v) for v in r[:-1]]
        out.append(DiagnosticsRecord(*vals, energy_flag=r[-1] == "1"))
    return out


# ---------------------------------------------------------------------------
# fields and traces


def write_field(field, path, half_width=math.nan):
    return write_table(path, "field", FIELD_COLUMNS, field.to_rows(),
                       {"alpha": field.alpha, "L": half_width, "h": field.grid.h,
                        "n1": field.grid.n1, "n2": field.grid.n2})


def read_field(path):
    """(metadata, rows array of shape (n, 4))."""
    meta, cols, rows = read_table(path, "field")
    if tuple(cols) != FIELD_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {cols}")
    return {k: float(v) for k, v in meta.items()}, np.array(rows, dtype=float).reshape(-1, 4)


def write_trace(trace: SampledTrace, path):
    return write_table(path, "trace", TRACE_COLUMNS, trace.to_rows(),
                       {"alpha": trace.alpha, "L": trace.half_width, "n": trace.n,
                        "tail": trace.tail})


def read_trace(path):
    meta, cols, rows = read_table(path, "trace")
    if tuple(cols) != TRACE_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {cols}")
    return {k: float(v) for k, v in meta.items()}, np.array(rows, dtype=float).reshape(-1, 2)


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return Path(path)
