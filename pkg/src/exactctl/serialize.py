"""CSV and JSON artifacts.

CSV floats are written with 17 significant digits, enough to round-trip
every double. JSON floats use Python's shortest round-trip repr, which is
equally exact. Rows are emitted in a fixed order so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .control import ControlSignal
from .dynamics import TimeGrid, Trajectory
from .errors import DimensionMismatch
from .space import GridFunction, l2_norm, midpoints


def fmt(x):
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)     # "inf" / "nan": JSON has no literal for these
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def dumps_json(data):
    return json.dumps(_jsonable(data), sort_keys=True)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path, header):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r, None)
        if head is None or [h.strip() for h in head] != header:
            raise ValueError(f"{path}: expected header {','.join(header)}, got {head}")
        return np.array([[float(c) for c in row] for row in r if row], dtype=float)


# --------------------------------------------------------------------------- grid functions


def write_grid_function_csv(path, x):
    values = np.asarray(x, dtype=float)
    xi = midpoints(values.size)
    _write_rows(path, ["xi", "value"], ([fmt(a), fmt(b)] for a, b in zip(xi, values)))


def read_grid_function_csv(path) -> GridFunction:
    data = _read_rows(path, ["xi", "value"])
    if data.size == 0:
        raise ValueError(f"{path}: no rows")
    return GridFunction(data[:, 1])


def grid_function_json(x):
    return [float(v) for v in np.asarray(x, dtype=float)]


# --------------------------------------------------------------------------- time series


def _write_series(path, label, grid, rows):
    rows = np.asarray(rows, dtype=float)
    xi = midpoints(rows.shape[1])
    t = grid.times

    def gen():
        for j in range(rows.shape[0]):
            tj = fmt(t[j])
            for i in range(rows.shape[1]):
                yield [tj, fmt(xi[i]), fmt(rows[j, i])]

    _write_rows(path, ["t", "xi", label], gen())


def _read_series(path, label):
    data = _read_rows(path, ["t", "xi", label])
    if data.size == 0:
        raise ValueError(f"{path}: no rows")
    times = np.unique(data[:, 0])
    nt = times.size - 1
    if nt < 1 or data.shape[0] % times.size:
        raise DimensionMismatch(f"{path}: rows do not form a full (t, xi) table")
    values = data[:, 2].reshape(times.size, -1)
    return TimeGrid(float(times[-1]), nt), values


def write_trajectory_csv(path, traj: Trajectory):
    _write_series(path, "z", traj.grid, traj.states)


def read_trajectory_csv(path) -> Trajectory:
    grid, values = _read_series(path, "z")
    return Trajectory(grid, values)


def write_control_csv(path, u: ControlSignal):
    _write_series(path, "u", u.grid, u.inputs)


def read_control_csv(path) -> ControlSignal:
    grid, values = _read_series(path, "u")
    return ControlSignal(grid, values)


def trajectory_summary(traj: Trajectory):
    return {"T": traj.grid.T, "nt": traj.grid.nt, "n": traj.n,
            "final_norm": float(l2_norm(traj.final))}
