"""CSV and JSON writers.

Rows are emitted in a fixed order and floats with ``repr`` so identical runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .intersection import STATE_CODE_NAMES, IntersectionResult
from .lane import STATE_NAMES, LaneSimResult
from .platoon import CoalescenceResult

LANE_TRACE_COLUMNS = ("step", "time_s", "vehicle_id", "speed_ms", "pos_m", "state")
GEOMETRY_COLUMNS = ("lane_id", "t", "vehicle_id", "x_m", "y_m", "state")
INTERSECTION_TRACE_COLUMNS = ("step", "time_s", "lane_id", "vehicle_id", "speed_ms",
                              "dist_center_m", "headway_m", "state")
PLATOON_TRACE_COLUMNS = LANE_TRACE_COLUMNS + ("gain_ms", "gain_pct", "headway_m")
PROB_COLUMNS = ("k", "zeta_binomial", "zeta_poisson")


def _num(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return ""
        return repr(x)
    return x


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])
    return path


def lane_trace_rows(result: LaneSimResult):
    tr = result.trace
    if tr is None:
        return
    n = tr.speed.shape[1]
    for step, t in enumerate(tr.times):
        for i in range(n):
            yield (step, t, i, tr.speed[step, i], tr.pos[step, i], STATE_NAMES[tr.state[step, i]])


def write_lane_trace(path, result: LaneSimResult) -> Path:
    return write_csv(path, LANE_TRACE_COLUMNS, lane_trace_rows(result))


def _intersection_rows(result: IntersectionResult, geometry: bool):
    tr = result.trace
    if tr is None:
        return
    dt = result.time / result.steps if result.steps else 0.0
    for r, t in enumerate(tr.times):
        step = int(round(t / dt)) if dt else 0
        for v in range(tr.speed.shape[1]):
            code = tr.state[r, v]
            if code == 3:
                continue
            lane, idx = result.lane_id[v], result.index[v]
            state = STATE_CODE_NAMES[code]
            if geometry:
                yield (lane, t, idx, tr.x[r, v], tr.y[r, v], state)
            else:
                yield (step, t, lane, idx, tr.speed[r, v], tr.dist_center[r, v], tr.headway[r, v], state)


def write_geometry(path, result: IntersectionResult) -> Path:
    return write_csv(path, GEOMETRY_COLUMNS, _intersection_rows(result, True))


def write_intersection_trace(path, result: IntersectionResult) -> Path:
    return write_csv(path, INTERSECTION_TRACE_COLUMNS, _intersection_rows(result, False))


def write_coalescence_trace(path, result: CoalescenceResult, dt: float) -> Path:
    def rows():
        v = result.v
        for r, t in enumerate(result.times):
            step = int(round(t / dt))
            for i in range(result.positions.shape[1]):
                gain = result.gains[r, i]
                yield (step, t, i, v + gain, result.positions[r, i], "running",
                       gain, 100.0 * gain / v, result.headways[r, i])
    return write_csv(path, PLATOON_TRACE_COLUMNS, rows())


def write_probability_curve(path, rows) -> Path:
    return write_csv(path, PROB_COLUMNS, rows)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats, which JSON cannot carry, with strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    return json.dumps(_clean(obj), default=_json_default, indent=indent, sort_keys=True,
                      allow_nan=False)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path
