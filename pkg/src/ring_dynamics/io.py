"""Readers and writers for traces, events, orbits and reports.

Floats are always written with 17 significant digits so that files
round-trip exactly and identical runs give byte-identical output.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dynamics import COLUMNS, Event, OrbitTrace

FLOAT_FORMAT = ".17g"

_CSV_HEADERS = {
    "spatial": ("t", "x", "y", "z", "vx", "vy", "vz", "E"),
    "planar": ("t", "x", "z", "vx", "vz", "E"),
    "reduced": ("t", "r", "z", "vr", "vz", "phi", "E"),
}


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, FLOAT_FORMAT)


def _to_plain(obj):
    """Map numpy scalars/arrays, tuples and fractions to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level) for v in obj) + "]"
        items = [pad + _emit(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float at 17 significant digits."""
    return _emit(_to_plain(obj), indent, 0)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# traces
# --------------------------------------------------------------------------

def events_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".events.json")


def meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def write_trace(trace: OrbitTrace, path) -> Path:
    """CSV of samples plus the events sidecar and a small metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _CSV_HEADERS[trace.kind]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(trace.t)):
            row = [trace.t[i], *trace.y[i]]
            if trace.kind == "reduced":
                row.append(trace.phi[i] if trace.phi is not None else 0.0)
            row.append(trace.energy[i])
            w.writerow([format_float(v) for v in row])
    write_json(events_path(path), [{"t": e.t, "kind": e.kind, "state": list(e.state)}
                                   for e in trace.events])
    write_json(meta_path(path), {"kind": trace.kind, "status": trace.status, "keff": trace.keff})
    return path


def read_trace(path) -> OrbitTrace:
    """Inverse of :func:`write_trace`; the dense interpolant is not restored."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = tuple(rows[0])
    kinds = [k for k, h in _CSV_HEADERS.items() if h == header]
    if not kinds:
        raise ValueError(f"unrecognized trace header {','.join(header)}")
    kind = kinds[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    d = len(COLUMNS[kind])
    meta = read_json(meta_path(path)) if meta_path(path).exists() else {}
    events = []
    if events_path(path).exists():
        events = [Event(float(e["t"]), e["kind"], tuple(float(v) for v in e["state"]))
                  for e in read_json(events_path(path))]
    return OrbitTrace(kind=kind, t=data[:, 0], y=data[:, 1:1 + d], energy=data[:, -1],
                      events=events, status=meta.get("status", "time"),
                      phi=data[:, 1 + d] if kind == "reduced" else None,
                      keff=meta.get("keff"))


def write_projection(trace: OrbitTrace, path, columns: tuple[str, str] | None = None) -> Path:
    """Whitespace-separated two-column file for gnuplot (``plot 'f' u 1:2 w l``)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = {"planar": ("x", "z"), "reduced": ("r", "z"), "spatial": ("x", "y")}[trace.kind]
    a, b = trace.column(columns[0]), trace.column(columns[1])
    lines = [f"# {columns[0]} {columns[1]}"]
    lines += [f"{format_float(u)} {format_float(v)}" for u, v in zip(a, b)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_projection(path) -> np.ndarray:
    return np.loadtxt(path, comments="#", ndmin=2)
