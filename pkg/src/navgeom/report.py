"""Writers for suite reports, tables and polylines."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import IoError


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj):
    """Deterministic JSON text: sorted keys, non-finite floats as null."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True)


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_json(obj, path):
    _write(path, to_json(obj) + "\n")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_csv(header, rows, path):
    _write(path, csv_text(header, rows))


def polyline_rows(paths):
    """Rows ``(path, t, x0, x1, ...)`` for a list of GeodesicPath-like objects."""
    rows = []
    for k, path in enumerate(paths):
        for t, x in zip(path.t, path.points):
            rows.append([k, float(t)] + [float(c) for c in x])
    return rows


def write_polylines(paths, path):
    if not paths:
        write_csv(["path", "t"], [], path)
        return
    dim = len(paths[0].points[0])
    write_csv(["path", "t"] + [f"x{i}" for i in range(dim)], polyline_rows(paths), path)


def suite_rows(report):
    header = ["scenario", "check_id", "anchor", "measured", "expected", "tolerance", "passed", "informational"]
    rows = [[r.scenario, r.check_id, r.anchor, r.measured, r.expected, r.tolerance, r.passed, r.informational] for r in report.records]
    return header, rows
