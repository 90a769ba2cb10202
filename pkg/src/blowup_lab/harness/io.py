"""CSV and metadata sidecar output.

Reals are written with 17 significant digits so a re-read reproduces the
double exactly; singular values are the literal ``inf`` and get a companion
0/1 flag column, which keeps every column parseable as a float.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return "" if value is None else str(value)


def csv_text(header, rows, singular=()) -> str:
    """Render a table; each column named in ``singular`` gains ``<name>_is_inf``."""
    header = list(header)
    flag_at = [header.index(name) for name in singular]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header + [f"{header[i]}_is_inf" for i in flag_at])
    for row in rows:
        row = list(row)
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        flags = []
        for i in flag_at:
            v = row[i]
            flags.append(int(isinstance(v, (float, np.floating)) and math.isinf(v)))
        writer.writerow([format_value(v) for v in row] + flags)
    return buf.getvalue()


def write_csv(path: Path, header, rows, singular=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows, singular), encoding="utf-8", newline="")
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else format_value(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_sidecar(path: Path, config: dict, wall_time: float, summary: dict,
                  artifacts: list[str]) -> Path:
    payload = {
        "tool": "blowup-lab",
        "version": __version__,
        "config": config,
        "wall_time_s": wall_time,
        "artifacts": artifacts,
        "summary": _jsonable(summary),
    }
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
