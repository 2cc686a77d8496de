"""Deterministic CSV / JSON writers shared by the command line."""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np

FORMAT_VERSION = "plaplace-output/1"


def fmt_float(x) -> str:
    """Shortest round-trip text for a number; blanks for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def jsonable(obj: Any) -> Any:
    """Plain JSON tree; non-finite floats become the strings "inf", "-inf", "nan"."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return jsonable(obj.value)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def render_json(result: Any, config: dict) -> str:
    doc = {"format_version": FORMAT_VERSION, "config": jsonable(config), "result": jsonable(result)}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render_csv(header: Sequence[str], rows: Iterable[Sequence], config: dict,
               trailer: Optional[Sequence[str]] = None) -> str:
    buf = io.StringIO()
    buf.write(f"# format_version: {FORMAT_VERSION}\n")
    buf.write("# config: " + json.dumps(jsonable(config), separators=(",", ":"), allow_nan=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt_float(v) for v in row])
    for line in trailer or ():
        buf.write(f"# {line}\n")
    return buf.getvalue()


def error_json(kind: str, message: str, **extra) -> str:
    return json.dumps(jsonable({"error": kind, "message": message, **extra}), allow_nan=False)
