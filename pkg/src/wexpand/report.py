"""Deterministic JSON/CSV serialization of simulation reports.

Floats are written with 17 significant digits so a report round-trips
every double exactly and can be diffed as a regression fixture.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from typing import Any, Sequence


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    text = format(x, ".17g")
    if "e" in text:
        mant, exp = text.split("e")
        text = f"{mant}e{int(exp)}"
    return text


def to_json(obj: Any, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(parts) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        parts = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def load_schema() -> dict:
    return json.loads(resources.files("wexpand").joinpath("report_schema.json").read_text())
