"""Deterministic report rendering: canonical JSON and pandas tables."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np
import pandas as pd


def _encode(obj: Any) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x!r}")
        text = format(x, ".17g")
        if x == 0.0:
            text = "0.0"
        elif "e" not in text and "." not in text:
            text += ".0"
        return text
    if isinstance(obj, str):
        return _encode_str(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{_encode_str(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps_report(obj: Any) -> str:
    """JSON with sorted keys and 17 significant digits per float."""
    return _encode(obj)


def _is_matrix(v: Any) -> bool:
    return (isinstance(v, list) and bool(v) and all(isinstance(row, list) for row in v)
            and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                    for row in v for x in row))


def render_pretty(report: dict[str, Any]) -> str:
    """Tables for numeric matrices, key: value lines for the rest."""
    lines: list[str] = []

    def walk(prefix: str, obj: Any):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}.{k}" if prefix else str(k), obj[k])
        elif _is_matrix(obj):
            lines.append(f"{prefix}:")
            frame = pd.DataFrame(obj)
            frame.index = [i + 1 for i in frame.index]
            frame.columns = [j + 1 for j in frame.columns]
            lines.append(frame.to_string(float_format=lambda x: f"{x: .6g}"))
        elif isinstance(obj, list) and obj and all(isinstance(x, dict) for x in obj):
            lines.append(f"{prefix}:")
            lines.append(pd.DataFrame(obj).to_string(index=False))
        else:
            lines.append(f"{prefix}: {obj}")

    walk("", report)
    return "\n".join(lines)
