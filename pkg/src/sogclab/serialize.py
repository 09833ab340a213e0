"""Deterministic text serialization helpers.

All floats written by this package go through :func:`fmt_float` (17
significant digits, enough for an exact float64 round trip), so repeated
runs with the same inputs produce byte-identical files.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def dumps(obj: Any) -> str:
    """JSON-encode ``obj`` with fixed float formatting and no whitespace drift.

    Supports dicts (insertion order preserved), lists/tuples, numpy arrays
    (written as nested lists), strings, bools, ints, floats and None.
    """
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if obj is None or isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` with LF line endings, creating parents."""
    from pathlib import Path

    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed writing {p}: {exc}") from exc


def csv_lines(header: list[str], rows: list[list]) -> str:
    """Render a CSV with ASCII header, LF endings and 17-digit floats."""
    out = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(fmt_float(cell))
            else:
                cells.append(str(cell))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
