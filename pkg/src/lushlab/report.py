"""Canonical JSON for reports: sorted keys, floats at 17 significant digits.

Two runs that produce the same values serialise to the same bytes.  Arrays
and numpy scalars are converted on the way; ``-0.0`` is written as ``0``
and non-finite floats as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def canonical(obj) -> str:
    """Serialise ``obj`` deterministically (compact separators, no trailing newline)."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, enum.Enum):
        return canonical(obj.value)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + canonical(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def digest(obj) -> str:
    return hashlib.sha256(canonical(obj).encode("ascii")).hexdigest()


def make_report(command: str, inputs, seed: int | None, results: dict, version: str) -> dict:
    return {
        "command": command,
        "inputs_digest": digest(inputs),
        "seed": seed,
        "results": results,
        "version": version,
    }
