"""Canonical JSON: sorted keys, compact separators, fixed 6-decimal floats.

Used for scene serialization, traces, and benchmark reports so that equal
values always produce identical bytes.
"""

from __future__ import annotations

import json
import math


def _render(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} is not serializable")
        quantized = round(obj, 6)
        if quantized == 0.0:
            quantized = 0.0  # normalize -0.0
        return f"{quantized:.6f}"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise ValueError(f"object keys must be strings, got {key!r}")
            parts.append(json.dumps(key, ensure_ascii=True) + ":" + _render(obj[key]))
        return "{" + ",".join(parts) + "}"
    raise ValueError(f"unsupported type {type(obj).__name__} in canonical JSON")


def dumps(obj) -> str:
    return _render(obj)


def dump_bytes(obj) -> bytes:
    return _render(obj).encode("utf-8")


def quantize(value):
    """Round floats (recursively) to the 6-decimal precision the emitter uses.

    Applied at construction time so serialize/parse round-trips are exact.
    """
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        q = round(value, 6)
        return 0.0 if q == 0.0 else q
    if isinstance(value, (list, tuple)):
        return [quantize(v) for v in value]
    if isinstance(value, dict):
        return {k: quantize(v) for k, v in value.items()}
    return value
