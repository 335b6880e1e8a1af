"""Canonical JSON encoding used by every file format and wire message.

Keys are sorted and floats use Python's shortest round-trip repr, so
serializing the same value always yields the same bytes and re-parsing
recovers every float exactly.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_dumps(obj: Any, indent: int | None = None) -> str:
    if indent is None:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return json.dumps(obj, sort_keys=True, indent=indent, allow_nan=False)


def canonical_bytes(obj: Any, indent: int | None = None) -> bytes:
    text = canonical_dumps(obj, indent=indent)
    if indent is not None:
        text += "\n"
    return text.encode("utf-8")


def round6(x: float) -> float:
    """Report-file rounding: 6 decimal places, ties to even (Python round)."""
    return round(float(x), 6)
