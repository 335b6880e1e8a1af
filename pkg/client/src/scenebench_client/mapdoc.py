"""Assemble canonical object-map documents from plain records.

Agents never hand-write the map format: add objects as centre/extent
triples plus probability dicts, then submit the builder directly.
Structural checks happen here; semantic validation and all scoring stay
server-side.
"""

from __future__ import annotations

import math

MAP_FORMAT_VERSION = 1
STATE_KEYS = ("added", "removed", "same")


class MapBuilder:
    def __init__(self, task: str, environment: str = "", difficulty: str = "", agent: str = ""):
        if task not in ("semantic_slam", "scd"):
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.environment = environment
        self.difficulty = difficulty
        self.agent = agent
        self._objects: list[dict] = []

    def __len__(self) -> int:
        return len(self._objects)

    def add_object(self, center, extent, label_probs: dict, state_probs: dict | None = None):
        center = _triple("center", center)
        extent = _triple("extent", extent)
        if min(extent) <= 0:
            raise ValueError("extents must be positive (full side lengths)")
        labels = {str(k): float(v) for k, v in dict(label_probs).items()}
        entry: dict = {
            "cuboid": {"center": center, "extent": extent},
            "label_probs": labels,
        }
        if self.task == "scd":
            if state_probs is None:
                raise ValueError("SCD maps need state_probs for every object")
            missing = [k for k in STATE_KEYS if k not in state_probs]
            if missing:
                raise ValueError(f"state_probs missing keys: {missing}")
            entry["state_probs"] = {k: float(state_probs[k]) for k in STATE_KEYS}
        elif state_probs is not None:
            raise ValueError("state_probs are only valid for SCD maps")
        self._objects.append(entry)
        return self

    def payload(self) -> dict:
        doc: dict = {
            "version": MAP_FORMAT_VERSION,
            "task": self.task,
            "environment": self.environment,
            "objects": list(self._objects),
        }
        if self.difficulty:
            doc["difficulty"] = self.difficulty
        if self.agent:
            doc["agent"] = self.agent
        return doc


def _triple(name, value) -> list[float]:
    items = [float(v) for v in value]
    if len(items) != 3 or not all(math.isfinite(v) for v in items):
        raise ValueError(f"{name} must be three finite numbers")
    return items
