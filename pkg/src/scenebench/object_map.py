"""Object-map data model, validation and serialization for both tasks.

A map document is JSON (format version 1):

    {
      "version": 1,
      "task": "semantic_slam" | "scd",
      "environment": "<env id>",
      "objects": [
        {
          "cuboid": {"center": [x, y, z], "extent": [x, y, z]},
          "label_probs": {"<class>": p, ...},
          "state_probs": {"added": p, "removed": p, "same": p}   # SCD only
        },
        ...
      ]
    }

Ground-truth documents use the same envelope but objects carry
"instance_id", "true_label" and (SCD) "true_state" instead of
probability fields. Label vectors may sum to less than one; the
residual mass is implicit background. An explicit "background" entry
is rejected so there is exactly one encoding of any belief.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .geometry import Cuboid, Vec3
from .jsonio import canonical_bytes

# Challenge classes, fixed order (score-relevant, versioned with the format).
CLASS_LIST: tuple[str, ...] = (
    "bottle", "cup", "bowl", "spoon", "banana", "apple", "orange", "cake",
    "plant", "mouse", "keyboard", "laptop", "book", "clock", "chair",
    "table", "couch", "bed", "toilet", "tv", "microwave", "toaster",
    "fridge", "sink", "person",
)
CLASS_SET = frozenset(CLASS_LIST)
CLASS_LIST_VERSION = 1

STATE_ADDED = "added"
STATE_REMOVED = "removed"
STATE_SAME = "same"

_SUM_TOL = 1e-6


class TaskKind(str, enum.Enum):
    SEMANTIC_SLAM = "semantic_slam"
    SCD = "scd"


class MalformedDocument(ValueError):
    """Document is not valid JSON or is structurally wrong."""


class InvariantViolation(ValueError):
    """A field violates a data invariant; message names object index and field."""


class TaskMismatch(ValueError):
    """Fields present or absent are inconsistent with the map's task."""


@dataclass(frozen=True)
class LabelDistribution:
    """Probability mass per challenge class; missing mass is background."""

    probs: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "probs", dict(self.probs))
        total = 0.0
        for name, p in self.probs.items():
            if name not in CLASS_SET:
                raise InvariantViolation(f"unknown class {name!r} in label distribution")
            if not math.isfinite(p) or p < 0.0:
                raise InvariantViolation(f"label probability for {name!r} must be in [0,1], got {p!r}")
            total += p
        if total > 1.0 + _SUM_TOL:
            raise InvariantViolation(f"label probabilities sum to {total}, above 1")

    def prob(self, class_name: str) -> float:
        return float(self.probs.get(class_name, 0.0))

    def max_prob(self) -> float:
        """Largest mass on any (non-background) class; 0 for an empty vector."""
        return max(self.probs.values(), default=0.0)

    @classmethod
    def one_hot(cls, class_name: str) -> "LabelDistribution":
        return cls({class_name: 1.0})


@dataclass(frozen=True)
class StateDistribution:
    """Belief that an object was added, removed, or unchanged."""

    added: float
    removed: float
    same: float

    def __post_init__(self):
        for name in ("added", "removed", "same"):
            p = getattr(self, name)
            if not math.isfinite(p) or p < 0.0 or p > 1.0:
                raise InvariantViolation(f"state probability {name!r} must be in [0,1], got {p!r}")
        total = self.added + self.removed + self.same
        if abs(total - 1.0) > _SUM_TOL:
            raise InvariantViolation(f"state probabilities sum to {total}, expected 1")

    def prob(self, state: str) -> float:
        if state not in (STATE_ADDED, STATE_REMOVED, STATE_SAME):
            raise ValueError(f"unknown state {state!r}")
        return float(getattr(self, state))

    def max_changed(self) -> float:
        """Largest mass on a changed state (anything that is not 'same')."""
        return max(self.added, self.removed)

    @classmethod
    def one_hot(cls, state: str) -> "StateDistribution":
        return cls(
            added=1.0 if state == STATE_ADDED else 0.0,
            removed=1.0 if state == STATE_REMOVED else 0.0,
            same=1.0 if state == STATE_SAME else 0.0,
        )


@dataclass(frozen=True)
class ProposedObject:
    cuboid: Cuboid
    label: LabelDistribution
    state: StateDistribution | None = None


@dataclass(frozen=True)
class GroundTruthObject:
    cuboid: Cuboid
    true_label: str
    instance_id: str
    true_state: str | None = None

    def __post_init__(self):
        if self.true_label not in CLASS_SET:
            raise InvariantViolation(f"unknown ground-truth class {self.true_label!r}")
        if self.true_state is not None and self.true_state not in (STATE_ADDED, STATE_REMOVED):
            raise InvariantViolation(
                f"ground-truth state must be 'added' or 'removed', got {self.true_state!r}"
            )


@dataclass(frozen=True)
class ObjectMap:
    task: TaskKind
    objects: tuple[ProposedObject, ...]
    environment: str = ""
    difficulty: str = ""
    agent: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        for i, obj in enumerate(self.objects):
            _check_task_fields(self.task, obj.state is not None, i)


@dataclass(frozen=True)
class GroundTruthMap:
    task: TaskKind
    objects: tuple[GroundTruthObject, ...]
    environment: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        for i, obj in enumerate(self.objects):
            _check_task_fields(self.task, obj.true_state is not None, i)


def _check_task_fields(task: TaskKind, has_state: bool, index: int) -> None:
    if task is TaskKind.SCD and not has_state:
        raise TaskMismatch(f"object {index}: SCD map requires a state field")
    if task is TaskKind.SEMANTIC_SLAM and has_state:
        raise TaskMismatch(f"object {index}: state field not allowed in a Semantic SLAM map")


# ---------------------------------------------------------------------------
# Parsing


def _parse_json(document: bytes | str) -> dict:
    import json

    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"document is not UTF-8: {exc}") from None
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"document is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise MalformedDocument("top-level value must be an object")
    return data


def _parse_task(data: dict, expected: TaskKind | None) -> TaskKind:
    version = data.get("version")
    if version != 1:
        raise MalformedDocument(f"unsupported map format version {version!r}")
    raw = data.get("task")
    try:
        task = TaskKind(raw)
    except ValueError:
        raise MalformedDocument(f"unknown task {raw!r}") from None
    if expected is not None and task is not expected:
        raise TaskMismatch(f"document task is {task.value!r}, expected {expected.value!r}")
    return task


def _parse_vec3(raw, index: int, which: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise MalformedDocument(f"object {index}: cuboid {which} must be a list of 3 numbers")
    try:
        return Vec3(float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(f"object {index}: cuboid {which}: {exc}") from None


def _parse_cuboid(raw, index: int) -> Cuboid:
    if not isinstance(raw, dict) or "center" not in raw or "extent" not in raw:
        raise MalformedDocument(f"object {index}: cuboid must have 'center' and 'extent'")
    center = _parse_vec3(raw["center"], index, "center")
    extent = _parse_vec3(raw["extent"], index, "extent")
    try:
        return Cuboid(center, extent)
    except ValueError as exc:
        raise InvariantViolation(f"object {index}: {exc}") from None


def _parse_label_probs(raw, index: int) -> LabelDistribution:
    if not isinstance(raw, dict):
        raise MalformedDocument(f"object {index}: label_probs must be an object")
    if "background" in raw:
        raise InvariantViolation(
            f"object {index}: explicit 'background' entry is not allowed; "
            "background is the residual mass"
        )
    probs = {}
    for name, p in raw.items():
        if not isinstance(p, (int, float)):
            raise MalformedDocument(f"object {index}: label probability {name!r} must be a number")
        probs[name] = float(p)
    try:
        return LabelDistribution(probs)
    except InvariantViolation as exc:
        raise InvariantViolation(f"object {index}: {exc}") from None


def _parse_state_probs(raw, index: int) -> StateDistribution:
    if not isinstance(raw, dict) or set(raw) != {STATE_ADDED, STATE_REMOVED, STATE_SAME}:
        raise MalformedDocument(
            f"object {index}: state_probs must have exactly 'added', 'removed', 'same'"
        )
    for key, p in raw.items():
        if not isinstance(p, (int, float)):
            raise MalformedDocument(f"object {index}: state probability {key!r} must be a number")
    try:
        return StateDistribution(float(raw[STATE_ADDED]), float(raw[STATE_REMOVED]), float(raw[STATE_SAME]))
    except InvariantViolation as exc:
        raise InvariantViolation(f"object {index}: {exc}") from None


def parse_map(document: bytes | str, task: TaskKind) -> ObjectMap:
    """Parse and validate a proposed object-map document."""
    data = _parse_json(document)
    parsed_task = _parse_task(data, task)
    raw_objects = data.get("objects")
    if not isinstance(raw_objects, list):
        raise MalformedDocument("'objects' must be a list")
    objects = []
    for i, raw in enumerate(raw_objects):
        if not isinstance(raw, dict):
            raise MalformedDocument(f"object {i}: must be an object")
        cuboid = _parse_cuboid(raw.get("cuboid"), i)
        label = _parse_label_probs(raw.get("label_probs", {}), i)
        state = None
        if "state_probs" in raw:
            if parsed_task is not TaskKind.SCD:
                raise TaskMismatch(f"object {i}: state_probs not allowed in a Semantic SLAM map")
            state = _parse_state_probs(raw["state_probs"], i)
        elif parsed_task is TaskKind.SCD:
            raise TaskMismatch(f"object {i}: SCD map requires state_probs")
        objects.append(ProposedObject(cuboid, label, state))
    return ObjectMap(
        task=parsed_task,
        objects=tuple(objects),
        environment=str(data.get("environment", "")),
        difficulty=str(data.get("difficulty", "")),
        agent=str(data.get("agent", "")),
    )


def parse_gt_map(document: bytes | str, task: TaskKind) -> GroundTruthMap:
    """Parse and validate a ground-truth map document."""
    data = _parse_json(document)
    parsed_task = _parse_task(data, task)
    raw_objects = data.get("objects")
    if not isinstance(raw_objects, list):
        raise MalformedDocument("'objects' must be a list")
    objects = []
    for i, raw in enumerate(raw_objects):
        if not isinstance(raw, dict):
            raise MalformedDocument(f"object {i}: must be an object")
        cuboid = _parse_cuboid(raw.get("cuboid"), i)
        label = raw.get("true_label")
        if not isinstance(label, str):
            raise MalformedDocument(f"object {i}: missing true_label")
        instance_id = raw.get("instance_id")
        if not isinstance(instance_id, str) or not instance_id:
            raise MalformedDocument(f"object {i}: missing instance_id")
        state = raw.get("true_state")
        if state is not None and not isinstance(state, str):
            raise MalformedDocument(f"object {i}: true_state must be a string")
        if parsed_task is TaskKind.SCD and state is None:
            raise TaskMismatch(f"object {i}: SCD ground truth requires true_state")
        if parsed_task is TaskKind.SEMANTIC_SLAM and state is not None:
            raise TaskMismatch(f"object {i}: true_state not allowed in Semantic SLAM ground truth")
        try:
            objects.append(GroundTruthObject(cuboid, label, instance_id, state))
        except InvariantViolation as exc:
            raise InvariantViolation(f"object {i}: {exc}") from None
    return GroundTruthMap(
        task=parsed_task,
        objects=tuple(objects),
        environment=str(data.get("environment", "")),
    )


# ---------------------------------------------------------------------------
# Serialization


def _cuboid_payload(c: Cuboid) -> dict:
    return {"center": list(c.center.as_tuple()), "extent": list(c.extent.as_tuple())}


def map_payload(m: ObjectMap) -> dict:
    objects = []
    for obj in m.objects:
        entry: dict = {
            "cuboid": _cuboid_payload(obj.cuboid),
            "label_probs": {k: float(v) for k, v in sorted(obj.label.probs.items())},
        }
        if obj.state is not None:
            entry["state_probs"] = {
                STATE_ADDED: obj.state.added,
                STATE_REMOVED: obj.state.removed,
                STATE_SAME: obj.state.same,
            }
        objects.append(entry)
    payload: dict = {
        "version": 1,
        "task": m.task.value,
        "environment": m.environment,
        "objects": objects,
    }
    if m.difficulty:
        payload["difficulty"] = m.difficulty
    if m.agent:
        payload["agent"] = m.agent
    return payload


def gt_map_payload(m: GroundTruthMap) -> dict:
    objects = []
    for obj in m.objects:
        entry: dict = {
            "cuboid": _cuboid_payload(obj.cuboid),
            "instance_id": obj.instance_id,
            "true_label": obj.true_label,
        }
        if obj.true_state is not None:
            entry["true_state"] = obj.true_state
        objects.append(entry)
    return {
        "version": 1,
        "task": m.task.value,
        "environment": m.environment,
        "objects": objects,
    }


def serialize_map(m: ObjectMap) -> bytes:
    """Canonical bytes for a proposed map; parse_map round-trips exactly."""
    return canonical_bytes(map_payload(m), indent=2)


def serialize_gt_map(m: GroundTruthMap) -> bytes:
    return canonical_bytes(gt_map_payload(m), indent=2)


# ---------------------------------------------------------------------------
# Scene change ground truth


def diff_to_gt_scd(env_a: GroundTruthMap, env_b: GroundTruthMap) -> GroundTruthMap:
    """Ground-truth changes between two variations of one base environment.

    Objects only in ``env_a`` are 'removed', objects only in ``env_b`` are
    'added'; persistent objects are matched by instance_id and dropped.
    """
    if env_a.task is not TaskKind.SEMANTIC_SLAM or env_b.task is not TaskKind.SEMANTIC_SLAM:
        raise TaskMismatch("diff_to_gt_scd expects two Semantic SLAM ground-truth maps")
    ids_a = {o.instance_id for o in env_a.objects}
    ids_b = {o.instance_id for o in env_b.objects}
    changes = []
    for obj in env_a.objects:
        if obj.instance_id not in ids_b:
            changes.append(
                GroundTruthObject(obj.cuboid, obj.true_label, obj.instance_id, STATE_REMOVED)
            )
    for obj in env_b.objects:
        if obj.instance_id not in ids_a:
            changes.append(
                GroundTruthObject(obj.cuboid, obj.true_label, obj.instance_id, STATE_ADDED)
            )
    environment = f"{env_a.environment}+{env_b.environment}"
    return GroundTruthMap(task=TaskKind.SCD, objects=tuple(changes), environment=environment)


def gt_as_proposal(gt: GroundTruthMap) -> ObjectMap:
    """One-hot proposal built from ground truth; scores a perfect OMQ of 1."""
    objects = []
    for obj in gt.objects:
        state = StateDistribution.one_hot(obj.true_state) if obj.true_state else None
        objects.append(ProposedObject(obj.cuboid, LabelDistribution.one_hot(obj.true_label), state))
    return ObjectMap(task=gt.task, objects=tuple(objects), environment=gt.environment)
