"""Scene files: the world description shared by the generator and simulator.

A scene is one concrete environment variation: wall segments, ground-truth
objects (with instance identity and obstacle flag), the passive trajectory,
a start pose, and a day/night tag. Scenes are produced by the environment
generator and consumed by the simulator and the scoring pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .geometry import Cuboid, Vec3
from .jsonio import canonical_bytes
from .object_map import (
    CLASS_SET,
    GroundTruthMap,
    GroundTruthObject,
    MalformedDocument,
    TaskKind,
)


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta > math.pi:
        theta -= 2.0 * math.pi
    elif theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


@dataclass(frozen=True)
class Pose:
    """Planar robot pose: position in metres, heading in radians (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_list(self) -> list[float]:
        return [float(self.x), float(self.y), float(self.theta)]


@dataclass(frozen=True)
class SceneObject:
    instance_id: str
    class_name: str
    cuboid: Cuboid
    obstacle: bool = True

    def __post_init__(self):
        if self.class_name not in CLASS_SET:
            raise MalformedDocument(f"unknown object class {self.class_name!r}")

    def footprint(self) -> tuple[float, float, float, float]:
        return self.cuboid.footprint()


@dataclass(frozen=True)
class Scene:
    name: str
    base: str
    variation: int
    tag: str  # "day" | "night"
    bounds: tuple[float, float]  # (width, height), origin at (0, 0)
    walls: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    objects: tuple[SceneObject, ...]
    start_pose: Pose
    trajectory: tuple[Pose, ...]
    seed: int = 0

    def obstacle_objects(self) -> tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.obstacle)

    def obstacle_segments(self) -> list[tuple[float, float, float, float]]:
        """All 2D segments rays and collision tests run against:
        walls plus the footprint rectangles of floor-standing objects."""
        segs = [(p1[0], p1[1], p2[0], p2[1]) for p1, p2 in self.walls]
        for obj in self.objects:
            if not obj.obstacle:
                continue
            x0, y0, x1, y1 = obj.footprint()
            segs.extend(
                [
                    (x0, y0, x1, y0),
                    (x1, y0, x1, y1),
                    (x1, y1, x0, y1),
                    (x0, y1, x0, y0),
                ]
            )
        return segs

    def to_gt_map(self) -> GroundTruthMap:
        """Scene ground truth as a Semantic SLAM ground-truth map."""
        return GroundTruthMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=tuple(
                GroundTruthObject(o.cuboid, o.class_name, o.instance_id) for o in self.objects
            ),
            environment=self.name,
        )


def scene_payload(scene: Scene) -> dict:
    return {
        "version": 1,
        "kind": "scene",
        "name": scene.name,
        "base": scene.base,
        "variation": scene.variation,
        "tag": scene.tag,
        "bounds": [scene.bounds[0], scene.bounds[1]],
        "walls": [[[x1, y1], [x2, y2]] for (x1, y1), (x2, y2) in scene.walls],
        "objects": [
            {
                "instance_id": o.instance_id,
                "class": o.class_name,
                "cuboid": {
                    "center": list(o.cuboid.center.as_tuple()),
                    "extent": list(o.cuboid.extent.as_tuple()),
                },
                "obstacle": o.obstacle,
            }
            for o in scene.objects
        ],
        "start_pose": scene.start_pose.as_list(),
        "trajectory": [p.as_list() for p in scene.trajectory],
        "seed": scene.seed,
    }


def serialize_scene(scene: Scene) -> bytes:
    return canonical_bytes(scene_payload(scene), indent=2)


def parse_scene(document: bytes | str) -> Scene:
    import json

    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"scene file is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("kind") != "scene" or data.get("version") != 1:
        raise MalformedDocument("not a version-1 scene document")
    try:
        objects = tuple(
            SceneObject(
                instance_id=o["instance_id"],
                class_name=o["class"],
                cuboid=Cuboid(
                    Vec3(*o["cuboid"]["center"]),
                    Vec3(*o["cuboid"]["extent"]),
                ),
                obstacle=bool(o.get("obstacle", True)),
            )
            for o in data["objects"]
        )
        walls = tuple(
            ((w[0][0], w[0][1]), (w[1][0], w[1][1])) for w in data["walls"]
        )
        return Scene(
            name=data["name"],
            base=data["base"],
            variation=int(data["variation"]),
            tag=data["tag"],
            bounds=(float(data["bounds"][0]), float(data["bounds"][1])),
            walls=walls,
            objects=objects,
            start_pose=Pose(*data["start_pose"]),
            trajectory=tuple(Pose(*p) for p in data["trajectory"]),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise MalformedDocument(f"scene document is missing fields: {exc}") from None


def load_scene(path: str | Path) -> Scene:
    return parse_scene(Path(path).read_bytes())


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_bytes(serialize_scene(scene))
