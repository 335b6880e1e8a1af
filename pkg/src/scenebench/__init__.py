"""Desk-scale scene-understanding challenge kit.

Scoring of cuboid object maps for Semantic SLAM and Scene Change
Detection, a deterministic synthetic robot world, a procedural
environment generator, a turn-based agent wire protocol, and a batch
harness that runs the full task/difficulty matrix.
"""

from .geometry import Cuboid, Vec3, intersection_volume, iou_3d, volume
from .object_map import (
    CLASS_LIST,
    GroundTruthMap,
    GroundTruthObject,
    LabelDistribution,
    ObjectMap,
    ProposedObject,
    StateDistribution,
    TaskKind,
    diff_to_gt_scd,
    parse_gt_map,
    parse_map,
    serialize_gt_map,
    serialize_map,
)
from .omq import EvalReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "CLASS_LIST",
    "Cuboid",
    "EvalReport",
    "GroundTruthMap",
    "GroundTruthObject",
    "LabelDistribution",
    "ObjectMap",
    "ProposedObject",
    "StateDistribution",
    "TaskKind",
    "Vec3",
    "diff_to_gt_scd",
    "evaluate",
    "intersection_volume",
    "iou_3d",
    "parse_gt_map",
    "parse_map",
    "serialize_gt_map",
    "serialize_map",
    "volume",
    "__version__",
]
