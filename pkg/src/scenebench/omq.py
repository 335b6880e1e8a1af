"""Object Map Quality scoring for Semantic SLAM and Scene Change Detection.

The score for a submission is the sum of matched pairwise qualities
divided by (true positives + false negatives + summed false-positive
costs). Pairwise quality is the geometric mean of spatial (3D IoU) and
label quality, extended with a state quality for change detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assignment
from .geometry import iou_3d
from .jsonio import round6
from .object_map import (
    GroundTruthMap,
    GroundTruthObject,
    ObjectMap,
    ProposedObject,
    TaskKind,
    TaskMismatch,
)


def spatial_quality(o: ProposedObject, g: GroundTruthObject) -> float:
    """3D IoU between the proposed and ground-truth cuboids."""
    return iou_3d(o.cuboid, g.cuboid)


def label_quality(o: ProposedObject, g: GroundTruthObject) -> float:
    """Probability mass the proposal puts on the true class."""
    return o.label.prob(g.true_label)


def state_quality(o: ProposedObject, g: GroundTruthObject) -> float:
    """Probability mass the proposal puts on the true changed state."""
    if o.state is None or g.true_state is None:
        raise TaskMismatch("state quality requires SCD objects with state fields")
    return o.state.prob(g.true_state)


def pairwise_quality(o: ProposedObject, g: GroundTruthObject) -> float:
    """Geometric mean of spatial and label quality; 0 if either is 0."""
    sp = spatial_quality(o, g)
    if sp == 0.0:
        return 0.0
    lb = label_quality(o, g)
    if lb == 0.0:
        return 0.0
    return math.sqrt(sp * lb)


def pairwise_quality_scd(o: ProposedObject, g: GroundTruthObject) -> float:
    """Geometric mean of spatial, label and state quality."""
    sp = spatial_quality(o, g)
    if sp == 0.0:
        return 0.0
    lb = label_quality(o, g)
    if lb == 0.0:
        return 0.0
    st = state_quality(o, g)
    if st == 0.0:
        return 0.0
    return (sp * lb * st) ** (1.0 / 3.0)


def fp_cost(o: ProposedObject) -> float:
    """Cost of an unmatched proposal: its largest non-background class mass."""
    return o.label.max_prob()


def fp_cost_scd(o: ProposedObject) -> float:
    """SCD false-positive cost: geometric mean of the largest class mass and
    the largest mass on a changed ('added'/'removed') state."""
    if o.state is None:
        raise TaskMismatch("SCD false-positive cost requires a state distribution")
    return math.sqrt(o.label.max_prob() * o.state.max_changed())


@dataclass(frozen=True)
class PairBreakdown:
    proposed_index: int
    gt_index: int
    gt_instance_id: str
    q_spatial: float
    q_label: float
    pairwise: float
    q_state: float | None = None


@dataclass(frozen=True)
class EvalReport:
    task: TaskKind
    omq: float
    avg_pairwise: float
    avg_spatial_quality: float
    avg_label_quality: float
    n_tp: int
    n_fn: int
    n_fp: int
    fp_costs: tuple[float, ...]
    assignment: assignment.Assignment
    pairs: tuple[PairBreakdown, ...]
    avg_state_quality: float | None = None
    environment: str = ""

    def to_payload(self) -> dict:
        """Report-file form; scores rounded to 6 decimals (ties to even)."""
        payload: dict = {
            "version": 1,
            "task": self.task.value,
            "environment": self.environment,
            "omq": round6(self.omq),
            "avg_pairwise": round6(self.avg_pairwise),
            "avg_spatial_quality": round6(self.avg_spatial_quality),
            "avg_label_quality": round6(self.avg_label_quality),
            "n_tp": self.n_tp,
            "n_fn": self.n_fn,
            "n_fp": self.n_fp,
            "fp_costs": [round6(c) for c in self.fp_costs],
            "pairs": [
                {
                    "proposed": p.proposed_index,
                    "gt": p.gt_index,
                    "gt_instance_id": p.gt_instance_id,
                    "q_spatial": round6(p.q_spatial),
                    "q_label": round6(p.q_label),
                    "pairwise": round6(p.pairwise),
                    **({"q_state": round6(p.q_state)} if p.q_state is not None else {}),
                }
                for p in self.pairs
            ],
            "unmatched_proposed": list(self.assignment.unmatched_proposed),
            "unmatched_gt": list(self.assignment.unmatched_gt),
        }
        if self.avg_state_quality is not None:
            payload["avg_state_quality"] = round6(self.avg_state_quality)
        return payload


def quality_matrix(proposed: ObjectMap, gt: GroundTruthMap) -> np.ndarray:
    """Pairwise quality for every proposal (rows) against every GT object."""
    pair_fn = pairwise_quality_scd if proposed.task is TaskKind.SCD else pairwise_quality
    q = np.zeros((len(proposed.objects), len(gt.objects)), dtype=float)
    for i, obj in enumerate(proposed.objects):
        for j, gobj in enumerate(gt.objects):
            q[i, j] = pair_fn(obj, gobj)
    return q


def evaluate(proposed: ObjectMap, gt: GroundTruthMap) -> EvalReport:
    """Score a submission against ground truth.

    Both maps must share a task. With both maps empty there is nothing to
    get wrong, so the score is defined as 1.0.
    """
    if proposed.task is not gt.task:
        raise TaskMismatch(
            f"proposed map is {proposed.task.value!r} but ground truth is {gt.task.value!r}"
        )
    scd = proposed.task is TaskKind.SCD
    q = quality_matrix(proposed, gt)
    assign = assignment.solve(q)

    pairs = []
    for match in assign.pairs:
        o = proposed.objects[match.proposed]
        g = gt.objects[match.gt]
        pairs.append(
            PairBreakdown(
                proposed_index=match.proposed,
                gt_index=match.gt,
                gt_instance_id=g.instance_id,
                q_spatial=spatial_quality(o, g),
                q_label=label_quality(o, g),
                q_state=state_quality(o, g) if scd else None,
                pairwise=match.quality,
            )
        )

    cost_fn = fp_cost_scd if scd else fp_cost
    costs = tuple(cost_fn(proposed.objects[i]) for i in assign.unmatched_proposed)

    n_tp = len(assign.pairs)
    n_fn = len(assign.unmatched_gt)
    n_fp = len(assign.unmatched_proposed)
    tp_total = math.fsum(p.pairwise for p in pairs)
    denominator = n_tp + n_fn + math.fsum(costs)
    omq = tp_total / denominator if denominator > 0 else 1.0

    def _mean(values) -> float:
        return math.fsum(values) / n_tp if n_tp else 0.0

    return EvalReport(
        task=proposed.task,
        omq=omq,
        avg_pairwise=_mean(p.pairwise for p in pairs),
        avg_spatial_quality=_mean(p.q_spatial for p in pairs),
        avg_label_quality=_mean(p.q_label for p in pairs),
        avg_state_quality=_mean(p.q_state for p in pairs) if scd else None,
        n_tp=n_tp,
        n_fn=n_fn,
        n_fp=n_fp,
        fp_costs=costs,
        assignment=assign,
        pairs=tuple(pairs),
        environment=proposed.environment or gt.environment,
    )
