"""Independent reference implementations used to check the scoring path.

Everything here is deliberately written from first principles (sampling,
exhaustive enumeration, inline formulas) and must stay independent of
the library code it cross-checks.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def mc_iou(center_a, extent_a, center_b, extent_b, samples: np.ndarray) -> float:
    """Monte-Carlo IoU of two axis-aligned boxes.

    ``samples`` is a (3, N) array of uniform [0,1) draws interpreted as
    points in the joint bounding box of the pair; IoU is estimated as
    (hits in both) / (hits in either). Mapping each unit draw into the
    bounding box is folded into per-axis thresholds so the hot loop is
    pure comparisons on the shared sample block.
    """
    center_a = np.asarray(center_a, float)
    extent_a = np.asarray(extent_a, float)
    center_b = np.asarray(center_b, float)
    extent_b = np.asarray(extent_b, float)
    lo_a, hi_a = center_a - extent_a / 2, center_a + extent_a / 2
    lo_b, hi_b = center_b - extent_b / 2, center_b + extent_b / 2
    lo = np.minimum(lo_a, lo_b)
    span = np.maximum(hi_a, hi_b) - lo
    n = samples.shape[1]
    in_a = np.ones(n, dtype=bool)
    in_b = np.ones(n, dtype=bool)
    dtype = samples.dtype
    for d in range(3):
        s = samples[d]
        in_a &= s >= dtype.type((lo_a[d] - lo[d]) / span[d])
        in_a &= s <= dtype.type((hi_a[d] - lo[d]) / span[d])
        in_b &= s >= dtype.type((lo_b[d] - lo[d]) / span[d])
        in_b &= s <= dtype.type((hi_b[d] - lo[d]) / span[d])
    either = np.count_nonzero(in_a | in_b)
    if either == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / either


def voxel_overlap(center_a, extent_a, center_b, extent_b, step: float = 0.01) -> float:
    """Axis-aligned overlap volume by voxel counting (slow, small boxes only)."""
    center_a = np.asarray(center_a, float)
    extent_a = np.asarray(extent_a, float)
    center_b = np.asarray(center_b, float)
    extent_b = np.asarray(extent_b, float)
    lo_a, hi_a = center_a - extent_a / 2, center_a + extent_a / 2
    lo_b, hi_b = center_b - extent_b / 2, center_b + extent_b / 2
    lo = np.maximum(lo_a, lo_b)
    hi = np.minimum(hi_a, hi_b)
    axes = []
    for d in range(3):
        centers = np.arange(lo[d] + step / 2, hi[d], step)
        axes.append(centers)
    if any(len(a) == 0 for a in axes):
        return 0.0
    count = len(axes[0]) * len(axes[1]) * len(axes[2])
    return count * step**3


def brute_force_assignment(q: np.ndarray):
    """Exhaustive maximum-total matching with lexicographic tie-break.

    Works on the zero-padded square form of ``q``; returns
    (total, pairs) where pairs are the kept (row, col, quality) triples
    with zero-quality matches stripped, exactly mirroring the contract
    of the production solver.
    """
    q = np.asarray(q, dtype=float)
    m, n = q.shape
    size = max(m, n)
    sq = np.zeros((size, size))
    sq[:m, :n] = q
    best_total = None
    best_perm = None
    for perm in itertools.permutations(range(size)):
        total = math.fsum(sq[r, perm[r]] for r in range(size))
        if best_total is None or total > best_total or (total == best_total and perm < best_perm):
            best_total = total
            best_perm = perm
    pairs = [
        (r, best_perm[r], float(q[r, best_perm[r]]))
        for r in range(m)
        if best_perm[r] < n and q[r, best_perm[r]] > 0.0
    ]
    kept_total = math.fsum(p[2] for p in pairs)
    return kept_total, pairs


def _box_iou(ca, ea, cb, eb) -> float:
    inter = 1.0
    for d in range(3):
        lo = max(ca[d] - ea[d] / 2, cb[d] - eb[d] / 2)
        hi = min(ca[d] + ea[d] / 2, cb[d] + eb[d] / 2)
        if hi <= lo:
            return 0.0
        inter *= hi - lo
    va = ea[0] * ea[1] * ea[2]
    vb = eb[0] * eb[1] * eb[2]
    return inter / (va + vb - inter)


def brute_force_omq(proposed: list[dict], gt: list[dict], scd: bool) -> float:
    """Score maps given as plain dicts, via exhaustive assignment.

    Proposed objects: {"center", "extent", "label_probs", ("state_probs")}.
    GT objects: {"center", "extent", "true_label", ("true_state")}.
    """
    m, n = len(proposed), len(gt)
    q = np.zeros((m, n))
    for i, o in enumerate(proposed):
        for j, g in enumerate(gt):
            sp = _box_iou(o["center"], o["extent"], g["center"], g["extent"])
            lb = o["label_probs"].get(g["true_label"], 0.0)
            if scd:
                st = o["state_probs"][g["true_state"]]
                q[i, j] = (sp * lb * st) ** (1.0 / 3.0)
            else:
                q[i, j] = math.sqrt(sp * lb)
    total, pairs = brute_force_assignment(q)
    matched_rows = {p[0] for p in pairs}
    matched_cols = {p[1] for p in pairs}
    n_tp = len(pairs)
    n_fn = n - len(matched_cols)
    fp_costs = []
    for i, o in enumerate(proposed):
        if i in matched_rows:
            continue
        max_label = max(o["label_probs"].values(), default=0.0)
        if scd:
            max_state = max(o["state_probs"]["added"], o["state_probs"]["removed"])
            fp_costs.append(math.sqrt(max_label * max_state))
        else:
            fp_costs.append(max_label)
    denominator = n_tp + n_fn + math.fsum(fp_costs)
    if denominator == 0:
        return 1.0
    return total / denominator
