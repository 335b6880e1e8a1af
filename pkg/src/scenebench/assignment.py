"""Optimal one-to-one assignment between proposed and ground-truth objects.

The objective is the maximum total pairwise quality. Ties between
equally good assignments are broken toward the lexicographically
smallest pairing by (proposed index, gt index) so that scoring reports
are reproducible down to the pair level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class MatchedPair:
    proposed: int
    gt: int
    quality: float


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[MatchedPair, ...]
    unmatched_proposed: tuple[int, ...]
    unmatched_gt: tuple[int, ...]

    @property
    def total_quality(self) -> float:
        return math.fsum(p.quality for p in self.pairs)


def validate_quality_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 2:
        raise ValueError(f"quality matrix must be 2-D, got shape {q.shape}")
    if q.size and (not np.all(np.isfinite(q)) or q.min() < 0.0 or q.max() > 1.0):
        raise ValueError("quality matrix entries must be finite and within [0, 1]")
    return q


def _matching_total(sq: np.ndarray, rows, cols) -> float:
    return math.fsum(float(sq[r, c]) for r, c in zip(rows, cols))


def solve(quality: np.ndarray) -> Assignment:
    """Maximum-total-quality matching with deterministic tie-breaking.

    Rectangular matrices are padded square with zeros internally; padded
    and zero-quality matches are stripped from the result. Among equal
    totals the pairing chosen is lexicographically smallest, found by
    fixing rows in order to the smallest column that still permits an
    optimal completion (verified with an exact re-solve).
    """
    q = validate_quality_matrix(quality)
    m, n = q.shape
    if m == 0 or n == 0:
        return Assignment((), tuple(range(m)), tuple(range(n)))

    size = max(m, n)
    sq = np.zeros((size, size), dtype=float)
    sq[:m, :n] = q

    rows, cols = linear_sum_assignment(sq, maximize=True)
    best_total = _matching_total(sq, rows, cols)
    # current[r] = column of a known-optimal completion for still-open rows
    current = dict(zip(rows.tolist(), cols.tolist()))

    chosen: dict[int, int] = {}
    open_cols = list(range(size))
    prefix_values: list[float] = []
    for r in range(size):
        for c in open_cols:
            if c == current[r]:
                chosen[r] = c
                break
            sub_rows = [rr for rr in range(r + 1, size)]
            sub_cols = [cc for cc in open_cols if cc != c]
            if sub_rows:
                sub = sq[np.ix_(sub_rows, sub_cols)]
                srl, scl = linear_sum_assignment(sub, maximize=True)
                completion = [(sub_rows[i], sub_cols[j]) for i, j in zip(srl, scl)]
            else:
                completion = []
            candidate = math.fsum(
                prefix_values + [float(sq[r, c])] + [float(sq[rr, cc]) for rr, cc in completion]
            )
            if candidate == best_total:
                chosen[r] = c
                for rr, cc in completion:
                    current[rr] = cc
                break
        else:  # pragma: no cover - current[r] is always a valid fallback
            chosen[r] = current[r]
        open_cols.remove(chosen[r])
        prefix_values.append(float(sq[r, chosen[r]]))

    pairs = []
    matched_rows: set[int] = set()
    matched_cols: set[int] = set()
    for r in range(m):
        c = chosen[r]
        if c < n and q[r, c] > 0.0:
            pairs.append(MatchedPair(r, c, float(q[r, c])))
            matched_rows.add(r)
            matched_cols.add(c)
    return Assignment(
        pairs=tuple(pairs),
        unmatched_proposed=tuple(r for r in range(m) if r not in matched_rows),
        unmatched_gt=tuple(c for c in range(n) if c not in matched_cols),
    )
