"""Axis-aligned 3D cuboid arithmetic shared by scoring and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Vec3:
    """Point or size in metres. All components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"Vec3.{name} must be a finite number, got {v!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (float(self.x), float(self.y), float(self.z))


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned box given by its centroid and full side lengths (metres).

    Extents are full side lengths, not half-extents. Degenerate boxes
    (any extent <= 0) are rejected on construction so bad data surfaces
    at parse time instead of silently scoring zero.
    """

    center: Vec3
    extent: Vec3

    def __post_init__(self):
        e = self.extent
        if min(e.x, e.y, e.z) <= 0.0:
            raise ValueError(f"Cuboid extents must be strictly positive, got {e.as_tuple()}")

    @property
    def min_corner(self) -> Vec3:
        c, e = self.center, self.extent
        return Vec3(c.x - e.x / 2.0, c.y - e.y / 2.0, c.z - e.z / 2.0)

    @property
    def max_corner(self) -> Vec3:
        c, e = self.center, self.extent
        return Vec3(c.x + e.x / 2.0, c.y + e.y / 2.0, c.z + e.z / 2.0)

    def footprint(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the box projected onto the ground plane."""
        lo, hi = self.min_corner, self.max_corner
        return (lo.x, lo.y, hi.x, hi.y)


def volume(c: Cuboid) -> float:
    """Volume in cubic metres; strictly positive for any valid cuboid."""
    e = c.extent
    return e.x * e.y * e.z


def _axis_overlap(ca: float, ea: float, cb: float, eb: float) -> float:
    # min(ea, eb, (ea+eb)/2 - |ca-cb|) equals the interval overlap exactly
    # and degrades to ea when the boxes coincide, keeping
    # intersection_volume(a, a) == volume(a) bit-exact.
    return min(ea, eb, (ea + eb) / 2.0 - abs(ca - cb))


def intersection_volume(a: Cuboid, b: Cuboid) -> float:
    """Volume of the axis-aligned overlap of two cuboids; 0 when disjoint."""
    dx = _axis_overlap(a.center.x, a.extent.x, b.center.x, b.extent.x)
    dy = _axis_overlap(a.center.y, a.extent.y, b.center.y, b.extent.y)
    dz = _axis_overlap(a.center.z, a.extent.z, b.center.z, b.extent.z)
    if dx <= 0.0 or dy <= 0.0 or dz <= 0.0:
        return 0.0
    return dx * dy * dz


def iou_3d(a: Cuboid, b: Cuboid) -> float:
    """3D intersection-over-union of two axis-aligned cuboids, in [0, 1]."""
    inter = intersection_volume(a, b)
    if inter == 0.0:
        return 0.0
    union = volume(a) + volume(b) - inter
    return inter / union
