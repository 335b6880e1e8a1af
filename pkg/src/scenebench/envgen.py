"""Procedural environment generation: floor plans, objects, variations,
and passive trajectories.

Variation structure: each class's suite total splits into a *core* set
(placed once, present in every variation, same pose and instance id)
plus exclusive instances, each owned by exactly one variation. With
per-variation exclusive counts kept within [4, 13], any two variations
differ by their combined exclusive counts, which lands inside the
required 8..27 change window, while the five variations still sum to
the configured per-class totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Cuboid, Vec3
from .jsonio import canonical_bytes
from .object_map import CLASS_LIST
from .scene import Pose, Scene, SceneObject, save_scene
from .simworld import segment_clearance

ROBOT_RADIUS = 0.25
DOOR_WIDTH = 1.0
CELL = 0.5  # trajectory / coverage grid pitch
SENSING_RANGE = 8.0

MIN_EXCLUSIVE, MAX_EXCLUSIVE = 4, 13  # per-variation, so pair diffs stay in [8, 26]


class PlacementInfeasible(Exception):
    """Object counts cannot be placed in the requested floor plan."""


class ChangeBudgetInfeasible(Exception):
    """Counts cannot satisfy the 8..27 pairwise change window."""


class CoverageInfeasible(Exception):
    """No trajectory of the requested length covers enough free space."""


@dataclass(frozen=True)
class EnvSpec:
    """Recipe for one base environment and its five variations.

    ``class_counts`` are totals across all five variations, mirroring how
    the challenge reports instance distributions per environment set.
    """

    name: str
    size_class: str  # small | medium | large
    bounds: tuple[float, float]
    rooms: int
    class_counts: dict[str, int]
    seed: int = 0

    def __post_init__(self):
        if self.size_class not in ("small", "medium", "large"):
            raise ValueError(f"unknown size class {self.size_class!r}")
        for name, count in self.class_counts.items():
            if name not in CLASS_LIST:
                raise ValueError(f"unknown class {name!r}")
            if count < 0:
                raise ValueError(f"negative count for {name!r}")


@dataclass(frozen=True)
class VariationSpec:
    base_seed: int
    index: int  # 1..5
    exclusive_count: int
    night: bool

    def __post_init__(self):
        if not 1 <= self.index <= 5:
            raise ValueError("variation index must be 1..5")
        if not MIN_EXCLUSIVE <= self.exclusive_count <= MAX_EXCLUSIVE:
            raise ValueError(
                f"exclusive count {self.exclusive_count} outside "
                f"[{MIN_EXCLUSIVE}, {MAX_EXCLUSIVE}]; pairwise changes would "
                "leave the 8..27 window"
            )


@dataclass(frozen=True)
class PlacedObject:
    instance_id: str
    class_name: str
    cuboid: Cuboid
    obstacle: bool
    group: int  # 0 = core, 1..5 = exclusive to that variation


@dataclass(frozen=True)
class BaseEnvironment:
    spec: EnvSpec
    rooms: tuple[tuple[float, float, float, float], ...]  # (x0, y0, x1, y1)
    walls: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    doors: tuple[tuple[float, float], ...]  # door centre points
    start_pose: Pose
    objects: tuple[PlacedObject, ...]
    exclusive_counts: tuple[int, int, int, int, int]

    def objects_for_variation(self, index: int) -> tuple[PlacedObject, ...]:
        return tuple(o for o in self.objects if o.group in (0, index))


# -- class catalogue ---------------------------------------------------------

# extent ranges (m): ((ex_lo, ex_hi), (ey_lo, ey_hi), (ez_lo, ez_hi))
# kind: "floor" stands on the ground as an obstacle; "surface" sits on a
# host object (or the floor as a non-obstacle when no host exists)
_CAT = {
    "bottle": (((0.07, 0.10), (0.07, 0.10), (0.25, 0.33)), "surface"),
    "cup": (((0.08, 0.12), (0.08, 0.12), (0.09, 0.13)), "surface"),
    "bowl": (((0.12, 0.20), (0.12, 0.20), (0.06, 0.10)), "surface"),
    "spoon": (((0.03, 0.04), (0.15, 0.20), (0.02, 0.03)), "surface"),
    "banana": (((0.04, 0.06), (0.15, 0.20), (0.04, 0.05)), "surface"),
    "apple": (((0.07, 0.09), (0.07, 0.09), (0.07, 0.09)), "surface"),
    "orange": (((0.07, 0.09), (0.07, 0.09), (0.07, 0.09)), "surface"),
    "cake": (((0.20, 0.30), (0.20, 0.30), (0.10, 0.15)), "surface"),
    "plant": (((0.30, 0.50), (0.30, 0.50), (0.80, 1.60)), "floor"),
    "mouse": (((0.06, 0.07), (0.10, 0.12), (0.03, 0.04)), "surface"),
    "keyboard": (((0.35, 0.45), (0.12, 0.15), (0.03, 0.04)), "surface"),
    "laptop": (((0.30, 0.35), (0.22, 0.25), (0.02, 0.03)), "surface"),
    "book": (((0.13, 0.20), (0.20, 0.25), (0.03, 0.06)), "surface"),
    "clock": (((0.25, 0.35), (0.06, 0.10), (0.25, 0.35)), "surface"),
    "chair": (((0.45, 0.55), (0.45, 0.55), (0.85, 1.00)), "floor"),
    "table": (((1.20, 1.80), (0.70, 0.90), (0.72, 0.78)), "floor"),
    "couch": (((1.60, 2.20), (0.80, 0.95), (0.75, 0.90)), "floor"),
    "bed": (((1.90, 2.10), (1.40, 1.80), (0.50, 0.60)), "floor"),
    "toilet": (((0.40, 0.50), (0.60, 0.70), (0.75, 0.85)), "floor"),
    "tv": (((1.00, 1.30), (0.15, 0.20), (0.60, 0.75)), "floor"),
    "microwave": (((0.45, 0.55), (0.35, 0.40), (0.28, 0.33)), "surface"),
    "toaster": (((0.25, 0.30), (0.18, 0.22), (0.18, 0.22)), "surface"),
    "fridge": (((0.60, 0.75), (0.65, 0.80), (1.60, 1.90)), "floor"),
    "sink": (((0.50, 0.60), (0.45, 0.55), (0.85, 0.95)), "floor"),
    "person": (((0.45, 0.55), (0.30, 0.40), (1.60, 1.85)), "floor"),
}
_HOST_CLASSES = ("table", "bed", "couch")


def class_kind(name: str) -> str:
    return _CAT[name][1]


# -- count decomposition ------------------------------------------------------


def decompose_counts(class_counts: dict[str, int]) -> tuple[dict[str, int], dict[str, int]]:
    """Split suite totals into per-variation core counts and exclusive totals.

    Every class keeps ``total mod 5`` exclusives; whole cores of five are
    demoted to exclusives (largest classes first) until at least 20
    exclusive instances exist, when possible. Exclusive totals above 65
    cannot fit five variations of at most 13 and are reported by
    ``plan_variation_sizes``.
    """
    core = {k: v // 5 for k, v in class_counts.items() if v >= 5}
    exclusive = {k: v % 5 for k, v in class_counts.items() if v % 5}
    total_exclusive = sum(exclusive.values())
    demotable = sorted(core, key=lambda k: (-core[k], CLASS_LIST.index(k)))
    while total_exclusive < 5 * MIN_EXCLUSIVE and demotable:
        k = demotable[0]
        core[k] -= 1
        exclusive[k] = exclusive.get(k, 0) + 5
        total_exclusive += 5
        if core[k] == 0:
            del core[k]
        demotable = sorted(core, key=lambda k: (-core[k], CLASS_LIST.index(k)))
    return core, exclusive


def plan_variation_sizes(total_exclusive: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Per-variation exclusive counts summing to the total, each in [4, 13]."""
    lo, hi = 5 * MIN_EXCLUSIVE, 5 * MAX_EXCLUSIVE
    if not lo <= total_exclusive <= hi:
        raise ChangeBudgetInfeasible(
            f"{total_exclusive} exclusive instances cannot be split into five "
            f"variations of {MIN_EXCLUSIVE}..{MAX_EXCLUSIVE}; adjust class counts"
        )
    base, rem = divmod(total_exclusive, 5)
    sizes = [base + (1 if i < rem else 0) for i in range(5)]
    order = rng.permutation(5)
    return tuple(sizes[int(o)] for o in order)


# -- floor plans ---------------------------------------------------------------


def _split_rooms(rng: np.random.Generator, bounds, n_rooms, min_size=2.6):
    rooms = [(0.0, 0.0, float(bounds[0]), float(bounds[1]))]
    while len(rooms) < n_rooms:
        # split the largest room that still has space for two halves
        areas = [(-(r[2] - r[0]) * (r[3] - r[1]), i) for i, r in enumerate(rooms)]
        areas.sort()
        split_done = False
        for _, i in areas:
            x0, y0, x1, y1 = rooms[i]
            w, h = x1 - x0, y1 - y0
            horizontal = w >= h  # split across the longer side
            span = w if horizontal else h
            if span < 2 * min_size:
                continue
            at = float(rng.uniform(min_size, span - min_size))
            if horizontal:
                a = (x0, y0, x0 + at, y1)
                b = (x0 + at, y0, x1, y1)
            else:
                a = (x0, y0, x1, y0 + at)
                b = (x0, y0 + at, x1, y1)
            rooms[i : i + 1] = [a, b]
            split_done = True
            break
        if not split_done:
            break
    return rooms


def _shared_edges(rooms):
    """(i, j, axis, position, lo, hi) for each pair of touching rooms."""
    edges = []
    for i in range(len(rooms)):
        for j in range(i + 1, len(rooms)):
            a, b = rooms[i], rooms[j]
            # vertical shared edge: a's right side against b's left (or reverse)
            for pos, lo, hi, axis in (
                (a[2], max(a[1], b[1]), min(a[3], b[3]), "v") if abs(a[2] - b[0]) < 1e-9 else (None,) * 4,
                (b[2], max(a[1], b[1]), min(a[3], b[3]), "v") if abs(b[2] - a[0]) < 1e-9 else (None,) * 4,
                (a[3], max(a[0], b[0]), min(a[2], b[2]), "h") if abs(a[3] - b[1]) < 1e-9 else (None,) * 4,
                (b[3], max(a[0], b[0]), min(a[2], b[2]), "h") if abs(b[3] - a[1]) < 1e-9 else (None,) * 4,
            ):
                if pos is not None and hi - lo > 1e-9:
                    edges.append((i, j, axis, pos, lo, hi))
    return edges


def _build_walls(rng, bounds, rooms):
    """Outer boundary plus internal walls with door gaps on a spanning tree."""
    W, H = bounds
    walls = [
        ((0.0, 0.0), (W, 0.0)),
        ((W, 0.0), (W, H)),
        ((W, H), (0.0, H)),
        ((0.0, H), (0.0, 0.0)),
    ]
    doors = []
    edges = _shared_edges(rooms)
    doorable = [e for e in edges if e[5] - e[4] >= DOOR_WIDTH + 0.6]

    # spanning tree over doorable adjacency; every room must be attached
    parent = list(range(len(rooms)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = set()
    for idx, (i, j, *_rest) in enumerate(doorable):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.add(idx)
    if len({find(i) for i in range(len(rooms))}) > 1:
        raise PlacementInfeasible("floor plan has rooms that cannot be connected by doors")

    for idx, (i, j, axis, pos, lo, hi) in enumerate(edges):
        has_door = False
        if (i, j, axis, pos, lo, hi) in doorable and (
            doorable.index((i, j, axis, pos, lo, hi)) in tree or rng.uniform() < 0.3
        ):
            has_door = True
        if not has_door:
            seg = ((pos, lo), (pos, hi)) if axis == "v" else ((lo, pos), (hi, pos))
            walls.append(seg)
            continue
        margin = DOOR_WIDTH / 2 + 0.25
        centre = float(rng.uniform(lo + margin, hi - margin))
        a, b = centre - DOOR_WIDTH / 2, centre + DOOR_WIDTH / 2
        if axis == "v":
            walls.extend([((pos, lo), (pos, a)), ((pos, b), (pos, hi))])
            doors.append((pos, centre))
        else:
            walls.extend([((lo, pos), (a, pos)), ((b, pos), (hi, pos))])
            doors.append((centre, pos))
    return tuple(walls), tuple(doors)


# -- object placement ----------------------------------------------------------


def _rects_overlap(r1, r2, gap=0.0):
    return not (
        r1[2] + gap <= r2[0]
        or r2[2] + gap <= r1[0]
        or r1[3] + gap <= r2[1]
        or r2[3] + gap <= r1[1]
    )


class _Placer:
    def __init__(self, rng, rooms, doors, start_xy):
        self.rng = rng
        self.rooms = rooms
        self.doors = doors
        self.start_xy = start_xy
        self.footprints: list[tuple[float, float, float, float, int]] = []  # rect + group

    def _door_blocked(self, rect):
        for dx, dy in self.doors:
            zone = (dx - 0.9, dy - 0.9, dx + 0.9, dy + 0.9)
            if _rects_overlap(rect, zone):
                return True
        return False

    def place_floor(self, ex, ey, group) -> tuple[float, float] | None:
        room_order = self.rng.permutation(len(self.rooms))
        for ri in room_order:
            x0, y0, x1, y1 = self.rooms[int(ri)]
            margin = 0.06
            if x1 - x0 < ex + 2 * margin or y1 - y0 < ey + 2 * margin:
                continue
            for _ in range(60):
                cx = float(self.rng.uniform(x0 + margin + ex / 2, x1 - margin - ex / 2))
                cy = float(self.rng.uniform(y0 + margin + ey / 2, y1 - margin - ey / 2))
                rect = (cx - ex / 2, cy - ey / 2, cx + ex / 2, cy + ey / 2)
                if self._door_blocked(rect):
                    continue
                if math.hypot(cx - self.start_xy[0], cy - self.start_xy[1]) < 0.9 + max(ex, ey) / 2:
                    continue
                if any(
                    _rects_overlap(rect, fp[:4], gap=0.03)
                    for fp in self.footprints
                    if fp[4] == 0 or group == 0 or fp[4] == group
                ):
                    continue
                self.footprints.append((*rect, group))
                return cx, cy
        return None


def _draw_extent(rng, class_name):
    (xr, yr, zr), _ = _CAT[class_name]
    return (
        float(rng.uniform(*xr)),
        float(rng.uniform(*yr)),
        float(rng.uniform(*zr)),
    )


def generate_base(spec: EnvSpec) -> BaseEnvironment:
    """Floor plan plus all object instances (core and exclusives) for a base.

    Deterministic per spec seed. Raises PlacementInfeasible when the
    counts cannot fit after bounded retries.
    """
    last_error = None
    seq = np.random.SeedSequence(spec.seed)
    for attempt_seq in seq.spawn(8):
        rng = np.random.Generator(np.random.PCG64(attempt_seq))
        try:
            return _generate_base_once(spec, rng)
        except PlacementInfeasible as exc:
            last_error = exc
    raise PlacementInfeasible(f"{spec.name}: {last_error}")


def _generate_base_once(spec: EnvSpec, rng: np.random.Generator) -> BaseEnvironment:
    rooms = _split_rooms(rng, spec.bounds, spec.rooms)
    walls, doors = _build_walls(rng, spec.bounds, rooms)

    # start pose: centre of the largest room, snapped to the coverage grid
    big = max(rooms, key=lambda r: (r[2] - r[0]) * (r[3] - r[1]))
    sx = (math.floor((big[0] + big[2]) / 2 / CELL) + 0.5) * CELL
    sy = (math.floor((big[1] + big[3]) / 2 / CELL) + 0.5) * CELL
    start = Pose(sx, sy, 0.0)

    core, exclusive = decompose_counts(spec.class_counts)
    total_exclusive = sum(exclusive.values())
    if total_exclusive and 5 * MIN_EXCLUSIVE <= total_exclusive <= 5 * MAX_EXCLUSIVE:
        sizes = plan_variation_sizes(total_exclusive, rng)
    else:
        sizes = (0, 0, 0, 0, 0)  # generate_variations will reject if nonzero

    # ownership of each exclusive instance, deterministic per seed
    exclusive_units: list[str] = []
    for name in CLASS_LIST:
        exclusive_units.extend([name] * exclusive.get(name, 0))
    order = rng.permutation(len(exclusive_units))
    owners = np.zeros(len(exclusive_units), dtype=int)
    cursor = 0
    for var_index, size in enumerate(sizes, start=1):
        for k in range(size):
            owners[order[cursor]] = var_index
            cursor += 1

    # build work list: (class, group); floor classes first, big before small
    work: list[tuple[str, int]] = []
    for name in CLASS_LIST:
        work.extend([(name, 0)] * core.get(name, 0))
    for unit, owner in zip(exclusive_units, owners):
        work.append((unit, int(owner)))

    def sort_key(item):
        name, _ = item
        (xr, yr, _), kind = _CAT[name]
        return (0 if kind == "floor" else 1, -(xr[1] * yr[1]))

    work.sort(key=sort_key)

    placer = _Placer(rng, rooms, doors, (start.x, start.y))
    counters: dict[str, int] = {}
    placed: list[PlacedObject] = []
    hosts: list[tuple[PlacedObject, list[tuple[float, float, float, float]]]] = []

    for name, group in work:
        counters[name] = counters.get(name, 0) + 1
        iid = f"{spec.name}:{name}:{counters[name]:03d}"
        ex, ey, ez = _draw_extent(rng, name)
        kind = class_kind(name)
        if kind == "floor":
            spot = placer.place_floor(ex, ey, group)
            if spot is None:
                raise PlacementInfeasible(f"no room for {iid}")
            cx, cy = spot
            obj = PlacedObject(iid, name, Cuboid(Vec3(cx, cy, ez / 2), Vec3(ex, ey, ez)), True, group)
            placed.append(obj)
            if name in _HOST_CLASSES:
                hosts.append((obj, []))
        else:
            obj = _place_surface_item(rng, iid, name, (ex, ey, ez), group, hosts, placer)
            if obj is None:
                raise PlacementInfeasible(f"no surface or floor space for {iid}")
            placed.append(obj)

    env = BaseEnvironment(
        spec=spec,
        rooms=tuple(rooms),
        walls=walls,
        doors=doors,
        start_pose=start,
        objects=tuple(placed),
        exclusive_counts=sizes,
    )
    _check_navigable(env)
    return env


def _place_surface_item(rng, iid, name, extent, group, hosts, placer):
    ex, ey, ez = extent
    # the item and its host must coexist in every variation the item is in
    usable = [(h, items) for h, items in hosts if h.group == 0 or h.group == group]
    order = rng.permutation(len(usable)) if usable else []
    for hi in order:
        host, items = usable[int(hi)]
        hx0, hy0, hx1, hy1 = host.cuboid.footprint()
        if hx1 - hx0 < ex + 0.04 or hy1 - hy0 < ey + 0.04:
            continue
        top = host.cuboid.center.z + host.cuboid.extent.z / 2
        for _ in range(40):
            cx = float(rng.uniform(hx0 + ex / 2 + 0.02, hx1 - ex / 2 - 0.02))
            cy = float(rng.uniform(hy0 + ey / 2 + 0.02, hy1 - ey / 2 - 0.02))
            rect = (cx - ex / 2, cy - ey / 2, cx + ex / 2, cy + ey / 2)
            if any(_rects_overlap(rect, other, gap=0.01) for other in items):
                continue
            items.append(rect)
            # 1 mm stand-off keeps stacked cuboids from intersecting the host
            z = top + 0.001 + ez / 2
            return PlacedObject(iid, name, Cuboid(Vec3(cx, cy, z), Vec3(ex, ey, ez)), False, group)
    # no suitable host: place on the floor as a non-obstacle item
    spot = placer.place_floor(ex, ey, group)
    if spot is None:
        return None
    cx, cy = spot
    return PlacedObject(iid, name, Cuboid(Vec3(cx, cy, ez / 2), Vec3(ex, ey, ez)), False, group)


# -- navigability and trajectories ----------------------------------------------


def _grid_free_mask(bounds, segments: np.ndarray, clearance: float):
    W, H = bounds
    nx, ny = int(round(W / CELL)), int(round(H / CELL))
    xs = (np.arange(nx) + 0.5) * CELL
    ys = (np.arange(ny) + 0.5) * CELL
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    dist = segment_clearance(pts, segments)
    return (dist >= clearance).reshape(nx, ny), xs, ys


def _flood(mask: np.ndarray, start_cell):
    from collections import deque

    nx, ny = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    if not (0 <= start_cell[0] < nx and 0 <= start_cell[1] < ny) or not mask[start_cell]:
        return seen
    dq = deque([start_cell])
    seen[start_cell] = True
    while dq:
        i, j = dq.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < nx and 0 <= b < ny and mask[a, b] and not seen[a, b]:
                seen[a, b] = True
                dq.append((a, b))
    return seen


def _segments_for(env: BaseEnvironment, variation: int | None):
    segs = [(p1[0], p1[1], p2[0], p2[1]) for p1, p2 in env.walls]
    for obj in env.objects:
        if not obj.obstacle:
            continue
        if variation is not None and obj.group not in (0, variation):
            continue
        x0, y0, x1, y1 = obj.cuboid.footprint()
        segs.extend([(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)])
    return np.asarray(segs, dtype=float).reshape(-1, 4)


def _check_navigable(env: BaseEnvironment) -> None:
    start_cell = (int(env.start_pose.x / CELL), int(env.start_pose.y / CELL))
    # floor plan alone must be fully connected
    plan_segs = np.asarray(
        [(p1[0], p1[1], p2[0], p2[1]) for p1, p2 in env.walls], dtype=float
    ).reshape(-1, 4)
    mask, _, _ = _grid_free_mask(env.spec.bounds, plan_segs, ROBOT_RADIUS + 0.02)
    reach = _flood(mask, start_cell)
    if mask.sum() == 0 or reach.sum() / mask.sum() < 0.98:
        raise PlacementInfeasible("floor plan free space is not fully connected")
    # each populated variation must stay broadly navigable
    for var in range(1, 6):
        segs = _segments_for(env, var)
        mask, xs, ys = _grid_free_mask(env.spec.bounds, segs, ROBOT_RADIUS + 0.02)
        reach = _flood(mask, start_cell)
        free = int(mask.sum())
        if free == 0 or not mask[start_cell]:
            raise PlacementInfeasible("start pose blocked by placed objects")
        if reach.sum() / free < 0.70:
            raise PlacementInfeasible("objects fragment the free space")
        for room in env.rooms:
            # a room counts as reachable if any of its cells is reachable
            i0, i1 = int(room[0] / CELL), max(int(room[2] / CELL), int(room[0] / CELL) + 1)
            j0, j1 = int(room[1] / CELL), max(int(room[3] / CELL), int(room[1] / CELL) + 1)
            if not reach[i0:i1, j0:j1].any():
                raise PlacementInfeasible("a room became unreachable after placement")


def generate_variations(base: BaseEnvironment, seeds) -> list[Scene]:
    """The five concrete variation scenes of a base environment.

    Variations 3 and 5 carry the night tag. Each scene gets its own
    passive trajectory, seeded from the corresponding entry of ``seeds``.
    """
    seeds = list(seeds)
    if len(seeds) != 5:
        raise ValueError("exactly five variation seeds are required")
    total_exclusive = sum(base.exclusive_counts)
    if not 5 * MIN_EXCLUSIVE <= total_exclusive <= 5 * MAX_EXCLUSIVE:
        raise ChangeBudgetInfeasible(
            f"base has {total_exclusive} exclusive instances; cannot respect the "
            "8..27 pairwise change window"
        )
    scenes = []
    for index in range(1, 6):
        VariationSpec(
            base_seed=base.spec.seed,
            index=index,
            exclusive_count=base.exclusive_counts[index - 1],
            night=index in (3, 5),
        )
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seeds[index - 1])))
        objects = tuple(
            SceneObject(o.instance_id, o.class_name, o.cuboid, o.obstacle)
            for o in base.objects_for_variation(index)
        )
        scene = Scene(
            name=f"{base.spec.name}_{index}",
            base=base.spec.name,
            variation=index,
            tag="night" if index in (3, 5) else "day",
            bounds=base.spec.bounds,
            walls=base.walls,
            objects=objects,
            start_pose=base.start_pose,
            trajectory=(base.start_pose,),
            seed=int(seeds[index - 1]),
        )
        target = _target_length(base.spec.size_class, rng)
        trajectory = generate_trajectory(scene, target, rng=rng)
        scenes.append(
            Scene(
                name=scene.name,
                base=scene.base,
                variation=scene.variation,
                tag=scene.tag,
                bounds=scene.bounds,
                walls=scene.walls,
                objects=scene.objects,
                start_pose=scene.start_pose,
                trajectory=trajectory,
                seed=scene.seed,
            )
        )
    return scenes


def _target_length(size_class: str, rng: np.random.Generator) -> int:
    bands = {"small": (33, 90), "medium": (91, 260), "large": (261, 484)}
    lo, hi = bands[size_class]
    return int(rng.integers(lo, hi + 1))


def generate_trajectory(
    scene: Scene, target_len: int, rng: np.random.Generator | None = None, coverage: float = 0.8
) -> tuple[Pose, ...]:
    """Collision-free pose sequence of exactly ``target_len`` nodes.

    A greedy nearest-unvisited walk over the free-space grid, headings
    following the direction of travel with 180 degree reversals split
    into two 90 degree turns. The walk must leave at least ``coverage``
    of the reachable free cells within sensing range of some node.
    """
    if not 33 <= target_len <= 484:
        raise ValueError("target length must be within [33, 484]")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(scene.seed)))

    segs = np.asarray(scene.obstacle_segments(), dtype=float).reshape(-1, 4)
    mask, xs, ys = _grid_free_mask(scene.bounds, segs, ROBOT_RADIUS + 0.02)
    start_cell = (int(scene.start_pose.x / CELL), int(scene.start_pose.y / CELL))
    reach = _flood(mask, start_cell)
    if not reach.any():
        raise CoverageInfeasible("start pose is not inside free space")

    cells = _coverage_walk(reach, start_cell, max_len=target_len)
    poses = _cells_to_poses(cells, scene.start_pose.theta)

    if len(poses) > target_len:
        poses = poses[:target_len]
    else:
        poses = _pad_with_turns(poses, target_len)

    covered = _covered_fraction(reach, xs, ys, poses)
    if covered < coverage:
        raise CoverageInfeasible(
            f"trajectory of {target_len} nodes covers {covered:.0%} of free space, "
            f"needs {coverage:.0%}"
        )
    return tuple(poses)


def _coverage_walk(reach: np.ndarray, start_cell, max_len: int | None = None):
    """Visit all reachable cells: repeatedly BFS to the nearest unvisited.

    Stops early once the path reaches ``max_len`` cells; the caller
    truncates to an exact node count anyway.
    """
    from collections import deque

    nx, ny = reach.shape
    visited = np.zeros_like(reach, dtype=bool)
    path = [start_cell]
    visited[start_cell] = True
    current = start_cell
    remaining = int(reach.sum()) - 1
    while remaining > 0 and (max_len is None or len(path) < max_len):
        # BFS from current to nearest unvisited reachable cell
        prev = {current: None}
        dq = deque([current])
        goal = None
        while dq:
            cell = dq.popleft()
            if not visited[cell]:
                goal = cell
                break
            i, j = cell
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nxt = (i + di, j + dj)
                if 0 <= nxt[0] < nx and 0 <= nxt[1] < ny and reach[nxt] and nxt not in prev:
                    prev[nxt] = cell
                    dq.append(nxt)
        if goal is None:
            break
        hop = []
        cell = goal
        while cell != current:
            hop.append(cell)
            cell = prev[cell]
        hop.reverse()
        for cell in hop:
            path.append(cell)
            if not visited[cell]:
                visited[cell] = True
                remaining -= 1
        current = goal
    return path


def _cells_to_poses(cells, start_theta):
    poses = [Pose((cells[0][0] + 0.5) * CELL, (cells[0][1] + 0.5) * CELL, start_theta)]
    theta = start_theta
    for prev, cell in zip(cells, cells[1:]):
        dx, dy = cell[0] - prev[0], cell[1] - prev[1]
        heading = math.atan2(dy, dx)
        diff = abs(_angdiff(heading, theta))
        x0, y0 = (prev[0] + 0.5) * CELL, (prev[1] + 0.5) * CELL
        if diff > math.pi / 2 + 1e-9:
            # split the reversal into two 90 degree turns
            mid = theta + math.pi / 2 if _angdiff(heading, theta) > 0 else theta - math.pi / 2
            poses.append(Pose(x0, y0, mid))
            theta = poses[-1].theta
        poses.append(Pose((cell[0] + 0.5) * CELL, (cell[1] + 0.5) * CELL, heading))
        theta = heading
    return poses


def _angdiff(a, b):
    d = math.fmod(a - b, 2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    elif d <= -math.pi:
        d += 2 * math.pi
    return d


def _pad_with_turns(poses, target_len):
    # in-place 90 degree turns keep every step within the distance and
    # turn bounds while stretching the node count to the target
    poses = list(poses)
    while len(poses) < target_len:
        last = poses[-1]
        poses.append(Pose(last.x, last.y, last.theta + math.pi / 2))
    return poses


def _covered_fraction(reach, xs, ys, poses) -> float:
    pts = np.array([[p.x, p.y] for p in poses])
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    reach_flat = reach.ravel()
    if not reach_flat.any():
        return 0.0
    covered = np.zeros(centers.shape[0], dtype=bool)
    for chunk in range(0, len(pts), 64):
        block = pts[chunk : chunk + 64]
        d2 = ((centers[:, None, :] - block[None, :, :]) ** 2).sum(axis=2)
        covered |= (d2 <= SENSING_RANGE**2).any(axis=1)
    return float(covered[reach_flat].sum() / reach_flat.sum())


# -- presets and suites -----------------------------------------------------------

# per-class totals across each base's five variations; the challenge's
# reference instance distribution
CHALLENGE_COUNTS = {
    "miniroom": {
        "bottle": 7, "cup": 3, "bowl": 4, "spoon": 3, "banana": 1, "apple": 4,
        "orange": 3, "plant": 9, "laptop": 1, "book": 13, "clock": 3,
        "chair": 10, "table": 15, "bed": 5, "toaster": 2, "sink": 4, "person": 2,
    },
    "house": {
        "bottle": 15, "cup": 25, "bowl": 42, "orange": 1, "plant": 32, "mouse": 5,
        "keyboard": 5, "laptop": 6, "book": 25, "clock": 4, "chair": 47,
        "table": 21, "couch": 11, "bed": 5, "toilet": 14, "tv": 10,
        "toaster": 2, "fridge": 3, "sink": 5, "person": 2,
    },
    "apartment": {
        "bottle": 14, "cup": 17, "bowl": 7, "banana": 4, "apple": 10, "orange": 1,
        "plant": 29, "laptop": 3, "book": 16, "clock": 5, "chair": 27,
        "table": 25, "couch": 20, "tv": 3, "microwave": 2, "toaster": 4,
        "fridge": 2, "sink": 10, "person": 6,
    },
    "company": {
        "bottle": 1, "cup": 21, "bowl": 12, "apple": 10, "orange": 5, "cake": 3,
        "plant": 47, "mouse": 36, "keyboard": 36, "laptop": 5, "book": 18,
        "clock": 10, "chair": 183, "table": 57, "couch": 5, "tv": 39,
        "fridge": 4, "person": 11,
    },
    "office": {
        "cup": 2, "orange": 3, "plant": 19, "mouse": 40, "keyboard": 40,
        "laptop": 2, "book": 112, "clock": 0, "chair": 86, "table": 20,
        "tv": 39, "fridge": 3,
    },
}

_PRESET_GEOMETRY = {
    "miniroom": ("small", (7.0, 6.0), 1),
    "house": ("large", (16.0, 12.0), 6),
    "apartment": ("medium", (13.0, 10.0), 4),
    "company": ("large", (20.0, 16.0), 7),
    "office": ("medium", (14.0, 11.0), 4),
}

DEV_BASES = ("house", "miniroom")
TEST_BASES = ("apartment", "company", "office")


def preset_spec(base_name: str, seed: int = 0) -> EnvSpec:
    size_class, bounds, rooms = _PRESET_GEOMETRY[base_name]
    counts = {k: v for k, v in CHALLENGE_COUNTS[base_name].items() if v > 0}
    return EnvSpec(
        name=base_name,
        size_class=size_class,
        bounds=bounds,
        rooms=rooms,
        class_counts=counts,
        seed=seed,
    )


def mini_spec(name: str, seed: int = 0) -> EnvSpec:
    """Small fast spec for tests and development suites."""
    counts = {
        "chair": 8, "table": 6, "plant": 7, "book": 9, "cup": 6,
        "bottle": 4, "tv": 2, "laptop": 3, "bowl": 4, "person": 1,
    }
    return EnvSpec(
        name=name,
        size_class="small",
        bounds=(8.0, 7.0),
        rooms=2,
        class_counts=counts,
        seed=seed,
    )


def generate_suite(
    specs: list[EnvSpec],
    out_dir: str | Path,
    seed: int = 0,
    splits: dict[str, str] | None = None,
) -> dict:
    """Generate bases, variations and trajectories; write scene files and a
    manifest into ``out_dir``; return the manifest payload."""
    out = Path(out_dir)
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(seed)
    suites = []
    for spec, spec_seq in zip(specs, root.spawn(len(specs))):
        var_seeds = [int(s.generate_state(1)[0] % (2**31)) for s in spec_seq.spawn(5)]
        base = generate_base(spec)
        scenes = generate_variations(base, var_seeds)
        variations = {}
        for scene in scenes:
            rel = f"scenes/{scene.name}.json"
            save_scene(scene, out / rel)
            variations[str(scene.variation)] = rel
        split = (splits or {}).get(spec.name) or (
            "dev" if spec.name in DEV_BASES else "test" if spec.name in TEST_BASES else "dev"
        )
        suites.append(
            {
                "base": spec.name,
                "split": split,
                "size_class": spec.size_class,
                "variations": variations,
            }
        )
    manifest = {
        "version": 1,
        "kind": "suite_manifest",
        "seed": seed,
        "class_list_version": 1,
        "suites": suites,
    }
    (out / "manifest.json").write_bytes(canonical_bytes(manifest, indent=2))
    return manifest
