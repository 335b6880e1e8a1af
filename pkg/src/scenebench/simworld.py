"""Deterministic synthetic 2.5D robot world.

The robot moves in the plane among wall segments and object footprints;
objects keep full 3D cuboids so mapping is unaffected by the flattened
motion model. Perception is a parametric detection channel plus a flat
planar laser, replacing rendered camera frames.

Motion semantics: commands are executed against the robot's odometry,
so a scale bias makes the true displacement differ from what odometry
reports. Ground-truth difficulty levels report the true pose; the
dead-reckoning level reports the odometry pose only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Cuboid, Vec3
from .object_map import LabelDistribution
from .scene import Pose, Scene, wrap_angle

PASSIVE = "passive"
ACTIVE = "active"
LOC_GT = "gt"
LOC_DR = "dr"

# Passive controller guarantees: hard bounds, not noise distributions.
PASSIVE_POS_BOUND = 0.01  # metres
PASSIVE_ANG_BOUND = math.radians(1.0)

LASER_BEAMS = 900
LASER_STEP = math.radians(0.4)
LASER_MAX_RANGE = 57.29

CAMERA_MOUNT = (0.10, 0.0)  # forward offset of the camera frame, metres


class EpisodeComplete(Exception):
    """Raised by move_next once the trajectory has been fully traversed."""


class ActionNotAllowed(Exception):
    """Raised when an action is not available under the current control mode."""


@dataclass(frozen=True)
class NoiseModel:
    """Odometry/actuation noise. Deterministic given the world seed.

    ``linear_scale_bias`` of 1.1 means a move the odometry reports as
    1 m truly covers 1.1 m. Controller tolerances bound how precisely a
    command is realized on the odometry itself.
    """

    linear_scale_bias: float = 1.0
    angular_scale_bias: float = 1.0
    per_step_linear_sigma: float = 0.0
    per_step_angular_sigma: float = 0.0
    controller_linear_tol: float = 0.0
    controller_angular_tol: float = 0.0

    def __post_init__(self):
        if self.linear_scale_bias <= 0 or self.angular_scale_bias <= 0:
            raise ValueError("scale biases must be positive")
        if min(
            self.per_step_linear_sigma,
            self.per_step_angular_sigma,
            self.controller_linear_tol,
            self.controller_angular_tol,
        ) < 0:
            raise ValueError("noise magnitudes must be non-negative")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls()

    @classmethod
    def default_drift(cls) -> "NoiseModel":
        """Drifty-but-sane preset: a naive dead-reckoning agent accrues
        clearly visible error over a ~100 step episode."""
        return cls(
            linear_scale_bias=1.1,
            angular_scale_bias=1.02,
            per_step_linear_sigma=0.01,
            per_step_angular_sigma=math.radians(0.3),
            controller_linear_tol=0.01,
            controller_angular_tol=math.radians(1.0),
        )


@dataclass(frozen=True)
class DetectionNoise:
    """Synthetic perception noise. Deterministic given the world seed."""

    center_sigma: float = 0.0
    extent_sigma: float = 0.0
    label_correct_mass: float = 1.0
    miss_rate: float = 0.0

    def __post_init__(self):
        if self.center_sigma < 0 or self.extent_sigma < 0:
            raise ValueError("sigmas must be non-negative")
        if not 0.0 <= self.label_correct_mass <= 1.0 or not 0.0 <= self.miss_rate <= 1.0:
            raise ValueError("label_correct_mass and miss_rate must be in [0, 1]")

    @classmethod
    def noiseless(cls) -> "DetectionNoise":
        return cls()

    @classmethod
    def default(cls) -> "DetectionNoise":
        return cls(center_sigma=0.03, extent_sigma=0.02, label_correct_mass=0.85, miss_rate=0.05)

    def scaled(self, factor: float) -> "DetectionNoise":
        """Harder variant (night preset): inflate noise, keep determinism."""
        return DetectionNoise(
            center_sigma=self.center_sigma * factor,
            extent_sigma=self.extent_sigma * factor,
            label_correct_mass=max(0.0, 1.0 - (1.0 - self.label_correct_mass) * factor),
            miss_rate=min(1.0, self.miss_rate * factor),
        )


@dataclass(frozen=True)
class SensorConfig:
    fov_deg: float = 90.0
    detection_range: float = 8.0
    laser_beams: int = LASER_BEAMS
    laser_step_rad: float = LASER_STEP
    laser_max_range: float = LASER_MAX_RANGE


@dataclass(frozen=True)
class RobotState:
    """Snapshot of the robot's kinematic state inside an episode."""

    true_pose: Pose
    odom_pose: Pose
    trajectory_index: int
    collided: bool


@dataclass(frozen=True)
class Detection:
    cuboid: Cuboid
    label: LabelDistribution


@dataclass(frozen=True)
class Observation:
    reported_pose: Pose
    detections: tuple[Detection, ...]
    laser: tuple[float, ...]
    frame_transforms: dict
    collided: bool = False
    scene_index: int = 1
    step: int = 0

    def to_payload(self) -> dict:
        return {
            "reported_pose": self.reported_pose.as_list(),
            "detections": [
                {
                    "cuboid": {
                        "center": list(d.cuboid.center.as_tuple()),
                        "extent": list(d.cuboid.extent.as_tuple()),
                    },
                    "label_probs": {k: float(v) for k, v in sorted(d.label.probs.items())},
                }
                for d in self.detections
            ],
            "laser": [float(r) for r in self.laser],
            "frame_transforms": self.frame_transforms,
            "collided": self.collided,
            "scene_index": self.scene_index,
            "step": self.step,
        }


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def pose_in_frame(p: Pose, frame: Pose) -> list[float]:
    """Express pose ``p`` relative to ``frame`` (x, y, theta)."""
    d = np.array([p.x - frame.x, p.y - frame.y])
    local = _rot(-frame.theta) @ d
    return [float(local[0]), float(local[1]), wrap_angle(p.theta - frame.theta)]


def _segments_array(segments) -> np.ndarray:
    arr = np.asarray(segments, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 4))
    return arr.reshape(-1, 4)


def cast_rays(origin, angles, segments: np.ndarray, max_range: float) -> np.ndarray:
    """Distance to the nearest segment along each ray, capped at max_range."""
    angles = np.asarray(angles, dtype=float)
    if segments.shape[0] == 0:
        return np.full(angles.shape, max_range)
    ox, oy = float(origin[0]), float(origin[1])
    rx = np.cos(angles)[:, None]  # (B, 1)
    ry = np.sin(angles)[:, None]
    ax, ay = segments[:, 0][None, :], segments[:, 1][None, :]  # (1, S)
    sx = (segments[:, 2] - segments[:, 0])[None, :]
    sy = (segments[:, 3] - segments[:, 1])[None, :]
    qx, qy = ax - ox, ay - oy
    denom = rx * sy - ry * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qx * sy - qy * sx) / denom
        u = (qx * ry - qy * rx) / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    nearest = t.min(axis=1)
    return np.minimum(nearest, max_range)


def segment_clearance(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Min distance from each point to any segment; inf with no segments."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if segments.shape[0] == 0:
        return np.full(pts.shape[0], np.inf)
    a = segments[None, :, :2]  # (1, S, 2)
    b = segments[None, :, 2:]
    ab = b - a
    length_sq = np.maximum((ab**2).sum(axis=2), 1e-18)
    ap = pts[:, None, :] - a  # (P, S, 2)
    t = np.clip((ap * ab).sum(axis=2) / length_sq, 0.0, 1.0)
    closest = a + t[..., None] * ab
    d = np.sqrt(((pts[:, None, :] - closest) ** 2).sum(axis=2))
    return d.min(axis=1)


def segments_intersect(p0, p1, segments: np.ndarray) -> np.ndarray:
    """Boolean per segment: does the open segment p0->p1 cross it?"""
    if segments.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    rx, ry = p1[0] - p0[0], p1[1] - p0[1]
    sx = segments[:, 2] - segments[:, 0]
    sy = segments[:, 3] - segments[:, 1]
    qx = segments[:, 0] - p0[0]
    qy = segments[:, 1] - p0[1]
    denom = rx * sy - ry * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qx * sy - qy * sx) / denom
        u = (qx * ry - qy * rx) / denom
    return (np.abs(denom) > 1e-12) & (t > 1e-9) & (t < 1.0 - 1e-9) & (u >= 0.0) & (u <= 1.0)


class World:
    """One episode's world state machine. Strictly sequential per episode."""

    def __init__(
        self,
        scene: Scene,
        control: str = PASSIVE,
        localization: str = LOC_GT,
        seed: int = 0,
        motion_noise: NoiseModel | None = None,
        detection_noise: DetectionNoise | None = None,
        sensors: SensorConfig | None = None,
        robot_radius: float = 0.25,
    ):
        if control not in (PASSIVE, ACTIVE):
            raise ValueError(f"unknown control mode {control!r}")
        if localization not in (LOC_GT, LOC_DR):
            raise ValueError(f"unknown localization mode {localization!r}")
        self.scene = scene
        self.control = control
        self.localization = localization
        self.noise = motion_noise or NoiseModel.noiseless()
        self.det_noise = detection_noise or DetectionNoise.noiseless()
        self.sensors = sensors or SensorConfig()
        self.robot_radius = float(robot_radius)

        seq = np.random.SeedSequence(seed)
        ctrl_seq, true_seq, det_seq = seq.spawn(3)
        self._rng_ctrl = np.random.Generator(np.random.PCG64(ctrl_seq))
        self._rng_true = np.random.Generator(np.random.PCG64(true_seq))
        self._rng_det = np.random.Generator(np.random.PCG64(det_seq))

        start = scene.start_pose
        self.true_pose = start
        self.odom_pose = start
        self.trajectory_index = 0
        self.collided = False
        self.step_count = 0
        self.scene_index = 1  # SCD episodes host two worlds; the server tags them

        self._segments = _segments_array(scene.obstacle_segments())
        # per-segment owner (instance_id) so occlusion tests can skip an
        # object's own footprint, and blocking height so items standing on
        # furniture stay visible over their host's footprint; walls block
        # everything
        owners: list[str | None] = [None] * len(scene.walls)
        block_z: list[float] = [math.inf] * len(scene.walls)
        for obj in scene.objects:
            if obj.obstacle:
                owners.extend([obj.instance_id] * 4)
                top = obj.cuboid.center.z + obj.cuboid.extent.z / 2.0
                block_z.extend([top] * 4)
        self._segment_owner = owners
        self._segment_block_z = block_z

    # -- pose bookkeeping ---------------------------------------------------

    @property
    def reported_pose(self) -> Pose:
        return self.true_pose if self.localization == LOC_GT else self.odom_pose

    @property
    def state(self) -> RobotState:
        return RobotState(self.true_pose, self.odom_pose, self.trajectory_index, self.collided)

    @property
    def traversal_complete(self) -> bool:
        return self.trajectory_index >= len(self.scene.trajectory) - 1

    def clearance(self, x: float, y: float) -> float:
        return float(segment_clearance(np.array([[x, y]]), self._segments)[0])

    # -- actions ------------------------------------------------------------

    def move_next(self) -> Observation:
        """Passive control: advance to the next trajectory node.

        The controller lands within 1 cm / 1 degree of the node, always.
        """
        if self.control != PASSIVE:
            raise ActionNotAllowed("move_next is only available under passive control")
        if self.traversal_complete:
            raise EpisodeComplete("trajectory fully traversed; submit a map to finish")
        self.trajectory_index += 1
        node = self.scene.trajectory[self.trajectory_index]
        radius = PASSIVE_POS_BOUND * float(self._rng_ctrl.uniform(0.0, 1.0))
        bearing = float(self._rng_ctrl.uniform(-math.pi, math.pi))
        dtheta = float(self._rng_ctrl.uniform(-PASSIVE_ANG_BOUND, PASSIVE_ANG_BOUND))
        landed = Pose(
            node.x + radius * math.cos(bearing),
            node.y + radius * math.sin(bearing),
            wrap_angle(node.theta + dtheta),
        )
        self.true_pose = landed
        self.odom_pose = landed
        self.collided = False
        self.step_count += 1
        return self.observe()

    def move_distance(self, d: float) -> Observation:
        """Active control: drive forward until odometry reads ``d`` metres."""
        if self.control != ACTIVE:
            raise ActionNotAllowed("move_distance is only available under active control")
        if not math.isfinite(d) or d < 0:
            raise ValueError(f"move distance must be finite and non-negative, got {d!r}")
        n = self.noise
        odom_d = max(d + float(self._rng_ctrl.uniform(-n.controller_linear_tol, n.controller_linear_tol)), 0.0)
        true_d = odom_d * n.linear_scale_bias + float(
            self._rng_true.normal(0.0, n.per_step_linear_sigma) if n.per_step_linear_sigma > 0 else 0.0
        )
        true_d = max(true_d, 0.0)

        travelled, hit = self._sweep(self.true_pose, true_d)
        self.true_pose = Pose(
            self.true_pose.x + travelled * math.cos(self.true_pose.theta),
            self.true_pose.y + travelled * math.sin(self.true_pose.theta),
            self.true_pose.theta,
        )
        # odometry measures the wheels, which stop with the robot
        odom_travelled = odom_d if not hit else (odom_d * (travelled / true_d) if true_d > 0 else 0.0)
        self.odom_pose = Pose(
            self.odom_pose.x + odom_travelled * math.cos(self.odom_pose.theta),
            self.odom_pose.y + odom_travelled * math.sin(self.odom_pose.theta),
            self.odom_pose.theta,
        )
        self.collided = hit
        self.step_count += 1
        return self.observe()

    def rotate(self, angle_deg: float) -> Observation:
        """Active control: rotate in place by ``angle_deg`` degrees."""
        if self.control != ACTIVE:
            raise ActionNotAllowed("rotate is only available under active control")
        if not math.isfinite(angle_deg):
            raise ValueError("rotation angle must be finite")
        n = self.noise
        commanded = math.radians(angle_deg)
        odom_a = commanded + float(
            self._rng_ctrl.uniform(-n.controller_angular_tol, n.controller_angular_tol)
        )
        true_a = odom_a * n.angular_scale_bias + float(
            self._rng_true.normal(0.0, n.per_step_angular_sigma) if n.per_step_angular_sigma > 0 else 0.0
        )
        self.odom_pose = replace(self.odom_pose, theta=wrap_angle(self.odom_pose.theta + odom_a))
        self.true_pose = replace(self.true_pose, theta=wrap_angle(self.true_pose.theta + true_a))
        self.collided = False
        self.step_count += 1
        return self.observe()

    def _sweep(self, start: Pose, distance: float) -> tuple[float, bool]:
        """Largest collision-free travel along the heading, and a hit flag."""
        if distance <= 0.0:
            return 0.0, False
        if self._segments.shape[0] == 0:
            return distance, False
        heading = np.array([math.cos(start.theta), math.sin(start.theta)])
        origin = np.array([start.x, start.y])
        steps = max(2, int(math.ceil(distance / 0.01)) + 1)
        ts = np.linspace(0.0, distance, steps)
        pts = origin[None, :] + ts[:, None] * heading[None, :]
        clear = segment_clearance(pts, self._segments) >= self.robot_radius
        if bool(clear.all()):
            return distance, False
        first_bad = int(np.argmin(clear))  # first False
        if first_bad == 0:
            return 0.0, True
        lo, hi = float(ts[first_bad - 1]), float(ts[first_bad])
        for _ in range(40):
            mid = (lo + hi) / 2.0
            p = origin + mid * heading
            if segment_clearance(p[None, :], self._segments)[0] >= self.robot_radius:
                lo = mid
            else:
                hi = mid
        return lo, True

    # -- sensing ------------------------------------------------------------

    def observe(self) -> Observation:
        true = self.true_pose
        reported = self.reported_pose

        detections = []
        half_fov = math.radians(self.sensors.fov_deg) / 2.0
        for obj in self.scene.objects:
            c = obj.cuboid.center
            dx, dy = c.x - true.x, c.y - true.y
            planar = math.hypot(dx, dy)
            if planar > self.sensors.detection_range:
                continue
            bearing = wrap_angle(math.atan2(dy, dx) - true.theta)
            if abs(bearing) > half_fov:
                continue
            if self._occluded(true, (c.x, c.y), c.z, obj.instance_id):
                continue
            if self.det_noise.miss_rate > 0.0 and float(self._rng_det.uniform()) < self.det_noise.miss_rate:
                continue
            detections.append(self._make_detection(obj, true, reported))

        angles = true.theta + np.arange(self.sensors.laser_beams) * self.sensors.laser_step_rad
        laser = cast_rays(
            (true.x, true.y), angles, self._segments, self.sensors.laser_max_range
        )

        start = self.scene.start_pose
        base_rel = pose_in_frame(reported, start)
        cam_rel = [
            base_rel[0] + CAMERA_MOUNT[0] * math.cos(base_rel[2]) - CAMERA_MOUNT[1] * math.sin(base_rel[2]),
            base_rel[1] + CAMERA_MOUNT[0] * math.sin(base_rel[2]) + CAMERA_MOUNT[1] * math.cos(base_rel[2]),
            base_rel[2],
        ]
        transforms = {
            "base": base_rel,
            "camera": cam_rel,
            "lidar": list(base_rel),
            "start": start.as_list(),
        }

        return Observation(
            reported_pose=reported,
            detections=tuple(detections),
            laser=tuple(float(r) for r in laser),
            frame_transforms=transforms,
            collided=self.collided,
            scene_index=self.scene_index,
            step=self.step_count,
        )

    def _occluded(self, robot: Pose, target_xy, target_z: float, own_id: str) -> bool:
        hits = segments_intersect((robot.x, robot.y), target_xy, self._segments)
        for idx in np.nonzero(hits)[0]:
            i = int(idx)
            if self._segment_owner[i] == own_id:
                continue
            if self._segment_block_z[i] >= target_z - 1e-9:
                return True
        return False

    def _make_detection(self, obj, true: Pose, reported: Pose) -> Detection:
        dn = self.det_noise
        c = obj.cuboid.center
        e = obj.cuboid.extent
        # offsets the sensor actually measures, in the body frame
        rel = _rot(-true.theta) @ np.array([c.x - true.x, c.y - true.y])
        rel_z = c.z
        if dn.center_sigma > 0.0:
            noise = self._rng_det.normal(0.0, dn.center_sigma, 3)
            rel = rel + noise[:2]
            rel_z += float(noise[2])
        ext = np.array([e.x, e.y, e.z])
        if dn.extent_sigma > 0.0:
            ext = np.maximum(ext + self._rng_det.normal(0.0, dn.extent_sigma, 3), 0.01)
        # re-project into the global frame through the *reported* pose, the
        # same mapping an onboard pipeline would apply
        world_xy = np.array([reported.x, reported.y]) + _rot(reported.theta) @ rel
        cuboid = Cuboid(
            Vec3(float(world_xy[0]), float(world_xy[1]), float(rel_z)),
            Vec3(float(ext[0]), float(ext[1]), float(ext[2])),
        )
        mass = dn.label_correct_mass
        label = LabelDistribution({obj.class_name: mass} if mass > 0 else {})
        return Detection(cuboid=cuboid, label=label)
