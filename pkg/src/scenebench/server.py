"""Episode server: exposes suites of environments to agent processes.

The service keeps one state machine per episode. Strict mode enforces
the challenge's test matrix (which variations may be played per task
and difficulty) on test-split suites; dev-split suites are always open.
"""

from __future__ import annotations

import json
import socketserver
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import protocol
from .jsonio import canonical_dumps
from .object_map import (
    CLASS_LIST,
    CLASS_LIST_VERSION,
    GroundTruthMap,
    InvariantViolation,
    MalformedDocument,
    TaskKind,
    TaskMismatch,
    diff_to_gt_scd,
    parse_map,
)
from .omq import EvalReport, evaluate
from .scene import Scene, load_scene
from .simworld import (
    ACTIVE,
    LOC_DR,
    LOC_GT,
    PASSIVE,
    ActionNotAllowed,
    DetectionNoise,
    EpisodeComplete,
    NoiseModel,
    World,
)

DIFFICULTIES = ("passive_gt", "active_gt", "active_dr")

# test matrix: which variations of the test bases each cell may use
TEST_MATRIX: dict[tuple[str, str], frozenset[int]] = {
    ("semantic_slam", "passive_gt"): frozenset({1, 3}),
    ("semantic_slam", "active_gt"): frozenset({2, 4}),
    ("semantic_slam", "active_dr"): frozenset({4, 5}),
    ("scd", "passive_gt"): frozenset({1, 2, 3}),
    ("scd", "active_gt"): frozenset({2, 3, 5}),
    ("scd", "active_dr"): frozenset({1, 4, 5}),
}

NIGHT_DETECTION_FACTOR = 1.5


class RequestError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _difficulty_modes(difficulty: str) -> tuple[str, str]:
    if difficulty == "passive_gt":
        return PASSIVE, LOC_GT
    if difficulty == "active_gt":
        return ACTIVE, LOC_GT
    if difficulty == "active_dr":
        return ACTIVE, LOC_DR
    raise RequestError(protocol.BAD_REQUEST, f"unknown difficulty {difficulty!r}")


def _allowed_actions(task: str, difficulty: str) -> list[str]:
    actions = ["move_next"] if difficulty == "passive_gt" else ["move_distance", "rotate"]
    if task == "scd":
        actions.append("advance_scene")
    return actions


@dataclass
class Episode:
    episode_id: str
    task: str
    difficulty: str
    env_names: tuple[str, ...]
    worlds: list[World]
    split: str
    seed: int
    active_world: int = 0
    scene_advanced: bool = False
    closed: bool = False
    report: EvalReport | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def world(self) -> World:
        return self.worlds[self.active_world]

    def descriptor(self) -> dict:
        return {
            "version": 1,
            "task": self.task,
            "difficulty": self.difficulty,
            "environments": list(self.env_names),
            "actions": _allowed_actions(self.task, self.difficulty),
            "mode": "dev" if self.split == "dev" else "test",
            "class_list": list(CLASS_LIST),
            "class_list_version": CLASS_LIST_VERSION,
            "trajectory_length": len(self.worlds[0].scene.trajectory),
        }


class ChallengeService:
    """Request dispatch and episode bookkeeping, transport-agnostic."""

    def __init__(
        self,
        scenes: dict[str, Scene],
        splits: dict[str, str],
        strict: bool = True,
        seed: int = 0,
        motion_noise: NoiseModel | None = None,
        detection_noise: DetectionNoise | None = None,
    ):
        self.scenes = dict(scenes)
        self.splits = dict(splits)  # base name -> "dev" | "test"
        self.strict = strict
        self.seed = seed
        self.motion_noise = motion_noise if motion_noise is not None else NoiseModel.default_drift()
        self.detection_noise = (
            detection_noise if detection_noise is not None else DetectionNoise.default()
        )
        self.episodes: dict[str, Episode] = {}
        self.reports: dict[str, dict] = {}
        self.eval_reports: dict[str, EvalReport] = {}
        self._counter = 0
        self._registry_lock = threading.Lock()

    @classmethod
    def from_manifest(cls, manifest_path: str | Path, **kwargs) -> "ChallengeService":
        manifest_path = Path(manifest_path)
        data = json.loads(manifest_path.read_text())
        if data.get("kind") != "suite_manifest" or data.get("version") != 1:
            raise ValueError(f"{manifest_path} is not a version-1 suite manifest")
        scenes: dict[str, Scene] = {}
        splits: dict[str, str] = {}
        for suite in data["suites"]:
            splits[suite["base"]] = suite["split"]
            for rel in suite["variations"].values():
                scene = load_scene(manifest_path.parent / rel)
                scenes[scene.name] = scene
        return cls(scenes, splits, **kwargs)

    # -- request handling --------------------------------------------------

    def handle(self, request: dict) -> dict:
        try:
            if not isinstance(request, dict):
                raise RequestError(protocol.BAD_REQUEST, "request must be an object")
            if request.get("version") != protocol.PROTOCOL_VERSION:
                raise RequestError(
                    protocol.BAD_REQUEST,
                    f"unsupported protocol version {request.get('version')!r}",
                )
            op = request.get("op")
            handler = {
                "list_environments": self._op_list_environments,
                "task_info": self._op_task_info,
                "start_episode": self._op_start_episode,
                "step": self._op_step,
                "submit": self._op_submit,
            }.get(op)
            if handler is None:
                raise RequestError(protocol.BAD_REQUEST, f"unknown op {op!r}")
            return handler(request)
        except RequestError as exc:
            return protocol.error_response(exc.code, str(exc))
        except (MalformedDocument, json.JSONDecodeError) as exc:
            return protocol.error_response(protocol.MALFORMED_DOCUMENT, str(exc))
        except InvariantViolation as exc:
            return protocol.error_response(protocol.INVARIANT_VIOLATION, str(exc))
        except TaskMismatch as exc:
            return protocol.error_response(protocol.TASK_MISMATCH, str(exc))
        except ActionNotAllowed as exc:
            return protocol.error_response(protocol.ACTION_NOT_ALLOWED, str(exc))

    def _op_list_environments(self, request: dict) -> dict:
        rows = [
            {
                "name": scene.name,
                "base": scene.base,
                "variation": scene.variation,
                "tag": scene.tag,
                "split": self.splits.get(scene.base, "dev"),
                "objects": len(scene.objects),
                "trajectory_length": len(scene.trajectory),
            }
            for scene in self.scenes.values()
        ]
        rows.sort(key=lambda r: r["name"])
        return protocol.ok_response(environments=rows)

    def _episode(self, request: dict) -> Episode:
        eid = request.get("episode")
        ep = self.episodes.get(eid)
        if ep is None:
            raise RequestError(protocol.UNKNOWN_EPISODE, f"unknown episode {eid!r}")
        return ep

    def _op_task_info(self, request: dict) -> dict:
        ep = self._episode(request)
        return protocol.ok_response(episode=ep.episode_id, descriptor=ep.descriptor())

    def _validate_matrix(self, task: str, difficulty: str, scenes: list[Scene]) -> str:
        bases = {s.base for s in scenes}
        if len(bases) != 1:
            raise RequestError(
                protocol.BAD_REQUEST, "an episode must use variations of a single base"
            )
        split = self.splits.get(scenes[0].base, "dev")
        if split == "test" and self.strict:
            allowed = TEST_MATRIX[(task, difficulty)]
            for s in scenes:
                if s.variation not in allowed:
                    raise RequestError(
                        protocol.MATRIX_VIOLATION,
                        f"{s.name} is not in the test matrix for "
                        f"{task}/{difficulty} (allowed variations: {sorted(allowed)})",
                    )
        return split

    def _op_start_episode(self, request: dict) -> dict:
        task = request.get("task")
        if task not in (TaskKind.SEMANTIC_SLAM.value, TaskKind.SCD.value):
            raise RequestError(protocol.BAD_REQUEST, f"unknown task {task!r}")
        difficulty = request.get("difficulty")
        if difficulty not in DIFFICULTIES:
            raise RequestError(protocol.BAD_REQUEST, f"unknown difficulty {difficulty!r}")

        if task == "scd":
            names = request.get("environments")
            if not isinstance(names, list) or len(names) != 2 or names[0] == names[1]:
                raise RequestError(
                    protocol.BAD_REQUEST, "SCD episodes need two distinct environments"
                )
        else:
            name = request.get("environment")
            if not isinstance(name, str):
                raise RequestError(protocol.BAD_REQUEST, "missing environment")
            names = [name]
        scenes = []
        for name in names:
            scene = self.scenes.get(name)
            if scene is None:
                raise RequestError(protocol.UNKNOWN_ENVIRONMENT, f"unknown environment {name!r}")
            scenes.append(scene)
        split = self._validate_matrix(task, difficulty, scenes)

        control, localization = _difficulty_modes(difficulty)
        with self._registry_lock:
            self._counter += 1
            episode_id = f"ep-{self._counter:06d}"
        seed = request.get("seed")
        if seed is None:
            seed = int(
                np.random.SeedSequence([self.seed, self._counter]).generate_state(1)[0]
            )
        worlds = []
        for offset, scene in enumerate(scenes):
            det = self.detection_noise
            if scene.tag == "night":
                det = det.scaled(NIGHT_DETECTION_FACTOR)
            world = World(
                scene,
                control=control,
                localization=localization,
                seed=seed + offset,
                motion_noise=self.motion_noise,
                detection_noise=det,
            )
            world.scene_index = offset + 1
            worlds.append(world)
        ep = Episode(
            episode_id=episode_id,
            task=task,
            difficulty=difficulty,
            env_names=tuple(names),
            worlds=worlds,
            split=split,
            seed=int(seed),
        )
        self.episodes[episode_id] = ep
        return protocol.ok_response(
            episode=episode_id,
            descriptor=ep.descriptor(),
            observation=ep.world.observe().to_payload(),
        )

    def _op_step(self, request: dict) -> dict:
        ep = self._episode(request)
        with ep.lock:
            if ep.closed:
                raise RequestError(protocol.EPISODE_CLOSED, "episode already submitted")
            action = request.get("action")
            if not isinstance(action, dict):
                raise RequestError(protocol.BAD_REQUEST, "missing action")
            kind = action.get("kind")
            allowed = _allowed_actions(ep.task, ep.difficulty)
            if kind not in allowed:
                raise ActionNotAllowed(
                    f"action {kind!r} not available (allowed: {', '.join(allowed)})"
                )
            if kind == "advance_scene":
                if ep.scene_advanced:
                    raise ActionNotAllowed("advance_scene may be used only once")
                ep.scene_advanced = True
                ep.active_world = 1
                return protocol.ok_response(observation=ep.world.observe().to_payload())
            try:
                if kind == "move_next":
                    obs = ep.world.move_next()
                elif kind == "move_distance":
                    obs = ep.world.move_distance(_magnitude(action))
                else:
                    obs = ep.world.rotate(_magnitude(action))
            except EpisodeComplete:
                return protocol.ok_response(episode_complete=True)
            except ValueError as exc:
                raise RequestError(protocol.BAD_REQUEST, str(exc)) from None
            return protocol.ok_response(observation=obs.to_payload())

    def _ground_truth(self, ep: Episode) -> GroundTruthMap:
        if ep.task == "scd":
            return diff_to_gt_scd(
                ep.worlds[0].scene.to_gt_map(), ep.worlds[1].scene.to_gt_map()
            )
        return ep.worlds[0].scene.to_gt_map()

    def _op_submit(self, request: dict) -> dict:
        ep = self._episode(request)
        with ep.lock:
            if ep.closed:
                raise RequestError(protocol.EPISODE_CLOSED, "episode already submitted")
            raw_map = request.get("map")
            if not isinstance(raw_map, dict):
                raise RequestError(protocol.BAD_REQUEST, "missing map document")
            proposed = parse_map(canonical_dumps(raw_map), TaskKind(ep.task))
            report = evaluate(proposed, self._ground_truth(ep))
            ep.closed = True
            ep.report = report
            report_id = f"{ep.episode_id}-report"
            payload = report.to_payload()
            self.reports[report_id] = payload
            self.eval_reports[report_id] = report
            if ep.split == "dev":
                return protocol.ok_response(report_id=report_id, report=payload)
            return protocol.ok_response(report_id=report_id)


def _magnitude(action: dict) -> float:
    mag = action.get("magnitude")
    if not isinstance(mag, (int, float)):
        raise RequestError(protocol.BAD_REQUEST, "action needs a numeric magnitude")
    return float(mag)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock = self.request
        while True:
            try:
                request = protocol.recv_message(sock)
            except protocol.ProtocolError as exc:
                try:
                    protocol.send_message(
                        sock, protocol.error_response(protocol.PROTOCOL_ERROR, str(exc))
                    )
                except OSError:
                    pass
                return
            if request is None:
                return
            response = self.server.service.handle(request)
            try:
                protocol.send_message(sock, response)
            except OSError:
                return


class ChallengeServer(socketserver.ThreadingTCPServer):
    """TCP transport for a ChallengeService."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service: ChallengeService, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.service = service

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread
