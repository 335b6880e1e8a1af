"""Episode session: connect, read the task descriptor, act, submit."""

from __future__ import annotations

from dataclasses import dataclass

from .mapdoc import MapBuilder
from .transport import Transport


@dataclass(frozen=True)
class TaskDescriptor:
    task: str
    difficulty: str
    environments: tuple[str, ...]
    actions: tuple[str, ...]
    mode: str
    class_list: tuple[str, ...]
    trajectory_length: int

    @classmethod
    def from_payload(cls, data: dict) -> "TaskDescriptor":
        return cls(
            task=data["task"],
            difficulty=data["difficulty"],
            environments=tuple(data["environments"]),
            actions=tuple(data["actions"]),
            mode=data["mode"],
            class_list=tuple(data["class_list"]),
            trajectory_length=int(data["trajectory_length"]),
        )


@dataclass(frozen=True)
class Observation:
    reported_pose: tuple[float, float, float]
    detections: tuple[dict, ...]
    laser: tuple[float, ...]
    frame_transforms: dict
    collided: bool
    scene_index: int
    step: int

    @classmethod
    def from_payload(cls, data: dict) -> "Observation":
        return cls(
            reported_pose=tuple(data["reported_pose"]),
            detections=tuple(data["detections"]),
            laser=tuple(data["laser"]),
            frame_transforms=data["frame_transforms"],
            collided=bool(data["collided"]),
            scene_index=int(data["scene_index"]),
            step=int(data["step"]),
        )


@dataclass(frozen=True)
class StepResult:
    observation: Observation | None
    episode_complete: bool


@dataclass(frozen=True)
class SubmitResult:
    report_id: str
    report: dict | None  # populated on dev-split episodes only


def list_environments(host: str, port: int) -> list[dict]:
    with Transport(host, port) as t:
        return t.request("list_environments")["environments"]


class ClientSession:
    """One live episode per session; use as a context manager."""

    def __init__(self, transport: Transport, episode_id: str, descriptor: TaskDescriptor,
                 initial_observation: Observation):
        self._transport = transport
        self.episode_id = episode_id
        self.descriptor = descriptor
        self.initial_observation = initial_observation
        self.last_observation = initial_observation

    @classmethod
    def connect(
        cls,
        host: str,
        port: int,
        task: str,
        difficulty: str,
        environments,
        seed: int | None = None,
        timeout: float = 120.0,
    ) -> "ClientSession":
        if isinstance(environments, str):
            environments = [environments]
        transport = Transport(host, port, timeout=timeout)
        try:
            fields: dict = {"task": task, "difficulty": difficulty}
            if task == "scd":
                fields["environments"] = list(environments)
            else:
                fields["environment"] = environments[0]
            if seed is not None:
                fields["seed"] = seed
            reply = transport.request("start_episode", **fields)
        except BaseException:
            transport.close()
            raise
        return cls(
            transport,
            reply["episode"],
            TaskDescriptor.from_payload(reply["descriptor"]),
            Observation.from_payload(reply["observation"]),
        )

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- actions -------------------------------------------------------------

    def act(self, kind: str, magnitude: float | None = None) -> StepResult:
        action: dict = {"kind": kind}
        if magnitude is not None:
            action["magnitude"] = float(magnitude)
        reply = self._transport.request("step", episode=self.episode_id, action=action)
        if reply.get("episode_complete"):
            return StepResult(observation=None, episode_complete=True)
        obs = Observation.from_payload(reply["observation"])
        self.last_observation = obs
        return StepResult(observation=obs, episode_complete=False)

    def move_next(self) -> StepResult:
        return self.act("move_next")

    def move(self, distance: float) -> StepResult:
        return self.act("move_distance", distance)

    def rotate(self, degrees: float) -> StepResult:
        return self.act("rotate", degrees)

    def advance_scene(self) -> StepResult:
        return self.act("advance_scene")

    def task_info(self) -> TaskDescriptor:
        reply = self._transport.request("task_info", episode=self.episode_id)
        return TaskDescriptor.from_payload(reply["descriptor"])

    def submit(self, document: MapBuilder | dict) -> SubmitResult:
        payload = document.payload() if isinstance(document, MapBuilder) else document
        reply = self._transport.request("submit", episode=self.episode_id, map=payload)
        return SubmitResult(report_id=reply["report_id"], report=reply.get("report"))
