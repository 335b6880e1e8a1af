"""Reference agents and the thin socket client they use.

The oracle and null agents ship as conformance fixtures: the null agent
bounds the floor (empty map, score 0), the oracle reads scene ground
truth from disk and submits a perfect one-hot map (score 1 regardless
of sensor noise), after exercising a few protocol steps.
"""

from __future__ import annotations

import socket

from . import protocol
from .object_map import diff_to_gt_scd, gt_as_proposal, map_payload
from .scene import Scene


class ServerError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class AgentConnection:
    """Blocking request/response client over the wire protocol."""

    def __init__(self, host: str, port: int, timeout: float = 60.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, op: str, **fields) -> dict:
        payload = {"version": protocol.PROTOCOL_VERSION, "op": op}
        payload.update(fields)
        protocol.send_message(self.sock, payload)
        response = protocol.recv_message(self.sock)
        if response is None:
            raise protocol.ProtocolError("server closed the connection")
        if not response.get("ok", False):
            err = response.get("error", {})
            raise ServerError(err.get("code", "unknown"), err.get("message", ""))
        return response


def _start(conn: AgentConnection, task: str, difficulty: str, envs, seed=None) -> dict:
    fields: dict = {"task": task, "difficulty": difficulty}
    if task == "scd":
        fields["environments"] = list(envs)
    else:
        fields["environment"] = envs[0]
    if seed is not None:
        fields["seed"] = seed
    return conn.request("start_episode", **fields)


def _warmup_steps(conn: AgentConnection, episode: str, difficulty: str, steps: int = 2) -> None:
    for _ in range(steps):
        if difficulty == "passive_gt":
            reply = conn.request("step", episode=episode, action={"kind": "move_next"})
            if reply.get("episode_complete"):
                return
        else:
            conn.request("step", episode=episode, action={"kind": "rotate", "magnitude": 30.0})
            conn.request(
                "step", episode=episode, action={"kind": "move_distance", "magnitude": 0.25}
            )


def run_null_agent(host: str, port: int, task: str, difficulty: str, envs, seed=None) -> dict:
    """Start an episode and immediately submit an empty map."""
    with AgentConnection(host, port) as conn:
        started = _start(conn, task, difficulty, envs, seed)
        episode = started["episode"]
        empty = {"version": 1, "task": task, "environment": "+".join(envs), "objects": []}
        return conn.request("submit", episode=episode, map=empty)


def run_oracle_agent(
    host: str,
    port: int,
    task: str,
    difficulty: str,
    envs,
    scenes: dict[str, Scene],
    seed=None,
) -> dict:
    """Play a short episode and submit the ground truth as a one-hot map."""
    with AgentConnection(host, port) as conn:
        started = _start(conn, task, difficulty, envs, seed)
        episode = started["episode"]
        _warmup_steps(conn, episode, difficulty)
        if task == "scd":
            conn.request("step", episode=episode, action={"kind": "advance_scene"})
            _warmup_steps(conn, episode, difficulty, steps=1)
            gt = diff_to_gt_scd(scenes[envs[0]].to_gt_map(), scenes[envs[1]].to_gt_map())
        else:
            gt = scenes[envs[0]].to_gt_map()
        proposal = gt_as_proposal(gt)
        payload = map_payload(proposal)
        payload["environment"] = "+".join(envs)
        payload["difficulty"] = difficulty
        payload["agent"] = "oracle"
        return conn.request("submit", episode=episode, map=payload)


BUILTIN_AGENTS = ("oracle", "null")
