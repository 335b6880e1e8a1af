"""Oracle and null agent scripts built purely on the SDK.

The oracle reads scene files from disk (development suites publish
them), walks a few steps, and submits the ground truth as a one-hot
map; the null agent submits an empty map. No scoring math happens on
this side. Also runnable as a harness external agent via the
SCENEBENCH_* environment variables.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

from .mapdoc import MapBuilder
from .session import ClientSession, SubmitResult


def read_scene(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("kind") != "scene":
        raise ValueError(f"{path} is not a scene file")
    return data


def scene_objects(scene: dict) -> dict[str, dict]:
    return {obj["instance_id"]: obj for obj in scene["objects"]}


def scene_changes(scene_a: dict, scene_b: dict) -> list[tuple[dict, str]]:
    """(object record, state) pairs for everything added or removed
    between two variations, matched by instance id."""
    a, b = scene_objects(scene_a), scene_objects(scene_b)
    changes = [(obj, "removed") for iid, obj in a.items() if iid not in b]
    changes += [(obj, "added") for iid, obj in b.items() if iid not in a]
    return changes


def _one_hot_state(state: str) -> dict:
    return {k: (1.0 if k == state else 0.0) for k in ("added", "removed", "same")}


def _warmup(session: ClientSession, steps: int = 2) -> None:
    for _ in range(steps):
        if session.descriptor.difficulty == "passive_gt":
            if session.move_next().episode_complete:
                return
        else:
            session.rotate(30.0)
            session.move(0.25)


def run_oracle(
    host: str,
    port: int,
    task: str,
    difficulty: str,
    environments,
    scene_paths,
    seed: int | None = None,
) -> SubmitResult:
    scene_paths = [Path(p) for p in scene_paths]
    with ClientSession.connect(host, port, task, difficulty, environments, seed=seed) as session:
        _warmup(session)
        builder = MapBuilder(
            task,
            environment="+".join(session.descriptor.environments),
            difficulty=difficulty,
            agent="sdk-oracle",
        )
        if task == "scd":
            session.advance_scene()
            _warmup(session, steps=1)
            for obj, state in scene_changes(read_scene(scene_paths[0]), read_scene(scene_paths[1])):
                builder.add_object(
                    obj["cuboid"]["center"],
                    obj["cuboid"]["extent"],
                    {obj["class"]: 1.0},
                    _one_hot_state(state),
                )
        else:
            for obj in read_scene(scene_paths[0])["objects"]:
                builder.add_object(
                    obj["cuboid"]["center"], obj["cuboid"]["extent"], {obj["class"]: 1.0}
                )
        return session.submit(builder)


def run_null(host, port, task, difficulty, environments, seed=None) -> SubmitResult:
    with ClientSession.connect(host, port, task, difficulty, environments, seed=seed) as session:
        builder = MapBuilder(task, environment="+".join(session.descriptor.environments))
        return session.submit(builder)


def main(argv=None) -> int:
    """Harness external-agent entry point: reads SCENEBENCH_* variables,
    plays one episode, prints the report id."""
    argv = list(sys.argv[1:] if argv is None else argv)
    agent = argv[0] if argv else "null"
    host = os.environ["SCENEBENCH_HOST"]
    port = int(os.environ["SCENEBENCH_PORT"])
    task = os.environ["SCENEBENCH_TASK"]
    difficulty = os.environ["SCENEBENCH_DIFFICULTY"]
    environments = os.environ["SCENEBENCH_ENVIRONMENTS"].split(",")
    seed = int(os.environ.get("SCENEBENCH_SEED", "0"))
    if agent == "oracle":
        suite = Path(os.environ["SCENEBENCH_SUITE"])
        paths = [suite / "scenes" / f"{name}.json" for name in environments]
        result = run_oracle(host, port, task, difficulty, environments, paths, seed=seed)
    else:
        result = run_null(host, port, task, difficulty, environments, seed=seed)
    print(result.report_id)
    return 0


if __name__ == "__main__":
    sys.exit(main())
