"""Regenerate the golden protocol fixtures under fixtures/golden/.

Produces a small committed suite, a request/response transcript with the
exact canonical bytes a fresh server emits, and the oracle reference
scores used by client-SDK conformance tests. Rerun after any protocol,
scoring, or generator change:

    python3 tools/record_golden.py
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from scenebench.envgen import generate_suite, mini_spec  # noqa: E402
from scenebench.harness import RunConfig, run_suite  # noqa: E402
from scenebench.jsonio import canonical_bytes, canonical_dumps  # noqa: E402
from scenebench.object_map import gt_as_proposal, map_payload  # noqa: E402
from scenebench.scene import load_scene  # noqa: E402
from scenebench.server import ChallengeService  # noqa: E402
from scenebench.simworld import DetectionNoise, NoiseModel  # noqa: E402

GOLDEN = ROOT / "fixtures" / "golden"
SERVER_SEED = 424242


def build_suite() -> None:
    suite_dir = GOLDEN / "suite"
    if suite_dir.exists():
        shutil.rmtree(suite_dir)
    generate_suite(
        [mini_spec("goldroom", seed=101)],
        suite_dir,
        seed=55,
        splits={"goldroom": "dev"},
    )


def request_script() -> list[dict]:
    scene = load_scene(GOLDEN / "suite" / "scenes" / "goldroom_1.json")
    perfect = map_payload(gt_as_proposal(scene.to_gt_map()))
    return [
        {"version": 1, "op": "list_environments"},
        {
            "version": 1, "op": "start_episode", "task": "semantic_slam",
            "difficulty": "passive_gt", "environment": "goldroom_1", "seed": 777,
        },
        {"version": 1, "op": "task_info", "episode": "ep-000001"},
        {"version": 1, "op": "step", "episode": "ep-000001", "action": {"kind": "move_next"}},
        {
            "version": 1, "op": "step", "episode": "ep-000001",
            "action": {"kind": "move_distance", "magnitude": 1.0},
        },  # action_not_allowed under passive control
        {"version": 1, "op": "step", "episode": "ep-000001", "action": {"kind": "move_next"}},
        {"version": 1, "op": "submit", "episode": "ep-000001", "map": perfect},
        {
            "version": 1, "op": "start_episode", "task": "scd", "difficulty": "active_gt",
            "environments": ["goldroom_1", "goldroom_4"], "seed": 778,
        },
        {
            "version": 1, "op": "step", "episode": "ep-000002",
            "action": {"kind": "rotate", "magnitude": 45.0},
        },
        {"version": 1, "op": "step", "episode": "ep-000002", "action": {"kind": "advance_scene"}},
        {
            "version": 1, "op": "step", "episode": "ep-000002",
            "action": {"kind": "move_distance", "magnitude": 0.5},
        },
        {
            "version": 1, "op": "submit", "episode": "ep-000002",
            "map": {"version": 1, "task": "scd", "environment": "goldroom_1+goldroom_4", "objects": []},
        },
        {
            "version": 1, "op": "start_episode", "task": "semantic_slam",
            "difficulty": "passive_gt", "environment": "missing_9", "seed": 1,
        },  # unknown_environment
    ]


def fresh_service() -> ChallengeService:
    return ChallengeService.from_manifest(
        GOLDEN / "suite" / "manifest.json",
        strict=True,
        seed=SERVER_SEED,
        motion_noise=NoiseModel.noiseless(),
        detection_noise=DetectionNoise.noiseless(),
    )


def record_transcript() -> None:
    service = fresh_service()
    lines = []
    for request in request_script():
        response_text = canonical_dumps(service.handle(request))
        lines.append(
            json.dumps(
                {"request": canonical_dumps(request), "response": response_text},
                sort_keys=True,
            )
        )
    (GOLDEN / "transcript.jsonl").write_text("\n".join(lines) + "\n")


def record_oracle_scores() -> None:
    config = RunConfig(
        suite_dir=GOLDEN / "suite", agent="oracle", seed=SERVER_SEED, noise="none",
        tasks=("semantic_slam", "scd"),
    )
    suite = run_suite(config)
    scores = {
        result.cell.key: result.report["omq"] for result in suite.results
    }
    (GOLDEN / "oracle_scores.json").write_bytes(canonical_bytes(scores, indent=2))


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    build_suite()
    record_transcript()
    record_oracle_scores()
    print(f"golden fixtures written under {GOLDEN}")


if __name__ == "__main__":
    main()
