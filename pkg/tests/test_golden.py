"""Replay the committed golden transcript against a fresh service.

The same fixture is consumed byte-for-byte by the client SDK's
conformance tests; regenerate with ``python3 tools/record_golden.py``
after deliberate protocol or scoring changes.
"""

import json
from pathlib import Path

import pytest

from scenebench.jsonio import canonical_dumps
from scenebench.server import ChallengeService
from scenebench.simworld import DetectionNoise, NoiseModel

GOLDEN = Path(__file__).resolve().parent.parent / "fixtures" / "golden"


@pytest.fixture()
def service():
    return ChallengeService.from_manifest(
        GOLDEN / "suite" / "manifest.json",
        strict=True,
        seed=424242,
        motion_noise=NoiseModel.noiseless(),
        detection_noise=DetectionNoise.noiseless(),
    )


def test_golden_transcript_replays_byte_for_byte(service):
    lines = (GOLDEN / "transcript.jsonl").read_text().splitlines()
    assert len(lines) >= 10
    for i, line in enumerate(lines):
        step = json.loads(line)
        request = json.loads(step["request"])
        got = canonical_dumps(service.handle(request))
        assert got == step["response"], f"transcript line {i} diverged"


def test_golden_transcript_covers_errors_and_both_tasks():
    lines = [json.loads(l) for l in (GOLDEN / "transcript.jsonl").read_text().splitlines()]
    responses = [json.loads(l["response"]) for l in lines]
    codes = {r["error"]["code"] for r in responses if not r.get("ok")}
    assert "action_not_allowed" in codes
    assert "unknown_environment" in codes
    tasks = {json.loads(l["request"]).get("task") for l in lines}
    assert {"semantic_slam", "scd"} <= tasks
