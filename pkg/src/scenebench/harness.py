"""Batch orchestration: run agents over the task/difficulty/environment
matrix, score submissions, and render reports."""

from __future__ import annotations

import json
import math
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import agents
from .jsonio import canonical_bytes, round6
from .object_map import TaskKind, parse_gt_map, parse_map
from .omq import EvalReport, evaluate
from .scene import load_scene, parse_scene
from .server import TEST_MATRIX, ChallengeServer, ChallengeService, DIFFICULTIES
from .simworld import DetectionNoise, NoiseModel

TASKS = ("semantic_slam", "scd")

NOISE_PRESETS: dict[str, tuple[NoiseModel, DetectionNoise]] = {
    "none": (NoiseModel.noiseless(), DetectionNoise.noiseless()),
    "default": (NoiseModel.default_drift(), DetectionNoise.default()),
}


class ConfigInvalid(ValueError):
    pass


class AgentTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class Cell:
    task: str
    difficulty: str
    envs: tuple[str, ...]
    seed: int

    @property
    def key(self) -> str:
        return f"{self.task}/{self.difficulty}/{'+'.join(self.envs)}"


@dataclass
class RunConfig:
    suite_dir: Path
    agent: str | list[str] = "null"
    tasks: tuple[str, ...] = TASKS
    difficulties: tuple[str, ...] = DIFFICULTIES
    seed: int = 0
    noise: str = "default"
    strict: bool = True
    out_dir: Path | None = None
    parallelism: int = 1
    episode_timeout: float = 600.0

    def __post_init__(self):
        self.suite_dir = Path(self.suite_dir)
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)
        for t in self.tasks:
            if t not in TASKS:
                raise ConfigInvalid(f"unknown task {t!r}")
        for d in self.difficulties:
            if d not in DIFFICULTIES:
                raise ConfigInvalid(f"unknown difficulty {d!r}")
        if self.noise not in NOISE_PRESETS:
            raise ConfigInvalid(f"unknown noise preset {self.noise!r}")
        if isinstance(self.agent, str) and self.agent not in agents.BUILTIN_AGENTS:
            raise ConfigInvalid(
                f"unknown builtin agent {self.agent!r}; pass an argv list for external agents"
            )


def _scd_pairs(variations: list[int]) -> list[tuple[int, int]]:
    ordered = sorted(variations)
    return list(zip(ordered, ordered[1:]))


def plan_cells(manifest: dict, config: RunConfig) -> list[Cell]:
    """Every (task, difficulty, environment) episode the suite will run.

    Test-split suites follow the challenge test matrix; dev suites run
    all variations (and all consecutive variation pairs for SCD).
    """
    cells: list[Cell] = []
    for suite in sorted(manifest["suites"], key=lambda s: s["base"]):
        base = suite["base"]
        split = suite["split"]
        available = sorted(int(v) for v in suite["variations"])
        for task in config.tasks:
            for difficulty in config.difficulties:
                if split == "test" and config.strict:
                    allowed = sorted(TEST_MATRIX[(task, difficulty)])
                    usable = [v for v in allowed if v in available]
                else:
                    usable = available
                if task == "scd":
                    for a, b in _scd_pairs(usable):
                        cells.append(Cell(task, difficulty, (f"{base}_{a}", f"{base}_{b}"), 0))
                else:
                    for v in usable:
                        cells.append(Cell(task, difficulty, (f"{base}_{v}",), 0))
    # stable per-cell seeds, independent of execution order
    out = []
    for index, cell in enumerate(cells):
        seed = int(np.random.SeedSequence([config.seed, index]).generate_state(1)[0])
        out.append(Cell(cell.task, cell.difficulty, cell.envs, seed))
    return out


@dataclass
class CellResult:
    cell: Cell
    report: dict | None = None
    error: str | None = None

    def row(self) -> dict:
        entry: dict = {
            "task": self.cell.task,
            "difficulty": self.cell.difficulty,
            "environments": list(self.cell.envs),
            "seed": self.cell.seed,
        }
        if self.report is not None:
            entry["report"] = self.report
        if self.error is not None:
            entry["error"] = self.error
        return entry


@dataclass
class SuiteReport:
    results: list[CellResult] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return all(r.report is not None for r in self.results)

    def to_payload(self) -> dict:
        rows = sorted(self.results, key=lambda r: r.cell.key)
        aggregates: dict[str, dict] = {}
        for task in TASKS:
            for difficulty in DIFFICULTIES:
                scored = [
                    r.report
                    for r in rows
                    if r.cell.task == task and r.cell.difficulty == difficulty and r.report
                ]
                if not scored:
                    continue
                aggregates[f"{task}/{difficulty}"] = {
                    "episodes": len(scored),
                    "mean_omq": round6(_mean(r["omq"] for r in scored)),
                    "mean_avg_spatial_quality": round6(
                        _mean(r["avg_spatial_quality"] for r in scored)
                    ),
                    "mean_avg_label_quality": round6(
                        _mean(r["avg_label_quality"] for r in scored)
                    ),
                }
        return {
            "version": 1,
            "kind": "suite_report",
            "cells": [r.row() for r in rows],
            "aggregates": aggregates,
            "complete": self.complete,
        }


def _mean(values) -> float:
    items = list(values)
    return math.fsum(items) / len(items) if items else 0.0


def _load_manifest(suite_dir: Path) -> dict:
    path = suite_dir / "manifest.json"
    if not path.exists():
        raise ConfigInvalid(f"no manifest.json under {suite_dir}")
    manifest = json.loads(path.read_text())
    if manifest.get("kind") != "suite_manifest":
        raise ConfigInvalid(f"{path} is not a suite manifest")
    return manifest


def run_suite(config: RunConfig) -> SuiteReport:
    """Execute every planned cell against an in-process server.

    Failures (including per-episode timeouts) are recorded per cell and
    never abort the rest of the suite.
    """
    manifest = _load_manifest(config.suite_dir)
    motion, detection = NOISE_PRESETS[config.noise]
    service = ChallengeService.from_manifest(
        config.suite_dir / "manifest.json",
        strict=config.strict,
        seed=config.seed,
        motion_noise=motion,
        detection_noise=detection,
    )
    cells = plan_cells(manifest, config)
    server = ChallengeServer(service)
    server.serve_background()
    host, port = server.address
    results: dict[str, CellResult] = {}
    try:
        if config.parallelism <= 1:
            for cell in cells:
                results[cell.key] = _run_cell(config, service, host, port, cell)
        else:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                futures = {pool.submit(_run_cell, config, service, host, port, cell): cell for cell in cells}
                for future, cell in futures.items():
                    results[cell.key] = future.result()
    finally:
        server.shutdown()
        server.server_close()

    report = SuiteReport(results=[results[c.key] for c in cells])
    if config.out_dir is not None:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        (config.out_dir / "suite_report.json").write_bytes(
            canonical_bytes(report.to_payload(), indent=2)
        )
        (config.out_dir / "suite_report.txt").write_text(report_render(report))
    return report


def _run_cell(config: RunConfig, service: ChallengeService, host, port, cell: Cell) -> CellResult:
    try:
        if isinstance(config.agent, str):
            with ThreadPoolExecutor(max_workers=1) as pool:
                future = pool.submit(_run_builtin, config.agent, service, host, port, cell)
                try:
                    reply = future.result(timeout=config.episode_timeout)
                except FutureTimeout:
                    raise AgentTimeout(f"agent exceeded {config.episode_timeout}s") from None
        else:
            reply = _run_external(config, host, port, cell)
        report = reply.get("report")
        if report is None:
            report = service.reports.get(reply["report_id"])
        return CellResult(cell=cell, report=report)
    except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
        return CellResult(cell=cell, error=f"{type(exc).__name__}: {exc}")


def _run_builtin(name: str, service: ChallengeService, host, port, cell: Cell) -> dict:
    if name == "oracle":
        scenes = {n: s for n, s in service.scenes.items()}
        return agents.run_oracle_agent(
            host, port, cell.task, cell.difficulty, cell.envs, scenes, seed=cell.seed
        )
    return agents.run_null_agent(host, port, cell.task, cell.difficulty, cell.envs, seed=cell.seed)


def _run_external(config: RunConfig, host, port, cell: Cell) -> dict:
    env = dict(os.environ)
    env.update(
        {
            "SCENEBENCH_HOST": host,
            "SCENEBENCH_PORT": str(port),
            "SCENEBENCH_TASK": cell.task,
            "SCENEBENCH_DIFFICULTY": cell.difficulty,
            "SCENEBENCH_ENVIRONMENTS": ",".join(cell.envs),
            "SCENEBENCH_SEED": str(cell.seed),
        }
    )
    proc = subprocess.run(
        list(config.agent),
        env=env,
        timeout=config.episode_timeout,
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"agent exited with {proc.returncode}: {proc.stderr.strip()[:500]}")
    # the external agent prints the submit reply's report id on stdout
    report_id = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else ""
    return {"report_id": report_id}


def score_files(proposed_path: str | Path, gt_path: str | Path, task: TaskKind) -> EvalReport:
    """Offline scoring entry point; identical math to server-side scoring.

    The ground-truth file may be a ground-truth map document or (for
    Semantic SLAM) a scene file.
    """
    proposed = parse_map(Path(proposed_path).read_bytes(), task)
    gt_raw = Path(gt_path).read_bytes()
    head = json.loads(gt_raw)
    if isinstance(head, dict) and head.get("kind") == "scene":
        if task is not TaskKind.SEMANTIC_SLAM:
            raise ConfigInvalid("a single scene file only provides Semantic SLAM ground truth")
        gt = parse_scene(gt_raw).to_gt_map()
    else:
        gt = parse_gt_map(gt_raw, task)
    return evaluate(proposed, gt)


def report_render(suite: SuiteReport) -> str:
    """Human-readable table; machine detail lives in the JSON payload."""
    payload = suite.to_payload()
    lines = []
    header = f"{'task':<14} {'difficulty':<11} {'environment':<28} {'omq':>9} {'tp':>4} {'fn':>4} {'fp':>4}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in payload["cells"]:
        env = "+".join(row["environments"])
        if "report" in row:
            r = row["report"]
            lines.append(
                f"{row['task']:<14} {row['difficulty']:<11} {env:<28} "
                f"{r['omq']:>9.6f} {r['n_tp']:>4d} {r['n_fn']:>4d} {r['n_fp']:>4d}"
            )
        else:
            lines.append(
                f"{row['task']:<14} {row['difficulty']:<11} {env:<28} "
                f"{'ERROR':>9} {row.get('error', '')[:40]}"
            )
    if payload["aggregates"]:
        lines.append("")
        lines.append(f"{'cell':<26} {'episodes':>9} {'mean omq':>10}")
        lines.append("-" * 47)
        for key in sorted(payload["aggregates"]):
            agg = payload["aggregates"][key]
            lines.append(f"{key:<26} {agg['episodes']:>9d} {agg['mean_omq']:>10.6f}")
    return "\n".join(lines) + "\n"
