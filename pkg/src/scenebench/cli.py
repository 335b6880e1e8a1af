"""Command line interface: generate suites, serve episodes, run the
matrix, score map files, and render reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .envgen import DEV_BASES, TEST_BASES, generate_suite, mini_spec, preset_spec
from .harness import NOISE_PRESETS, RunConfig, SuiteReport, CellResult, Cell
from .harness import report_render, run_suite, score_files
from .jsonio import canonical_bytes
from .object_map import TaskKind
from .server import DIFFICULTIES, ChallengeServer, ChallengeService


def _cmd_generate(args) -> int:
    if args.preset == "challenge":
        specs = [preset_spec(name, seed=args.seed + i) for i, name in enumerate(DEV_BASES + TEST_BASES)]
        splits = None
    else:
        specs = [
            mini_spec("devroom", seed=args.seed),
            mini_spec("devhouse", seed=args.seed + 1),
        ]
        splits = {"devroom": "dev", "devhouse": "dev"}
        if args.preset == "mini-test":
            specs.append(mini_spec("testsuite", seed=args.seed + 2))
            splits["testsuite"] = "test"
    manifest = generate_suite(specs, args.out, seed=args.seed, splits=splits)
    print(f"wrote {len(manifest['suites'])} suites under {args.out}")
    return 0


def _cmd_serve(args) -> int:
    motion, detection = NOISE_PRESETS[args.noise]
    service = ChallengeService.from_manifest(
        Path(args.suite) / "manifest.json",
        strict=not args.dev,
        seed=args.seed,
        motion_noise=motion,
        detection_noise=detection,
    )
    server = ChallengeServer(service, host=args.host, port=args.port)
    host, port = server.address
    # flush so parent processes can scrape the bound address immediately
    print(f"serving {len(service.scenes)} environments on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _cmd_run(args) -> int:
    agent = args.agent
    if agent not in ("oracle", "null"):
        agent = agent.split()
    config = RunConfig(
        suite_dir=Path(args.suite),
        agent=agent,
        tasks=tuple(args.tasks.split(",")) if args.tasks else ("semantic_slam", "scd"),
        difficulties=tuple(args.difficulties.split(",")) if args.difficulties else DIFFICULTIES,
        seed=args.seed,
        noise=args.noise,
        strict=not args.dev,
        out_dir=Path(args.out) if args.out else None,
        parallelism=args.parallelism,
        episode_timeout=args.episode_timeout,
    )
    suite = run_suite(config)
    sys.stdout.write(report_render(suite))
    return 0 if suite.complete else 2


def _cmd_score(args) -> int:
    report = score_files(args.proposed, args.gt, TaskKind(args.task))
    payload = report.to_payload()
    if args.out:
        Path(args.out).write_bytes(canonical_bytes(payload, indent=2))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_report(args) -> int:
    data = json.loads(Path(args.suite_report).read_text())
    if data.get("kind") != "suite_report":
        print("not a suite report file", file=sys.stderr)
        return 2
    results = []
    for row in data["cells"]:
        cell = Cell(row["task"], row["difficulty"], tuple(row["environments"]), row.get("seed", 0))
        results.append(CellResult(cell=cell, report=row.get("report"), error=row.get("error")))
    sys.stdout.write(report_render(SuiteReport(results=results)))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scenebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a suite of environments")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=("challenge", "mini", "mini-test"), default="challenge")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("serve", help="serve episodes over the wire protocol")
    p.add_argument("--suite", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7675)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=sorted(NOISE_PRESETS), default="default")
    p.add_argument("--dev", action="store_true", help="disable test-matrix enforcement")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("run", help="run an agent across the task/difficulty matrix")
    p.add_argument("--suite", required=True)
    p.add_argument("--agent", default="null", help="oracle | null | external command line")
    p.add_argument("--tasks", default="")
    p.add_argument("--difficulties", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=sorted(NOISE_PRESETS), default="default")
    p.add_argument("--dev", action="store_true")
    p.add_argument("--out", default="")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--episode-timeout", type=float, default=600.0)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("score", help="score a proposed map against ground truth")
    p.add_argument("--task", choices=("semantic_slam", "scd"), required=True)
    p.add_argument("--proposed", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", default="")
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("report", help="render a saved suite report as a table")
    p.add_argument("--suite-report", required=True)
    p.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
