"""Test fixtures: launch the primary challenge server as a subprocess.

The SDK is exercised strictly over the wire; the only touchpoints with
the primary component are its CLI and the shared golden fixtures.
"""

import re
import subprocess
import sys
import time
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
GOLDEN = REPO_ROOT / "fixtures" / "golden"
GOLDEN_SERVER_SEED = 424242


class ServerProcess:
    def __init__(self, suite: Path, seed: int, noise: str = "none"):
        self.proc = subprocess.Popen(
            [
                sys.executable, "-m", "scenebench", "serve",
                "--suite", str(suite), "--port", "0",
                "--seed", str(seed), "--noise", noise,
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        line = self.proc.stdout.readline()
        match = re.search(r"on ([\d.]+):(\d+)", line)
        if not match:
            self.stop()
            raise RuntimeError(f"server did not report an address: {line!r}")
        self.host, self.port = match.group(1), int(match.group(2))

    def stop(self):
        self.proc.terminate()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait(timeout=10)


@pytest.fixture()
def fresh_server():
    """A brand-new server per test, for transcripts that pin episode ids."""
    server = ServerProcess(GOLDEN / "suite", seed=GOLDEN_SERVER_SEED)
    yield server
    server.stop()


@pytest.fixture(scope="session")
def shared_server():
    server = ServerProcess(GOLDEN / "suite", seed=GOLDEN_SERVER_SEED)
    yield server
    server.stop()


@pytest.fixture(scope="session")
def golden_dir():
    if not GOLDEN.exists():
        pytest.skip("golden fixtures not present; run tools/record_golden.py")
    return GOLDEN
