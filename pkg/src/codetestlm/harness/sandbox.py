"""Copied-workdir subprocess sandbox.

Every job gets a fresh copy of the project in a temporary directory; the
source checkout is never touched.  Commands run with a small environment
allowlist, in their own process group, and are killed as a group on timeout.
"""

from __future__ import annotations

import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

TIMEOUT_EXIT = 124
ENV_ALLOWLIST = ("PATH", "LANG", "LC_ALL", "JAVA_HOME", "TZ")


class Phase(str, Enum):
    BUILD = "build"
    TEST = "test"
    COVERAGE = "coverage"


@dataclass(frozen=True)
class ExecutionResult:
    phase: Phase
    exit_code: int
    stdout: str
    stderr: str
    duration: float
    timed_out: bool = False

    @property
    def ok(self) -> bool:
        return self.exit_code == 0 and not self.timed_out

    def to_json(self) -> dict:
        return {
            "phase": self.phase.value,
            "exit_code": self.exit_code,
            "duration": round(self.duration, 3),
            "timed_out": self.timed_out,
        }


class SandboxError(ValueError):
    pass


class Sandbox:
    """Context manager owning one temporary copy of ``source``."""

    def __init__(self, source: str | Path, env: dict[str, str] | None = None):
        self.source = Path(source)
        self.extra_env = dict(env or {})
        self._tmp: tempfile.TemporaryDirectory | None = None
        self.root: Path | None = None

    def __enter__(self) -> "Sandbox":
        self._tmp = tempfile.TemporaryDirectory(prefix="ctlm-sandbox-")
        self.root = Path(self._tmp.name) / "work"
        shutil.copytree(self.source, self.root, symlinks=False, ignore=shutil.ignore_patterns("__pycache__", ".coverage*"))
        return self

    def __exit__(self, *exc) -> None:
        self._tmp.cleanup()

    def path(self, rel: str) -> Path:
        """Resolve ``rel`` inside the copy; anything escaping it is refused."""
        p = (self.root / rel).resolve()
        if p != self.root.resolve() and self.root.resolve() not in p.parents:
            raise SandboxError(f"path {rel!r} escapes the sandbox")
        return p

    def write(self, rel: str, text: str) -> None:
        p = self.path(rel)
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def environment(self) -> dict[str, str]:
        env = {k: os.environ[k] for k in ENV_ALLOWLIST if k in os.environ}
        env["HOME"] = str(self.root.parent)
        env["TMPDIR"] = str(self.root.parent)
        env["PYTHONHASHSEED"] = "0"
        env["PYTHONDONTWRITEBYTECODE"] = "1"
        env.update(self.extra_env)
        return env

    def run(self, phase: Phase, argv: list[str], timeout: float) -> ExecutionResult:
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv,
                cwd=self.root,
                env=self.environment(),
                stdin=subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                errors="replace",
                start_new_session=True,
            )
        except OSError as exc:
            return ExecutionResult(phase, 127, "", f"cannot start {argv[0]!r}: {exc}", time.monotonic() - start)
        try:
            out, err = proc.communicate(timeout=timeout)
            return ExecutionResult(phase, proc.returncode, out, err, time.monotonic() - start)
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            out, err = proc.communicate()
            return ExecutionResult(phase, TIMEOUT_EXIT, out, err, time.monotonic() - start, timed_out=True)


def expand(argv: list[str], **values: str) -> list[str]:
    """Substitute ``{name}`` placeholders; other braces are left alone."""
    values.setdefault("python", sys.executable)
    out = []
    for a in argv:
        for k, v in values.items():
            a = a.replace("{" + k + "}", v)
        out.append(a)
    return out
