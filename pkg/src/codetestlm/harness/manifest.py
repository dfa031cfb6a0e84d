"""Per-project ``manifest.toml`` describing how to build, test and measure coverage.

Command entries are argv lists and may use these placeholders:
``{python}`` (the running interpreter), ``{test_path}``, ``{code_path}`` and
``{test_module}`` (dotted module name of the test file).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class CoverageFormat(str, Enum):
    XML = "xml-line-report"
    JSON = "json-line-report"


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectManifest:
    project_id: str
    workdir: Path
    test_cmd: list[str]
    coverage_cmd: list[str]
    coverage_format: CoverageFormat
    coverage_report: str
    build_cmd: list[str] = field(default_factory=list)
    test_report: str | None = None
    timeout_secs: int = 120
    env: dict[str, str] = field(default_factory=dict)
    runner: list[str] = field(default_factory=list)
    language: str = "python"

    def __post_init__(self):
        if self.timeout_secs <= 0:
            raise ManifestError("timeout_secs must be positive")
        if not self.test_cmd:
            raise ManifestError("test_cmd must not be empty")
        for cmd in (self.build_cmd, self.test_cmd, self.coverage_cmd, self.runner):
            if not all(isinstance(a, str) for a in cmd):
                raise ManifestError("commands must be lists of strings")


def load_manifest(path: str | Path) -> ProjectManifest:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    try:
        workdir = (path.parent / data.get("workdir", ".")).resolve()
        return ProjectManifest(
            project_id=data["project_id"],
            workdir=workdir,
            build_cmd=list(data.get("build_cmd", [])),
            test_cmd=list(data["test_cmd"]),
            coverage_cmd=list(data.get("coverage_cmd", [])),
            coverage_format=CoverageFormat(data["coverage_format"]),
            coverage_report=data["coverage_report"],
            test_report=data.get("test_report"),
            timeout_secs=int(data.get("timeout_secs", 120)),
            env={str(k): str(v) for k, v in data.get("env", {}).items()},
            runner=list(data.get("runner", [])),
            language=data.get("language", "python"),
        )
    except (KeyError, ValueError) as exc:
        raise ManifestError(f"{path}: bad or missing field: {exc}") from exc


def load_manifests(directory: str | Path) -> dict[str, ProjectManifest]:
    """All ``*.toml`` manifests below ``directory``, keyed by project id."""
    out = {}
    for p in sorted(Path(directory).rglob("*.toml")):
        m = load_manifest(p)
        if m.project_id in out:
            raise ManifestError(f"duplicate project id {m.project_id!r} in {p}")
        out[m.project_id] = m
    return out
