import json
import shutil
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from codetestlm.cli import main
from codetestlm.ingest import IngestConfig, scan_repositories
from codetestlm.synthetic import microproject_dir, write_fixture_corpus

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"

# PASS/FAIL lines from the acceptance suite, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []
PIPELINE_SECONDS: list[float] = []

PIPELINE = [
    ["ingest", "--root", "{root}"],
    ["filter"],
    ["align"],
    ["tokenize"],
    ["corpus"],
    ["stats"],
    ["lm-train"],
    ["lm-ppl"],
    ["signal-exp"],
    ["prompts"],
    ["lm-sample"],
    ["evaluate"],
    ["report"],
]


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))


def run_pipeline(root: Path, workdir: Path) -> list[int]:
    codes = []
    for step in PIPELINE:
        argv = [a.format(root=root) for a in step] + ["-c", str(root / "pipeline.toml"), "-w", str(workdir)]
        codes.append(main(argv))
        if codes[-1] != 0:
            break
    return codes


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    write_fixture_corpus(root)
    return root


@pytest.fixture(scope="session")
def corpus_files(corpus_root):
    return [sf for _, files in scan_repositories(corpus_root, IngestConfig(min_stars=0)) for sf in files]


@pytest.fixture(scope="session")
def pipeline_runs(corpus_root, tmp_path_factory):
    """Two full pipeline runs over the fixture corpus with the same config."""
    runs = []
    for name in ("run_a", "run_b"):
        wd = tmp_path_factory.mktemp(name)
        started = time.perf_counter()
        codes = run_pipeline(corpus_root, wd)
        PIPELINE_SECONDS.append(time.perf_counter() - started)
        assert codes == [0] * len(PIPELINE), f"pipeline failed: {codes}"
        runs.append(wd)
    return runs


@pytest.fixture
def python_calc(tmp_path) -> Path:
    dest = tmp_path / "python_calc"
    shutil.copytree(microproject_dir("python_calc"), dest)
    return dest


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":").split("-")[0])):
            terminalreporter.write_line(line)
