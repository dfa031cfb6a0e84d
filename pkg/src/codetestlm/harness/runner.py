"""Baseline runs, evaluation of injected generations, and survivor filtering."""

from __future__ import annotations

import random
import xml.etree.ElementTree as ET
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ..align import CodeTestPair
from ..common import Language
from ..metrics import RuntimeOutcome, lex
from ..promptgen import TaskPrompt, inject_generation
from ..scanner import UnparseableFile, outline_text
from .coverage_report import CoverageParseError, file_coverage, parse_report
from .manifest import ProjectManifest
from .sandbox import ExecutionResult, Phase, Sandbox, expand

# Build phase for Python projects without a build command: syntax check, then import the module.
_PY_CHECK = r"""
import importlib.util, os, sys
path, name = sys.argv[1], sys.argv[2]
with open(path, encoding="utf-8") as fh:
    src = fh.read()
try:
    compile(src, path, "exec")
except SyntaxError as exc:
    print(f"syntax error: {exc}", file=sys.stderr)
    sys.exit(3)
sys.path[:0] = [os.path.dirname(os.path.abspath(path)), os.getcwd()]
try:
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    spec.loader.exec_module(module)
except BaseException as exc:
    print(f"import error: {type(exc).__name__}: {exc}", file=sys.stderr)
    sys.exit(4)
"""


def has_assertion(text: str, language: Language) -> bool:
    """True when ``text`` holds an assertion lexeme for ``language``.

    Python: ``assert``, any ``assert*`` name, ``raises``.  Java: any
    ``assert*`` name, ``fail``.
    """
    for tok in lex(text):
        if tok.startswith("assert"):
            return True
        if language is Language.PYTHON and tok == "raises":
            return True
        if language is Language.JAVA and tok == "fail":
            return True
    return False


def test_module_name(test_path: str) -> str:
    stem = test_path[:-3] if test_path.endswith(".py") else test_path.rsplit(".", 1)[0]
    return stem.replace("/", ".")


@dataclass
class _Run:
    results: list[ExecutionResult]

    def last(self, phase: Phase) -> ExecutionResult | None:
        return next((r for r in self.results if r.phase is phase), None)


def _run_phases(manifest: ProjectManifest, box: Sandbox, test_path: str, code_path: str, upto: Phase) -> _Run:
    values = {"test_path": test_path, "code_path": code_path, "test_module": test_module_name(test_path)}
    steps = []
    if manifest.build_cmd:
        steps.append((Phase.BUILD, expand(manifest.build_cmd, **values)))
    elif manifest.language == Language.PYTHON.value:
        steps.append((Phase.BUILD, expand(["{python}", "-c", _PY_CHECK, "{test_path}", "{test_module}"], **values)))
    steps.append((Phase.TEST, expand(manifest.test_cmd, **values)))
    if manifest.coverage_cmd:
        steps.append((Phase.COVERAGE, expand(manifest.coverage_cmd, **values)))
    order = [Phase.BUILD, Phase.TEST, Phase.COVERAGE]
    run = _Run([])
    for phase, argv in steps:
        if order.index(phase) > order.index(upto):
            break
        res = box.run(phase, manifest.runner + argv, manifest.timeout_secs)
        run.results.append(res)
        if not res.ok:
            break
    return run


def run_baseline(
    manifest: ProjectManifest, test_file_variant: str, test_path: str, code_path: str
) -> tuple[list[ExecutionResult], Fraction | None]:
    """Build, test and measure coverage of ``code_path`` with ``test_file_variant`` in place.

    Coverage is None when an earlier phase failed.
    """
    with Sandbox(manifest.workdir, manifest.env) as box:
        box.write(test_path, test_file_variant)
        run = _run_phases(manifest, box, test_path, code_path, Phase.COVERAGE)
        cov = run.last(Phase.COVERAGE)
        if cov is None or not cov.ok:
            return run.results, None
        report = parse_report(box.path(manifest.coverage_report), manifest.coverage_format)
        return run.results, file_coverage(report, code_path)


def _junit_cases(xml_text: str) -> list[tuple[str, str]]:
    """``(method name, status)`` per test case; status is passed, failed or skipped."""
    root = ET.fromstring(xml_text)
    out = []
    for case in root.iter("testcase"):
        name = case.get("name", "").split("[")[0].split("(")[0]
        tags = {child.tag for child in case}
        status = "failed" if tags & {"failure", "error"} else "skipped" if "skipped" in tags else "passed"
        out.append((name, status))
    return out


def injected_test_names(text: str, language: Language, start: int, end: int) -> list[str] | None:
    """Names of test methods overlapping ``[start, end)``; None if the file cannot be outlined."""
    try:
        outline = outline_text(text, language)
    except UnparseableFile:
        return None
    return [m.name for m in outline.tests if m.start < end and m.end > start]


def _verdict(box: Sandbox, manifest: ProjectManifest, test: ExecutionResult, names: list[str] | None) -> tuple[bool, str, str]:
    """``(passed, verdict source, reason)``."""
    report = box.path(manifest.test_report) if manifest.test_report else None
    if report is not None and report.exists() and names is not None:
        try:
            cases = _junit_cases(report.read_text(encoding="utf-8"))
        except ET.ParseError:
            cases = None
        if cases is not None:
            mine = [status for name, status in cases if name in set(names)]
            if not mine:
                return False, "per-test", "not-executed"
            if "failed" in mine:
                return False, "per-test", "failed"
            if "skipped" in mine:
                return False, "per-test", "skipped"
            return True, "per-test", ""
    if test.timed_out:
        return False, "suite-exit", "timeout"
    return test.ok, "suite-exit", "" if test.ok else "failed"


def evaluate_generation(
    manifest: ProjectManifest,
    prompt: TaskPrompt,
    generated: str,
    test_path: str,
    code_path: str,
    sample_k: int = 0,
    baseline_coverage: Fraction | None = None,
) -> RuntimeOutcome:
    """Inject ``generated`` into the prompt's baseline file and run the project's suite."""
    lang = prompt.subject_language
    base = dict(pair_id=prompt.pair_id, task=prompt.task.value, context_mode=prompt.context_mode.value, sample_k=sample_k)
    asserts = has_assertion(generated, lang)
    if not generated.strip():
        return RuntimeOutcome(**base, compiled=False, passed=False, has_assert=False, reason="empty")
    text = inject_generation(prompt.baseline_text, prompt.insertion_point, generated, lang, prompt.indent)
    inserted_end = prompt.insertion_point + len(text) - len(prompt.baseline_text)
    names = injected_test_names(text, lang, prompt.insertion_point, inserted_end)
    with Sandbox(manifest.workdir, manifest.env) as box:
        box.write(test_path, text)
        run = _run_phases(manifest, box, test_path, code_path, Phase.COVERAGE)
        build = run.last(Phase.BUILD)
        if build is not None and not build.ok:
            reason = "timeout" if build.timed_out else "compile-error"
            return RuntimeOutcome(**base, compiled=False, passed=False, has_assert=asserts, reason=reason)
        test = run.last(Phase.TEST)
        passed, source, reason = _verdict(box, manifest, test, names)
        if not passed:
            return RuntimeOutcome(**base, compiled=True, passed=False, has_assert=asserts, reason=reason, verdict_source=source)
        cov = run.last(Phase.COVERAGE)
        with_gen = None
        if cov is not None and cov.ok:
            try:
                with_gen = file_coverage(parse_report(box.path(manifest.coverage_report), manifest.coverage_format), code_path)
            except CoverageParseError:
                reason = "coverage-unparseable"
        else:
            reason = "coverage-failed"
    if with_gen is not None and baseline_coverage is None:
        _, baseline_coverage = run_baseline(manifest, prompt.baseline_text, test_path, code_path)
    if with_gen is None or baseline_coverage is None:
        return RuntimeOutcome(**base, compiled=True, passed=True, has_assert=asserts, reason=reason or "no-baseline-coverage", verdict_source=source)
    return RuntimeOutcome(
        **base,
        compiled=True,
        passed=True,
        coverage_baseline=float(baseline_coverage),
        coverage_with_gen=float(with_gen),
        has_assert=asserts,
        verdict_source=source,
    )


def filter_generations(outcomes: Iterable[RuntimeOutcome]) -> list[RuntimeOutcome]:
    """Keep samples that compiled, passed and contain an assertion, in input order."""
    return [o for o in outcomes if o.compiled and o.passed and o.has_assert]


def select_eval_pairs(
    pairs: Sequence[CodeTestPair], texts: dict[str, str], per_project: int | None = 10, seed: int = 0
) -> tuple[list[CodeTestPair], Counter]:
    """Drop pairs whose code file has fewer than two methods or whose test file has fewer than two tests.

    Then keep up to ``per_project`` pairs per repository, chosen with a seeded
    generator.  Returns the survivors and a counter of drop reasons.
    """
    dropped: Counter = Counter()
    keep: dict[str, list[CodeTestPair]] = {}
    for p in pairs:
        try:
            code = outline_text(texts[p.code_file_id], p.subject_language)
            test = outline_text(texts[p.test_file_id], p.subject_language)
        except UnparseableFile:
            dropped["unparseable"] += 1
            continue
        if len(code.methods) < 2:
            dropped["single-code-method"] += 1
        elif len(test.tests) < 2:
            dropped["single-test-method"] += 1
        else:
            keep.setdefault(p.repo_id, []).append(p)
    out = []
    for repo in sorted(keep):
        group = sorted(keep[repo], key=lambda p: p.pair_id)
        if per_project is not None and len(group) > per_project:
            dropped["subsampled"] += len(group) - per_project
            group = sorted(random.Random(f"{seed}:{repo}").sample(group, per_project), key=lambda p: p.pair_id)
        out.extend(group)
    return out, dropped


@dataclass(frozen=True)
class EvalJob:
    prompt: TaskPrompt
    sample_k: int
    generated: str
    test_path: str
    code_path: str


def evaluate_many(jobs: Sequence[EvalJob], manifests: dict[str, ProjectManifest], project_of: dict[str, str], workers: int = 4) -> list[RuntimeOutcome]:
    """Evaluate jobs on a thread pool; baseline coverage is computed once per prompt.

    ``project_of`` maps pair ids to manifest project ids.  Results come back
    sorted by job key regardless of completion order.
    """
    def manifest_for(job: EvalJob) -> ProjectManifest:
        return manifests[project_of[job.prompt.pair_id]]

    prompts = {}
    for job in jobs:
        prompts.setdefault(job.prompt.key, job)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        base_list = list(
            pool.map(
                lambda j: run_baseline(manifest_for(j), j.prompt.baseline_text, j.test_path, j.code_path)[1],
                prompts.values(),
            )
        )
        baselines = dict(zip(prompts, base_list))
        outcomes = list(
            pool.map(
                lambda j: evaluate_generation(
                    manifest_for(j), j.prompt, j.generated, j.test_path, j.code_path, j.sample_k, baselines[j.prompt.key]
                ),
                jobs,
            )
        )
    return sorted(outcomes, key=lambda o: o.key)
