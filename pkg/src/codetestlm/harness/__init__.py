"""Sandboxed execution of test suites with injected generations."""

from .coverage_report import CoverageParseError, file_coverage, parse_json_report, parse_report, parse_xml_report
from .manifest import CoverageFormat, ManifestError, ProjectManifest, load_manifest, load_manifests
from .runner import (
    EvalJob,
    evaluate_generation,
    evaluate_many,
    filter_generations,
    has_assertion,
    run_baseline,
    select_eval_pairs,
)
from .sandbox import TIMEOUT_EXIT, ExecutionResult, Phase, Sandbox

__all__ = [
    "CoverageFormat",
    "CoverageParseError",
    "EvalJob",
    "ExecutionResult",
    "ManifestError",
    "Phase",
    "ProjectManifest",
    "Sandbox",
    "TIMEOUT_EXIT",
    "evaluate_generation",
    "evaluate_many",
    "file_coverage",
    "filter_generations",
    "has_assertion",
    "load_manifest",
    "load_manifests",
    "parse_json_report",
    "parse_report",
    "parse_xml_report",
    "run_baseline",
    "select_eval_pairs",
]
