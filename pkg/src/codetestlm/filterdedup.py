"""Quality filters and exact-content deduplication.

Rules are checked in a fixed order and a rejected file is attributed to the
first rule it fails:

1. ``size``      byte size above ``max_file_bytes``
2. ``max-line``  some line longer than ``max_line_chars``
3. ``mean-line`` mean line length above ``max_mean_line_chars``
4. ``non-alnum`` non-alphanumeric fraction above ``max_non_alnum_fraction``
5. ``autogen``   a generator marker in the first ``autogen_lines`` lines

Every comparison is strict, so a file sitting exactly on a threshold is kept.
The pipeline filters first and deduplicates the survivors.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .ingest import SourceFile

RULE_ORDER = ("size", "max-line", "mean-line", "non-alnum", "autogen")

DEFAULT_AUTOGEN_MARKERS = (
    "auto-generated",
    "autogenerated",
    "automatically generated",
    "do not edit",
)


@dataclass(frozen=True)
class FilterRuleSet:
    max_file_bytes: int = 1_048_576
    max_line_chars: int = 1000
    max_mean_line_chars: float = 100.0
    max_non_alnum_fraction: float = 0.25
    autogen_markers: tuple[str, ...] = DEFAULT_AUTOGEN_MARKERS
    autogen_lines: int = 5

    def __post_init__(self):
        for name in ("max_file_bytes", "max_line_chars", "max_mean_line_chars", "max_non_alnum_fraction", "autogen_lines"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.autogen_markers:
            raise ValueError("autogen_markers must not be empty")


@dataclass(frozen=True)
class FilterVerdict:
    file_id: str
    kept: bool
    rejected_by: str | None = None


@dataclass
class FilterReport:
    """Per-language kept/rejected counts, plus dedup removals once known."""

    kept: Counter = field(default_factory=Counter)
    rejected: dict[str, Counter] = field(default_factory=dict)
    deduplicated: Counter = field(default_factory=Counter)

    def record(self, language: str, verdict: FilterVerdict) -> None:
        if verdict.kept:
            self.kept[language] += 1
        else:
            self.rejected.setdefault(language, Counter())[verdict.rejected_by] += 1

    def to_json(self) -> dict:
        langs = sorted(set(self.kept) | set(self.rejected) | set(self.deduplicated))
        out = {}
        for lang in langs:
            rej = self.rejected.get(lang, Counter())
            total = self.kept[lang] + sum(rej.values())
            removed = sum(rej.values())
            out[lang] = {
                "total": total,
                "kept": self.kept[lang],
                "rejected": {rule: rej.get(rule, 0) for rule in RULE_ORDER},
                "filtered_fraction": removed / total if total else 0.0,
                "deduplicated": self.deduplicated[lang],
                "dedup_fraction": self.deduplicated[lang] / self.kept[lang] if self.kept[lang] else 0.0,
            }
        return out


def _is_autogen(sf: SourceFile, rules: FilterRuleSet) -> bool:
    head = "\n".join(sf.text.split("\n", rules.autogen_lines)[: rules.autogen_lines]).lower()
    return any(marker.lower() in head for marker in rules.autogen_markers)


def check_file(sf: SourceFile, rules: FilterRuleSet) -> FilterVerdict:
    if sf.byte_size > rules.max_file_bytes:
        rule = "size"
    elif sf.max_line_chars > rules.max_line_chars:
        rule = "max-line"
    elif sf.mean_line_chars > rules.max_mean_line_chars:
        rule = "mean-line"
    elif sf.non_alnum_fraction > rules.max_non_alnum_fraction:
        rule = "non-alnum"
    elif _is_autogen(sf, rules):
        rule = "autogen"
    else:
        return FilterVerdict(sf.file_id, True)
    return FilterVerdict(sf.file_id, False, rule)


def apply_filters(
    files: Iterable[SourceFile], rules: FilterRuleSet | None = None, report: FilterReport | None = None
) -> Iterator[tuple[SourceFile, FilterVerdict]]:
    """Emit a verdict for every file, updating ``report`` counts when given."""
    rules = rules or FilterRuleSet()
    for sf in files:
        verdict = check_file(sf, rules)
        if report is not None:
            report.record(sf.subject_language.value, verdict)
        yield sf, verdict


def dedup_by_hash(files: Iterable[SourceFile], report: FilterReport | None = None) -> list[SourceFile]:
    """Keep the first file per content hash in ``(repo_id, rel_path)`` order."""
    ordered = sorted(files, key=lambda f: (f.repo_id, f.rel_path))
    seen: set[str] = set()
    out = []
    for sf in ordered:
        if sf.content_hash in seen:
            if report is not None:
                report.deduplicated[sf.subject_language.value] += 1
            continue
        seen.add(sf.content_hash)
        out.append(sf)
    return out


def filter_and_dedup(
    files: Iterable[SourceFile], rules: FilterRuleSet | None = None
) -> tuple[list[SourceFile], FilterReport]:
    report = FilterReport()
    kept = [sf for sf, v in apply_filters(files, rules, report) if v.kept]
    return dedup_by_hash(kept, report), report
