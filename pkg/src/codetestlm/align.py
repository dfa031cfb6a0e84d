"""Test-file detection and code/test file alignment.

A code file ``<CFN>`` is paired with a test file named ``test_<CFN>``,
``<CFN>_test``, ``<CFN>Test`` or ``Test<CFN>``.  Code files left without such
a partner are matched by normalized Levenshtein similarity between stems,
after one test marker is stripped from the test stem.  Matching happens
within a repository and a subject language.  Every file ends up in at most
one pair.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from typing import Iterable

from .common import Language, short_id
from .ingest import SourceFile

DEFAULT_FUZZY_THRESHOLD = 0.85

TEST_DIR_SEGMENTS = frozenset({"test", "tests"})

_JAVA_TEST_PREFIX = re.compile(r"^Test[A-Z0-9_]")
_MARKER_PREFIXES = ("test_", "Test")
_MARKER_SUFFIXES = ("_test", "Tests", "Test")


class MatchKind(str, Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"


@dataclass(frozen=True)
class CodeTestPair:
    repo_id: str
    code_file_id: str
    test_file_id: str
    code_path: str
    test_path: str
    subject_language: Language
    match_kind: MatchKind
    score: float

    @property
    def pair_id(self) -> str:
        return short_id(self.repo_id, self.code_path, self.test_path)

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "repo_id": self.repo_id,
            "code_file_id": self.code_file_id,
            "test_file_id": self.test_file_id,
            "code_path": self.code_path,
            "test_path": self.test_path,
            "subject_language": self.subject_language.value,
            "match_kind": self.match_kind.value,
            "score": self.score,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CodeTestPair":
        return cls(
            repo_id=d["repo_id"],
            code_file_id=d["code_file_id"],
            test_file_id=d["test_file_id"],
            code_path=d["code_path"],
            test_path=d["test_path"],
            subject_language=Language(d["subject_language"]),
            match_kind=MatchKind(d["match_kind"]),
            score=float(d["score"]),
        )


def _split_path(rel_path: str) -> tuple[list[str], str]:
    parts = rel_path.split("/")
    name = parts[-1]
    stem = name.rsplit(".", 1)[0] if "." in name else name
    return parts[:-1], stem


def has_test_name(stem: str, language: Language) -> bool:
    if language is Language.PYTHON:
        return stem.startswith("test_") or stem.endswith("_test")
    return bool(_JAVA_TEST_PREFIX.match(stem)) or (
        (stem.endswith("Test") and len(stem) > 4) or (stem.endswith("Tests") and len(stem) > 5)
    )


def is_test_path(rel_path: str, language: Language) -> bool:
    """True when the file name follows a test naming convention or it sits in a test directory."""
    dirs, stem = _split_path(rel_path)
    if not stem:
        raise ValueError("empty path")
    return has_test_name(stem, language) or any(d in TEST_DIR_SEGMENTS for d in dirs)


def is_test_file(sf: SourceFile) -> bool:
    return is_test_path(sf.rel_path, sf.subject_language)


def strip_test_marker(test_stem: str) -> str | None:
    """Remove one test marker from a stem; None when the stem carries none."""
    for prefix in _MARKER_PREFIXES:
        if test_stem.startswith(prefix) and len(test_stem) > len(prefix):
            return test_stem[len(prefix):]
    for suffix in _MARKER_SUFFIXES:
        if test_stem.endswith(suffix) and len(test_stem) > len(suffix):
            return test_stem[: -len(suffix)]
    return None


def exact_test_names(code_stem: str) -> set[str]:
    return {f"test_{code_stem}", f"{code_stem}_test", f"{code_stem}Test", f"Test{code_stem}"}


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(code_stem: str, test_stem: str) -> float:
    """``1 - dist / max(len)`` over case-folded stems.

    Callers strip test markers first; the function itself is symmetric.
    """
    a, b = code_stem.casefold(), test_stem.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def dir_distance(path_a: str, path_b: str) -> int:
    """Number of directory hops between the parent directories of two paths."""
    da, _ = _split_path(path_a)
    db, _ = _split_path(path_b)
    common = 0
    for x, y in zip(da, db):
        if x != y:
            break
        common += 1
    return len(da) + len(db) - 2 * common


def _greedy(edges: list[tuple], used_code: set[str], used_test: set[str]) -> list[tuple]:
    chosen = []
    for edge in edges:
        code, test = edge[-2], edge[-1]
        if code.file_id in used_code or test.file_id in used_test:
            continue
        used_code.add(code.file_id)
        used_test.add(test.file_id)
        chosen.append(edge)
    return chosen


def _align_group(files: list[SourceFile], fuzzy_threshold: float) -> list[CodeTestPair]:
    code_files = [f for f in files if not is_test_file(f)]
    test_files = [f for f in files if is_test_file(f)]
    used_code: set[str] = set()
    used_test: set[str] = set()
    pairs = []

    exact_edges = []
    for cf in code_files:
        names = exact_test_names(cf.stem)
        for tf in test_files:
            if tf.stem in names:
                exact_edges.append((dir_distance(cf.rel_path, tf.rel_path), cf.rel_path, tf.rel_path, cf, tf))
    exact_edges.sort(key=lambda e: e[:3])
    for *_, cf, tf in _greedy(exact_edges, used_code, used_test):
        pairs.append((cf, tf, MatchKind.EXACT, 1.0))

    fuzzy_edges = []
    for tf in test_files:
        if tf.file_id in used_test:
            continue
        stripped = strip_test_marker(tf.stem)
        if stripped is None:
            continue
        for cf in code_files:
            if cf.file_id in used_code:
                continue
            score = name_similarity(cf.stem, stripped)
            if score > fuzzy_threshold:
                fuzzy_edges.append((-score, dir_distance(cf.rel_path, tf.rel_path), cf.rel_path, tf.rel_path, cf, tf))
    fuzzy_edges.sort(key=lambda e: e[:4])
    for neg_score, *_, cf, tf in _greedy(fuzzy_edges, used_code, used_test):
        pairs.append((cf, tf, MatchKind.FUZZY, -neg_score))

    return [
        CodeTestPair(cf.repo_id, cf.file_id, tf.file_id, cf.rel_path, tf.rel_path, cf.subject_language, kind, score)
        for cf, tf, kind, score in pairs
    ]


def align_pairs(files: Iterable[SourceFile], fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD) -> list[CodeTestPair]:
    """Pair code files with test files, exact patterns first, then fuzzy names.

    Fuzzy candidates need a score strictly above ``fuzzy_threshold``; remaining
    conflicts are resolved greedily by descending score, then directory
    distance, then code path.
    """
    key = lambda f: (f.repo_id, f.subject_language.value)
    out: list[CodeTestPair] = []
    for _, group in groupby(sorted(files, key=lambda f: (*key(f), f.rel_path)), key=key):
        out.extend(_align_group(list(group), fuzzy_threshold))
    out.sort(key=lambda p: (p.repo_id, p.code_path, p.test_path))
    return out
