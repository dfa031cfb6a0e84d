"""Scan local repository checkouts into repository and source-file records.

The input is a directory of checkouts plus a ``repos.jsonl`` sidecar with one
record per repository::

    {"owner_name": "alice/parser", "star_count": 42, "is_fork": false,
     "subject_language": "python", "path": "alice/parser"}

``path`` is optional and defaults to ``owner_name``; it is resolved relative
to the scan root.  Files are classified strictly by extension.

Line statistics are computed on the lossily decoded text.  Lines are the
pieces of ``text.split("\\n")`` with the empty piece after a final newline
dropped; the newline itself is not counted in any line length.  So
``mean_line_chars * line_count + newline_count == len(text)`` where
``newline_count`` is ``line_count`` or ``line_count - 1``.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .common import DEFAULT_EXTENSIONS, Language, read_jsonl

logger = logging.getLogger(__name__)

DEFAULT_MIN_STARS = 10
DEFAULT_TEST_REPOS_PER_LANGUAGE = 500
HASH_ALGORITHMS = ("md5", "blake2b-128")


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class RepoRecord:
    repo_id: str
    owner_name: str
    star_count: int
    subject_language: Language
    is_fork: bool
    root_path: str
    split: Split | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["subject_language"] = self.subject_language.value
        d["split"] = self.split.value if self.split else None
        return d

    @classmethod
    def from_json(cls, d: Mapping) -> "RepoRecord":
        return cls(
            repo_id=d["repo_id"],
            owner_name=d["owner_name"],
            star_count=int(d["star_count"]),
            subject_language=Language(d["subject_language"]),
            is_fork=bool(d["is_fork"]),
            root_path=d["root_path"],
            split=Split(d["split"]) if d.get("split") else None,
        )


@dataclass(frozen=True)
class SourceFile:
    file_id: str
    repo_id: str
    rel_path: str
    subject_language: Language
    content: bytes = field(repr=False)
    byte_size: int
    line_count: int
    max_line_chars: int
    mean_line_chars: float
    non_alnum_fraction: float
    content_hash: str
    content_ref: str = ""

    @property
    def text(self) -> str:
        return self.content.decode("utf-8", errors="replace")

    @property
    def name(self) -> str:
        return self.rel_path.rsplit("/", 1)[-1]

    @property
    def stem(self) -> str:
        return self.name.rsplit(".", 1)[0]

    def to_json(self) -> dict:
        return {
            "file_id": self.file_id,
            "repo_id": self.repo_id,
            "rel_path": self.rel_path,
            "subject_language": self.subject_language.value,
            "content_ref": self.content_ref,
            "byte_size": self.byte_size,
            "line_count": self.line_count,
            "max_line_chars": self.max_line_chars,
            "mean_line_chars": self.mean_line_chars,
            "non_alnum_fraction": self.non_alnum_fraction,
            "content_hash": self.content_hash,
        }


@dataclass
class IngestConfig:
    extensions: Mapping[str, Language] = field(default_factory=lambda: dict(DEFAULT_EXTENSIONS))
    min_stars: int = DEFAULT_MIN_STARS
    hash_algorithm: str = "md5"
    workers: int = 4
    skip_dirs: tuple[str, ...] = (".git", ".hg", ".svn", "__pycache__", "node_modules")


def content_digest(data: bytes, algorithm: str = "md5") -> str:
    """128-bit digest of raw bytes, hex encoded."""
    if algorithm == "md5":
        return hashlib.md5(data).hexdigest()
    if algorithm == "blake2b-128":
        return hashlib.blake2b(data, digest_size=16).hexdigest()
    raise ValueError(f"unknown hash algorithm {algorithm!r}; expected one of {HASH_ALGORITHMS}")


def split_lines(text: str) -> list[str]:
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    return lines


def line_stats(text: str) -> tuple[int, int, float, float]:
    """Return ``(line_count, max_line_chars, mean_line_chars, non_alnum_fraction)``.

    The non-alphanumeric fraction counts characters outside ``[A-Za-z0-9]``
    among all non-whitespace characters (0 when there are none).
    """
    lines = split_lines(text)
    n = len(lines)
    lengths = [len(line) for line in lines]
    max_len = max(lengths, default=0)
    mean_len = sum(lengths) / n if n else 0.0
    visible = 0
    non_alnum = 0
    for ch in text:
        if ch.isspace():
            continue
        visible += 1
        if not (ch.isascii() and ch.isalnum()):
            non_alnum += 1
    frac = non_alnum / visible if visible else 0.0
    return n, max_len, mean_len, frac


def make_source_file(
    repo_id: str,
    rel_path: str,
    language: Language,
    content: bytes,
    hash_algorithm: str = "md5",
    content_ref: str = "",
) -> SourceFile:
    text = content.decode("utf-8", errors="replace")
    n, max_len, mean_len, frac = line_stats(text)
    return SourceFile(
        file_id=f"{repo_id}:{rel_path}",
        repo_id=repo_id,
        rel_path=rel_path,
        subject_language=language,
        content=content,
        byte_size=len(content),
        line_count=n,
        max_line_chars=max_len,
        mean_line_chars=mean_len,
        non_alnum_fraction=frac,
        content_hash=content_digest(content, hash_algorithm),
        content_ref=content_ref or rel_path,
    )


def load_repo_metadata(root: str | Path, config: IngestConfig | None = None) -> list[RepoRecord]:
    """Read ``repos.jsonl`` and drop forks and repositories under the star minimum."""
    config = config or IngestConfig()
    root = Path(root)
    kept = []
    for rec in read_jsonl(root / "repos.jsonl"):
        owner = rec["owner_name"]
        stars = int(rec["star_count"])
        if rec.get("is_fork", False):
            logger.info("skipping fork %s", owner)
            continue
        if stars < config.min_stars:
            logger.info("skipping %s: %d stars < %d", owner, stars, config.min_stars)
            continue
        kept.append(
            RepoRecord(
                repo_id=owner,
                owner_name=owner,
                star_count=stars,
                subject_language=Language(rec["subject_language"]),
                is_fork=False,
                root_path=str(rec.get("path") or owner),
            )
        )
    kept.sort(key=lambda r: r.repo_id)
    return kept


def _walk_repo(root: Path, repo: RepoRecord, config: IngestConfig) -> list[SourceFile] | None:
    repo_dir = root / repo.root_path
    if not repo_dir.is_dir():
        logger.warning("repository %s: %s is not a readable directory", repo.repo_id, repo_dir)
        return None
    found: list[str] = []

    def onerror(err: OSError) -> None:
        logger.warning("repository %s: cannot list %s: %s", repo.repo_id, err.filename, err.strerror)

    for dirpath, dirnames, filenames in os.walk(repo_dir, onerror=onerror):
        dirnames[:] = sorted(d for d in dirnames if d not in config.skip_dirs)
        for name in filenames:
            ext = os.path.splitext(name)[1]
            if ext not in config.extensions:
                continue
            rel = os.path.relpath(os.path.join(dirpath, name), repo_dir).replace(os.sep, "/")
            found.append(rel)
    files = []
    for rel in sorted(found):
        path = repo_dir / rel
        try:
            data = path.read_bytes()
        except OSError as exc:
            logger.warning("repository %s: skipping unreadable file %s: %s", repo.repo_id, rel, exc)
            continue
        lang = config.extensions[os.path.splitext(rel)[1]]
        content_ref = f"{repo.root_path}/{rel}"
        files.append(make_source_file(repo.repo_id, rel, Language(lang), data, config.hash_algorithm, content_ref))
    return files


def scan_repositories(
    root: str | Path, config: IngestConfig | None = None
) -> Iterator[tuple[RepoRecord, list[SourceFile]]]:
    """Yield every retained repository with its source files in sorted path order.

    Repositories are walked in parallel; output order is by ``repo_id``.
    Unreadable repositories and files are skipped with a logged warning.
    """
    config = config or IngestConfig()
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"scan root {root} does not exist")
    repos = load_repo_metadata(root, config)
    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        for repo, files in zip(repos, pool.map(lambda r: _walk_repo(root, r, config), repos)):
            if files is None:
                continue
            yield repo, files


def assign_split(
    repos: Iterable[RepoRecord], test_count_per_language: int, seed: int, pinned_test: Iterable[str] = ()
) -> list[RepoRecord]:
    """Mark exactly ``test_count_per_language`` repositories of each language as Test.

    Repositories named in ``pinned_test`` are Test and count toward the
    quota; the rest is a seeded sample over repositories sorted by id, so it
    depends only on the set of ids and the seed.
    """
    repos = sorted(repos, key=lambda r: r.repo_id)
    pinned = set(pinned_test)
    unknown = pinned - {r.repo_id for r in repos}
    if unknown:
        raise ValueError(f"pinned test repositories not found: {sorted(unknown)}")
    for r in repos:
        if r.split is not None:
            raise ValueError(f"repository {r.repo_id} already has split {r.split.value}")
    by_lang: dict[Language, list[RepoRecord]] = {}
    for r in repos:
        by_lang.setdefault(r.subject_language, []).append(r)
    test_ids: set[str] = set(pinned)
    for lang in sorted(by_lang, key=lambda l: l.value):
        group = by_lang[lang]
        if len(group) < test_count_per_language:
            raise ValueError(
                f"{lang.value}: {len(group)} repositories available, "
                f"{test_count_per_language} requested for the test split"
            )
        fixed = [r for r in group if r.repo_id in pinned]
        if len(fixed) > test_count_per_language:
            raise ValueError(f"{lang.value}: more pinned test repositories than the quota")
        free = [r for r in group if r.repo_id not in pinned]
        rng = random.Random(f"{seed}:{lang.value}")
        test_ids.update(r.repo_id for r in rng.sample(free, test_count_per_language - len(fixed)))
    return [replace(r, split=Split.TEST if r.repo_id in test_ids else Split.TRAIN) for r in repos]


def load_files(path: str | Path, root: str | Path, hash_algorithm: str = "md5") -> list[SourceFile]:
    """Rehydrate ``SourceFile.to_json`` records from a jsonl file, reading content from ``root``."""
    root = Path(root)
    out = []
    for rec in read_jsonl(path):
        data = (root / rec["content_ref"]).read_bytes()
        sf = make_source_file(
            rec["repo_id"], rec["rel_path"], Language(rec["subject_language"]), data, hash_algorithm, rec["content_ref"]
        )
        if sf.content_hash != rec["content_hash"]:
            raise ValueError(f"{rec['content_ref']}: content changed since ingestion")
        out.append(sf)
    return out
