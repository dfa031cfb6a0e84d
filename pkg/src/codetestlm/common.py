"""Small shared pieces: subject languages, jsonl I/O and digests."""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator


class Language(str, Enum):
    PYTHON = "python"
    JAVA = "java"


DEFAULT_EXTENSIONS = {".py": Language.PYTHON, ".java": Language.JAVA}

META_KEY = "_meta"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def short_id(*parts: str, length: int = 16) -> str:
    return hashlib.sha1("\x1f".join(parts).encode("utf-8")).hexdigest()[:length]


def write_jsonl(path: str | Path, records: Iterable[dict], meta: dict | None = None) -> int:
    """Write records one per line; an optional leading ``_meta`` record carries run metadata.

    Returns the number of data records written.
    """
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta is not None:
            fh.write(canonical_json({META_KEY: meta}) + "\n")
        for rec in records:
            fh.write(canonical_json(rec) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if META_KEY in rec and len(rec) == 1:
                continue
            yield rec


def read_jsonl_meta(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return None
    rec = json.loads(first)
    if META_KEY in rec and len(rec) == 1:
        return rec[META_KEY]
    return None
