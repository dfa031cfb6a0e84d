"""Training documents, token-length statistics and fixed-length packing."""

from __future__ import annotations

import random
import struct
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .align import CodeTestPair, is_test_file
from .ingest import SourceFile
from .tokenizer import CODETESTPAIR, EOS, PAD, Vocabulary

DEFAULT_CONTEXT_LENGTH = 8192
REFERENCE_WINDOWS = (2048, 8192)


class DocKind(str, Enum):
    PAIRED = "paired"
    CODE_ONLY = "code"
    TEST_ONLY = "test"


_KIND_CODES = {DocKind.PAIRED: 0, DocKind.CODE_ONLY: 1, DocKind.TEST_ONLY: 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


@dataclass(frozen=True)
class TrainingDocument:
    kind: DocKind
    token_ids: tuple[int, ...]
    repo_id: str
    code_file_id: str | None = None
    test_file_id: str | None = None

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def file_ids(self) -> tuple[str, ...]:
        return tuple(f for f in (self.code_file_id, self.test_file_id) if f is not None)


def paired_tokens(vocab: Vocabulary, code_text: str, test_text: str) -> list[int]:
    """Code tokens, then the separator, then test tokens."""
    return vocab.encode(code_text) + [CODETESTPAIR] + vocab.encode(test_text)


def build_documents(
    files: Sequence[SourceFile], pairs: Sequence[CodeTestPair], vocab: Vocabulary
) -> list[TrainingDocument]:
    """One paired document per pair, then one single-file document per unpaired file."""
    by_id = {f.file_id: f for f in files}
    docs = []
    paired: set[str] = set()
    for p in pairs:
        missing = [fid for fid in (p.code_file_id, p.test_file_id) if fid not in by_id]
        if missing:
            raise ValueError(f"pair {p.pair_id} references files not in the corpus: {missing}")
        if p.code_file_id in paired or p.test_file_id in paired:
            raise ValueError(f"pair {p.pair_id} reuses a file that is already paired")
        code, test = by_id[p.code_file_id], by_id[p.test_file_id]
        paired.update((p.code_file_id, p.test_file_id))
        docs.append(
            TrainingDocument(
                DocKind.PAIRED,
                tuple(paired_tokens(vocab, code.text, test.text)),
                p.repo_id,
                p.code_file_id,
                p.test_file_id,
            )
        )
    for f in files:
        if f.file_id in paired:
            continue
        if is_test_file(f):
            docs.append(TrainingDocument(DocKind.TEST_ONLY, tuple(vocab.encode(f.text)), f.repo_id, None, f.file_id))
        else:
            docs.append(TrainingDocument(DocKind.CODE_ONLY, tuple(vocab.encode(f.text)), f.repo_id, f.file_id, None))
    return docs


@dataclass
class LengthStats:
    lengths: np.ndarray

    @classmethod
    def of(cls, lengths: Iterable[int]) -> "LengthStats":
        return cls(np.sort(np.fromiter(lengths, dtype=np.int64)))

    @property
    def count(self) -> int:
        return int(self.lengths.size)

    def fraction_within(self, context_length: float) -> float:
        """Fraction of documents with at most ``context_length`` tokens (1.0 when empty)."""
        if self.count == 0:
            return 1.0
        return int(np.searchsorted(self.lengths, context_length, side="right")) / self.count

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct lengths and the cumulative fraction of documents at or below each."""
        values, counts = np.unique(self.lengths, return_counts=True)
        return values, np.cumsum(counts) / max(self.count, 1)

    def histogram(self, bins: int | Sequence[float] = 20) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.lengths, bins=bins)

    def to_json(self, windows: Sequence[int] = REFERENCE_WINDOWS) -> dict:
        return {
            "count": self.count,
            "total_tokens": int(self.lengths.sum()),
            "mean": float(self.lengths.mean()) if self.count else 0.0,
            "median": float(np.median(self.lengths)) if self.count else 0.0,
            "max": int(self.lengths.max()) if self.count else 0,
            "fraction_within": {str(w): self.fraction_within(w) for w in windows},
        }


@dataclass
class CorpusStats:
    overall: LengthStats
    by_kind: dict[DocKind, LengthStats]

    @property
    def histogram(self) -> Counter:
        return Counter(self.overall.lengths.tolist())

    def fraction_within(self, context_length: float) -> float:
        return self.overall.fraction_within(context_length)

    def paired_fraction_within(self, context_length: float) -> float:
        return self.by_kind[DocKind.PAIRED].fraction_within(context_length)

    @property
    def kind_counts(self) -> dict[str, int]:
        return {k.value: v.count for k, v in self.by_kind.items()}

    def to_json(self, windows: Sequence[int] = REFERENCE_WINDOWS) -> dict:
        return {
            "all": self.overall.to_json(windows),
            "by_kind": {k.value: v.to_json(windows) for k, v in self.by_kind.items()},
            # full-scale values reported for the paired subset; annotations, not checks
            "reference_paired_fraction_within": {"2048": 0.35, "8192": 0.82},
        }


def compute_stats(docs: Iterable[TrainingDocument | Sequence[int]]) -> CorpusStats:
    by_kind: dict[DocKind, list[int]] = {k: [] for k in DocKind}
    all_lengths = []
    for d in docs:
        n = len(d)
        all_lengths.append(n)
        if isinstance(d, TrainingDocument):
            by_kind[d.kind].append(n)
    return CorpusStats(LengthStats.of(all_lengths), {k: LengthStats.of(v) for k, v in by_kind.items()})


@dataclass
class PackedSequence:
    token_ids: np.ndarray
    doc_boundary_offsets: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.token_ids.size)

    @property
    def n_real(self) -> int:
        return int(np.count_nonzero(self.token_ids != PAD))


def _units(docs: Sequence[Sequence[int]], length: int, rng: random.Random) -> list[list[int]]:
    """Split each document into packing units; overlong ones are cut on a random offset grid.

    The final unit of every document carries its trailing EOS.
    """
    units = []
    for d in docs:
        toks = list(d) + [EOS]
        if len(toks) <= length:
            units.append(toks)
            continue
        offset = rng.randrange(1, length) if length > 1 else 1
        cuts = [0] + list(range(offset, len(toks), length)) + [len(toks)]
        units.extend(toks[a:b] for a, b in zip(cuts, cuts[1:]) if b > a)
    return units


def pack_sequences(
    docs: Sequence[TrainingDocument | Sequence[int]], length: int = DEFAULT_CONTEXT_LENGTH, seed: int = 0
) -> list[PackedSequence]:
    """Shuffle, concatenate with EOS after each document and cut into ``length``-token windows.

    Documents longer than ``length`` are chunked at a seeded offset grid and
    their chunks shuffled with everything else.  Only the last window is
    PAD-filled.
    """
    if length <= 0:
        raise ValueError("sequence length must be positive")
    rng = random.Random(seed)
    raw = [d.token_ids if isinstance(d, TrainingDocument) else d for d in docs]
    units = _units(raw, length, rng)
    rng.shuffle(units)
    stream: list[int] = []
    starts: list[int] = []
    for u in units:
        starts.append(len(stream))
        stream.extend(u)
    out = []
    si = 0
    for begin in range(0, len(stream), length):
        window = stream[begin : begin + length]
        offsets = []
        while si < len(starts) and starts[si] < begin + length:
            offsets.append(starts[si] - begin)
            si += 1
        arr = np.full(length, PAD, dtype=np.int32)
        arr[: len(window)] = window
        out.append(PackedSequence(arr, offsets))
    return out


# Binary corpus: header, little-endian uint32 tokens, footer index.
_MAGIC = b"CTLMCORP"
_VERSION = 1
_HEADER = struct.Struct("<8sII32sQQ")
_FOOTER_TAIL = struct.Struct("<Q8s")


def write_corpus(path: str | Path, docs: Sequence[TrainingDocument], vocab_digest: str, context_length: int) -> None:
    """Write documents back to back; the footer holds each document's start offset and kind."""
    offsets = np.zeros(len(docs) + 1, dtype="<u8")
    kinds = np.array([_KIND_CODES[d.kind] for d in docs], dtype="<u1")
    for i, d in enumerate(docs):
        offsets[i + 1] = offsets[i] + len(d)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, context_length, bytes.fromhex(vocab_digest), int(offsets[-1]), len(docs)))
        for d in docs:
            fh.write(np.asarray(d.token_ids, dtype="<u4").tobytes())
        footer_start = fh.tell()
        fh.write(offsets.tobytes())
        fh.write(kinds.tobytes())
        fh.write(_FOOTER_TAIL.pack(footer_start, _MAGIC))


@dataclass
class CorpusFile:
    context_length: int
    vocab_digest: str
    tokens: np.ndarray
    offsets: np.ndarray
    kinds: list[DocKind]

    def documents(self) -> Iterator[np.ndarray]:
        for a, b in zip(self.offsets[:-1], self.offsets[1:]):
            yield self.tokens[a:b]


def read_corpus(path: str | Path) -> CorpusFile:
    data = Path(path).read_bytes()
    magic, version, ctx, digest, n_tokens, n_docs = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a corpus file")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported corpus version {version}")
    footer_start, tail_magic = _FOOTER_TAIL.unpack_from(data, len(data) - _FOOTER_TAIL.size)
    if tail_magic != _MAGIC:
        raise ValueError(f"{path}: truncated corpus file")
    tokens = np.frombuffer(data, dtype="<u4", count=n_tokens, offset=_HEADER.size)
    offsets = np.frombuffer(data, dtype="<u8", count=n_docs + 1, offset=footer_start)
    kinds = np.frombuffer(data, dtype="<u1", count=n_docs, offset=footer_start + offsets.nbytes)
    return CorpusFile(ctx, digest.hex(), tokens, offsets, [_CODE_KINDS[int(k)] for k in kinds])
