"""Byte-level BPE tokenizer with reserved special tokens.

Ids 0-255 are raw bytes, so every string is encodable.  The four specials
follow at fixed ids 256-259 and merges take ids from 260 upward.  Text is
pre-split into word, punctuation-run and whitespace-run chunks; merges never
cross a chunk boundary.  Encoding applies learned merges lowest-rank first,
which reproduces the training-time segmentation.

Special tokens are never produced from raw text: a literal
``<|codetestpair|>`` in a file is encoded as ordinary bytes.
"""

from __future__ import annotations

import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .common import sha256_hex

PAD, BOS, EOS, CODETESTPAIR = 256, 257, 258, 259
SPECIALS = {
    PAD: "<|pad|>",
    BOS: "<|bos|>",
    EOS: "<|endoftext|>",
    CODETESTPAIR: "<|codetestpair|>",
}
SEPARATOR_TEXT = SPECIALS[CODETESTPAIR]
FIRST_MERGE_ID = 260
DEFAULT_VOCAB_SIZE = 64_000
VOCAB_FORMAT = "codetestlm-vocab v1"

_CHUNK = re.compile(r"\w+|[^\w\s]+|\s+")


def pretokenize(text: str) -> list[bytes]:
    return [m.group().encode("utf-8", errors="surrogatepass") for m in _CHUNK.finditer(text)]


@dataclass
class Vocabulary:
    merges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.pieces: list[bytes] = [bytes([i]) for i in range(256)]
        self.pieces += [SPECIALS[i].encode() for i in sorted(SPECIALS)]
        self.ranks: dict[tuple[int, int], int] = {}
        for rank, (a, b) in enumerate(self.merges):
            if a in SPECIALS or b in SPECIALS or max(a, b) >= len(self.pieces):
                raise ValueError(f"merge {rank} references an invalid id")
            self.ranks[(a, b)] = rank
            self.pieces.append(self.pieces[a] + self.pieces[b])
        self.ids = {}
        for i, piece in enumerate(self.pieces):
            if i not in SPECIALS:
                self.ids.setdefault(piece, i)
        self._encode_chunk = lru_cache(maxsize=1 << 16)(self._encode_chunk_uncached)

    @property
    def size(self) -> int:
        return len(self.pieces)

    @property
    def digest(self) -> str:
        return sha256_hex(self.dumps())

    def _encode_chunk_uncached(self, chunk: bytes) -> tuple[int, ...]:
        ids = list(chunk)
        ranks = self.ranks
        while len(ids) > 1:
            best = None
            best_rank = None
            for i in range(len(ids) - 1):
                r = ranks.get((ids[i], ids[i + 1]))
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = i, r
            if best is None:
                break
            ids[best : best + 2] = [FIRST_MERGE_ID + best_rank]
        return tuple(ids)

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        for chunk in pretokenize(text):
            out.extend(self._encode_chunk(chunk))
        return out

    def decode_bytes(self, ids: Iterable[int]) -> bytes:
        n = len(self.pieces)
        buf = bytearray()
        for i in ids:
            if not 0 <= i < n:
                raise ValueError(f"token id {i} out of range for vocabulary of size {n}")
            buf += self.pieces[i]
        return bytes(buf)

    def decode(self, ids: Iterable[int]) -> str:
        data = self.decode_bytes(ids)
        try:
            return data.decode("utf-8", errors="surrogatepass")
        except UnicodeDecodeError:
            return data.decode("utf-8", errors="replace")

    def dumps(self) -> str:
        lines = [
            VOCAB_FORMAT,
            "specials " + " ".join(f"{SPECIALS[i]}={i}" for i in sorted(SPECIALS)),
            f"merges {len(self.merges)}",
        ]
        for rank, (a, b) in enumerate(self.merges):
            lines.append(f"{FIRST_MERGE_ID + rank} {a} {b} {self.pieces[FIRST_MERGE_ID + rank].hex()}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if not lines or lines[0] != VOCAB_FORMAT:
            raise ValueError("not a vocabulary file (bad header)")
        expected_specials = "specials " + " ".join(f"{SPECIALS[i]}={i}" for i in sorted(SPECIALS))
        if lines[1] != expected_specials:
            raise ValueError("vocabulary specials do not match this tokenizer version")
        count = int(lines[2].split()[1])
        merges = []
        for line in lines[3 : 3 + count]:
            idx, a, b, _hex = line.split()
            if int(idx) != FIRST_MERGE_ID + len(merges):
                raise ValueError(f"merge lines out of order at id {idx}")
            merges.append((int(a), int(b)))
        if len(merges) != count:
            raise ValueError("truncated vocabulary file")
        return cls(merges)

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def sample_training_lines(
    texts: Iterable[str], lines_per_file: int = 10, seed: int = 0, byte_budget: int | None = None
) -> list[str]:
    """Pick up to ``lines_per_file`` random lines (newline kept) from each text."""
    rng = random.Random(seed)
    out: list[str] = []
    used = 0
    for text in texts:
        lines = text.splitlines(keepends=True)
        if len(lines) > lines_per_file:
            idx = sorted(rng.sample(range(len(lines)), lines_per_file))
            lines = [lines[i] for i in idx]
        for line in lines:
            size = len(line.encode("utf-8", errors="surrogatepass"))
            if byte_budget is not None and used + size > byte_budget:
                return out
            out.append(line)
            used += size
    return out


def train_bpe(lines: Sequence[str], target_size: int) -> Vocabulary:
    """Greedy BPE over chunk frequencies until ``target_size`` or no pair occurs twice.

    Ties on pair frequency go to the pair whose (left, right) byte strings
    sort first.
    """
    if target_size <= FIRST_MERGE_ID:
        raise ValueError(f"target_size must exceed {FIRST_MERGE_ID} (256 bytes + {len(SPECIALS)} specials)")
    chunk_freq: Counter[bytes] = Counter()
    for line in lines:
        chunk_freq.update(pretokenize(line))
    if not chunk_freq:
        raise ValueError("cannot train a vocabulary on an empty corpus")

    words = [list(chunk) for chunk in chunk_freq]
    freqs = list(chunk_freq.values())
    pieces: list[bytes] = [bytes([i]) for i in range(256)] + [b""] * len(SPECIALS)
    pair_counts: Counter[tuple[int, int]] = Counter()
    where: dict[tuple[int, int], set[int]] = defaultdict(set)
    for wi, w in enumerate(words):
        for pair in zip(w, w[1:]):
            pair_counts[pair] += freqs[wi]
            where[pair].add(wi)

    merges: list[tuple[int, int]] = []
    while FIRST_MERGE_ID + len(merges) < target_size and pair_counts:
        best = min(pair_counts, key=lambda p: (-pair_counts[p], pieces[p[0]], pieces[p[1]]))
        if pair_counts[best] < 2:
            break
        new_id = FIRST_MERGE_ID + len(merges)
        merges.append(best)
        pieces.append(pieces[best[0]] + pieces[best[1]])
        a, b = best
        for wi in sorted(where.pop(best, ())):
            w = words[wi]
            f = freqs[wi]
            for pair in zip(w, w[1:]):
                pair_counts[pair] -= f
                if pair_counts[pair] <= 0:
                    del pair_counts[pair]
            merged = []
            i = 0
            while i < len(w):
                if i + 1 < len(w) and w[i] == a and w[i + 1] == b:
                    merged.append(new_id)
                    i += 2
                else:
                    merged.append(w[i])
                    i += 1
            words[wi] = merged
            for pair in zip(merged, merged[1:]):
                pair_counts[pair] += f
                where[pair].add(wi)
        pair_counts.pop(best, None)
    return Vocabulary(merges)


def train_vocab(
    texts: Iterable[str],
    target_size: int = DEFAULT_VOCAB_SIZE,
    lines_per_file: int = 10,
    seed: int = 0,
    byte_budget: int | None = None,
) -> Vocabulary:
    """Sample lines from each file text and train a BPE vocabulary on them."""
    if target_size <= FIRST_MERGE_ID:
        raise ValueError(f"target_size must exceed {FIRST_MERGE_ID} (256 bytes + {len(SPECIALS)} specials)")
    lines = sample_training_lines(texts, lines_per_file, seed, byte_budget)
    return train_bpe(lines, target_size)
