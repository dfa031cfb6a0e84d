"""Interpolated absolute-discount n-gram model over token ids.

For a context ``h`` of length ``k`` with ``c(h) > 0``::

    P(w | h) = max(c(h, w) - D, 0) / c(h) + D * N1+(h) / c(h) * P(w | h[1:])

and ``P(w | h) = P(w | h[1:])`` when the context was never seen.  The chain
ends in the uniform distribution ``1 / V``, so every probability is strictly
positive and each conditional distribution sums to one.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import pack_sequences
from .tokenizer import CODETESTPAIR, EOS, PAD

DEFAULT_ORDER = 4
DEFAULT_DISCOUNT = 0.75
DEFAULT_TEMPERATURE = 0.2
DEFAULT_NUM_SAMPLES = 10


class StopMode(str, Enum):
    ON_EOS = "eos"
    ON_METHOD_END = "method-end"


@dataclass
class SampleConfig:
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 256
    num_samples: int = DEFAULT_NUM_SAMPLES
    seed: int = 0
    stop: StopMode = StopMode.ON_EOS

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")


@dataclass
class NGramModel:
    order: int
    vocab_size: int
    discount: float = DEFAULT_DISCOUNT
    vocab_digest: str = ""
    # counts[k][context of length k][token] -> count
    counts: list[dict[tuple[int, ...], dict[int, int]]] = field(default_factory=list)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        if not self.counts:
            self.counts = [defaultdict(dict) for _ in range(self.order)]
        self._totals = [{h: sum(t.values()) for h, t in table.items()} for table in self.counts]

    @classmethod
    def uniform(cls, vocab_size: int, order: int = 2) -> "NGramModel":
        return cls(order, vocab_size)

    def _refresh(self) -> None:
        self._totals = [{h: sum(t.values()) for h, t in table.items()} for table in self.counts]

    def _context(self, history: Sequence[int]) -> tuple[int, ...]:
        k = self.order - 1
        return tuple(history[-k:]) if k else ()

    def prob(self, token: int, history: Sequence[int]) -> float:
        ctx = self._context(history)
        p = 1.0 / self.vocab_size
        for k in range(0, len(ctx) + 1):
            h = ctx[len(ctx) - k :]
            table = self.counts[k].get(h)
            if not table:
                continue
            total = self._totals[k][h]
            c = table.get(token, 0)
            p = max(c - self.discount, 0.0) / total + self.discount * len(table) / total * p
        return p

    def distribution(self, history: Sequence[int]) -> np.ndarray:
        ctx = self._context(history)
        dist = np.full(self.vocab_size, 1.0 / self.vocab_size)
        for k in range(0, len(ctx) + 1):
            h = ctx[len(ctx) - k :]
            table = self.counts[k].get(h)
            if not table:
                continue
            total = self._totals[k][h]
            dist = dist * (self.discount * len(table) / total)
            ids = np.fromiter(table.keys(), dtype=np.int64, count=len(table))
            cs = np.fromiter(table.values(), dtype=np.float64, count=len(table))
            dist[ids] += np.maximum(cs - self.discount, 0.0) / total
        return dist

    def to_json(self) -> dict:
        return {
            "format": "codetestlm-ngram v1",
            "order": self.order,
            "vocab_size": self.vocab_size,
            "discount": self.discount,
            "vocab_digest": self.vocab_digest,
            "counts": [
                [[list(h), sorted([int(t), int(c)] for t, c in table.items())] for h, table in sorted(level.items())]
                for level in self.counts
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), separators=(",", ":")), encoding="utf-8")

    @classmethod
    def from_json(cls, d: dict) -> "NGramModel":
        if d.get("format") != "codetestlm-ngram v1":
            raise ValueError("not a serialized n-gram model")
        counts = [{tuple(h): {t: c for t, c in pairs} for h, pairs in level} for level in d["counts"]]
        return cls(d["order"], d["vocab_size"], d["discount"], d["vocab_digest"], counts)

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _real_tokens(seq) -> list[int]:
    toks = seq.token_ids if hasattr(seq, "token_ids") else seq
    return [int(t) for t in toks if int(t) != PAD]


def train_lm(
    sequences: Iterable,
    vocab_size: int,
    order: int = DEFAULT_ORDER,
    discount: float = DEFAULT_DISCOUNT,
    vocab_digest: str = "",
) -> NGramModel:
    """Count every n-gram of length 1..order inside each sequence (PAD ignored)."""
    if order < 2:
        raise ValueError("order must be at least 2")
    model = NGramModel(order, vocab_size, discount, vocab_digest)
    seen = 0
    for seq in sequences:
        toks = _real_tokens(seq)
        seen += len(toks)
        for i, tok in enumerate(toks):
            if tok >= vocab_size:
                raise ValueError(f"token {tok} outside vocabulary of size {vocab_size}")
            for k in range(0, min(order - 1, i) + 1):
                table = model.counts[k][tuple(toks[i - k : i])]
                table[tok] = table.get(tok, 0) + 1
    if seen == 0:
        raise ValueError("cannot train on an empty corpus")
    model.counts = [dict(level) for level in model.counts]
    model._refresh()
    return model


def token_log_probs(model: NGramModel, tokens: Sequence[int], conditioning_prefix: Sequence[int] = ()) -> np.ndarray:
    history = list(conditioning_prefix)
    out = np.empty(len(tokens))
    for i, tok in enumerate(tokens):
        out[i] = math.log(model.prob(tok, history))
        history.append(tok)
    return out


def perplexity(model: NGramModel, tokens: Sequence[int], conditioning_prefix: Sequence[int] = ()) -> float:
    """``exp(-mean log P(token | context))``; only ``tokens`` are scored."""
    if len(tokens) == 0:
        raise ValueError("cannot score an empty sequence")
    return float(math.exp(-token_log_probs(model, tokens, conditioning_prefix).mean()))


def temper(probs: np.ndarray, temperature: float) -> np.ndarray:
    """Raise probabilities to ``1 / temperature`` and renormalize (in log space)."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    with np.errstate(divide="ignore"):
        logits = np.log(probs) / temperature
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def sample(
    model: NGramModel,
    prompt: Sequence[int],
    cfg: SampleConfig,
    method_end: Callable[[list[int]], int | None] | None = None,
) -> list[list[int]]:
    """Draw ``cfg.num_samples`` continuations of ``prompt``.

    With ``StopMode.ON_EOS`` a sample ends before the first EOS.  With
    ``StopMode.ON_METHOD_END`` ``method_end`` receives the generated ids after
    each step and returns the cut length once a whole method is present.
    """
    if cfg.stop is StopMode.ON_METHOD_END and method_end is None:
        raise ValueError("method-end stopping needs a method_end callback")
    rng = np.random.default_rng(cfg.seed)
    samples = []
    for _ in range(cfg.num_samples):
        history = list(prompt)
        out: list[int] = []
        while len(out) < cfg.max_tokens:
            p = temper(model.distribution(history), cfg.temperature)
            tok = int(rng.choice(model.vocab_size, p=p))
            if tok == EOS:
                break
            out.append(tok)
            history.append(tok)
            if cfg.stop is StopMode.ON_METHOD_END:
                cut = method_end(out)
                if cut is not None:
                    out = out[:cut]
                    break
        samples.append(out)
    return samples


@dataclass
class SignalReport:
    order: int
    seeds: list[int]
    aligned_ppl: list[float]
    shuffled_ppl: list[float]

    @property
    def deltas(self) -> list[float]:
        return [s - a for a, s in zip(self.aligned_ppl, self.shuffled_ppl)]

    @property
    def relative_deltas(self) -> list[float]:
        return [(s - a) / s for a, s in zip(self.aligned_ppl, self.shuffled_ppl)]

    @property
    def wins(self) -> int:
        return sum(a < s for a, s in zip(self.aligned_ppl, self.shuffled_ppl))

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "seeds": self.seeds,
            "aligned_ppl": self.aligned_ppl,
            "shuffled_ppl": self.shuffled_ppl,
            "mean_aligned_ppl": float(np.mean(self.aligned_ppl)),
            "mean_shuffled_ppl": float(np.mean(self.shuffled_ppl)),
            "mean_delta": float(np.mean(self.deltas)),
            "mean_relative_delta": float(np.mean(self.relative_deltas)),
            "aligned_wins": self.wins,
        }


def file_multiset(docs) -> list[tuple[int, ...]]:
    """Every file in ``docs`` as its own token tuple, paired documents split at the separator."""
    files = []
    for d in docs:
        toks = tuple(d.token_ids if hasattr(d, "token_ids") else d)
        if CODETESTPAIR in toks:
            i = toks.index(CODETESTPAIR)
            files.extend([toks[:i], toks[i + 1 :]])
        else:
            files.append(toks)
    return sorted(files)


def heldout_perplexity(model: NGramModel, heldout_pairs: Sequence[tuple[Sequence[int], Sequence[int]]]) -> float:
    """Perplexity of all test-file tokens, each file conditioned on its code file plus separator."""
    logps = [token_log_probs(model, test, list(code) + [CODETESTPAIR]) for code, test in heldout_pairs]
    return float(math.exp(-np.concatenate(logps).mean()))


def alignment_signal_experiment(
    corpus_aligned: Sequence,
    corpus_shuffled: Sequence,
    heldout_pairs: Sequence[tuple[Sequence[int], Sequence[int]]],
    vocab_size: int,
    order: int = DEFAULT_ORDER,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    context_length: int = 512,
    discount: float = DEFAULT_DISCOUNT,
) -> SignalReport:
    """Train one model on paired documents and one on the same files unpaired; compare held-out test perplexity.

    ``seeds`` drive the packing shuffle for both corpora.
    """
    if file_multiset(corpus_aligned) != file_multiset(corpus_shuffled):
        raise ValueError("aligned and shuffled corpora must contain the same files")
    aligned, shuffled = [], []
    for seed in seeds:
        m_a = train_lm(pack_sequences(corpus_aligned, context_length, seed), vocab_size, order, discount)
        m_s = train_lm(pack_sequences(corpus_shuffled, context_length, seed), vocab_size, order, discount)
        aligned.append(heldout_perplexity(m_a, heldout_pairs))
        shuffled.append(heldout_perplexity(m_s, heldout_pairs))
    return SignalReport(order, list(seeds), aligned, shuffled)
