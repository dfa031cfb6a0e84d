"""Lexical similarity metrics and aggregation of evaluation outcomes.

Lexical tokens are runs of word characters or single punctuation
characters; whitespace only separates.  For Python the indentation level of
each line is part of the normalized form, since it carries block structure.

``codebleu_lite`` averages three parts with equal weight: smoothed BLEU-4,
BLEU-4 with keyword-weighted unigrams, and a structural match over block
trees.  The dataflow part of full CodeBLEU is left out.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .common import Language
from .scanner import BlockNode, block_tree

_LEX = re.compile(r"\w+|[^\w\s]")

PYTHON_KEYWORDS = frozenset(
    """False None True and as assert async await break class continue def del elif else except finally for
    from global if import in is lambda nonlocal not or pass raise return try while with yield""".split()
)
JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue default do double else enum
    extends final finally float for goto if implements import instanceof int interface long native new
    package private protected public return short static strictfp super switch synchronized this throw
    throws transient try void volatile while var record yield true false null""".split()
)
KEYWORDS = {Language.PYTHON: PYTHON_KEYWORDS, Language.JAVA: JAVA_KEYWORDS}

CODEBLEU_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)
KEYWORD_WEIGHT = 1.0
OTHER_WEIGHT = 0.2
METRIC_NAME = "codebleu_lite"


def lex(text: str) -> list[str]:
    return _LEX.findall(text)


def _python_levels(text: str) -> list[tuple[int | None, list[str]]]:
    """Non-blank lines as ``(indent level, tokens)``; continuation lines get level None."""
    out = []
    widths = [0]
    depth = 0
    for line in text.splitlines():
        toks = lex(line)
        if not toks:
            continue
        if depth > 0:
            out.append((None, toks))
        else:
            width = len(line.expandtabs(8)) - len(line.expandtabs(8).lstrip())
            while len(widths) > 1 and width < widths[-1]:
                widths.pop()
            if width > widths[-1]:
                widths.append(width)
            out.append((len(widths) - 1, toks))
        for t in toks:
            if t in "([{":
                depth += 1
            elif t in ")]}":
                depth = max(depth - 1, 0)
    return out


def normalized_lines(text: str, language: Language | None = None) -> list[tuple[int | None, list[str]]]:
    if language is Language.PYTHON:
        return _python_levels(text)
    return [(None, lex(text))] if lex(text) else []


def exact_match(gen: str, gold: str, language: Language | None = None) -> bool:
    """Equal token streams after collapsing whitespace.

    For Python, lines and their relative indentation levels must also agree,
    so indentation width may differ but nesting may not.
    """
    return normalized_lines(gen, language) == normalized_lines(gold, language)


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_tokens(gen: Sequence[str], gold: Sequence[str]) -> float:
    if not gen and not gold:
        return 1.0
    if not gen or not gold:
        return 0.0
    lcs = lcs_length(gen, gold)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(gen), lcs / len(gold)
    return 2 * p * r / (p + r)


def rouge_l(gen: str, gold: str) -> float:
    """LCS F-measure over lexical tokens."""
    return rouge_l_tokens(lex(gen), lex(gold))


def _ngrams(toks: Sequence[str], n: int) -> Counter:
    return Counter(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))


def _brevity(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    return 1.0 if c > r else math.exp(1 - r / c)


def bleu4(gen: Sequence[str], gold: Sequence[str], unigram_weights: dict[str, float] | None = None) -> float:
    """BLEU-4 with add-one smoothing on every n-gram precision.

    With ``unigram_weights`` the unigram precision weighs each token type.
    """
    logs = []
    for n in range(1, 5):
        g, r = _ngrams(gen, n), _ngrams(gold, n)
        if n == 1 and unigram_weights is not None:
            w = lambda t: unigram_weights.get(t[0], OTHER_WEIGHT)
            match = sum(w(t) * min(c, r[t]) for t, c in g.items())
            total = sum(w(t) * c for t, c in g.items())
        else:
            match = sum(min(c, r[t]) for t, c in g.items())
            total = sum(g.values())
        logs.append(math.log((match + 1) / (total + 1)))
    return _brevity(len(gen), len(gold)) * math.exp(sum(logs) / 4)


def _is_label(keywords: frozenset[str]):
    return lambda tok: tok in keywords or not (tok[0].isalnum() or tok[0] == "_")


def syntax_tree(text: str, language: Language) -> BlockNode:
    return block_tree(normalized_lines(text, language), _is_label(KEYWORDS[language]))


def subtree_signatures(tree: BlockNode) -> Counter:
    return Counter(node.signature() for node in tree.walk())


def syntax_match(gen: str, gold: str, language: Language) -> float:
    """Share of gold subtrees (as a multiset) that also occur in the generation's tree."""
    ref = subtree_signatures(syntax_tree(gold, language))
    cand = subtree_signatures(syntax_tree(gen, language))
    return sum((ref & cand).values()) / sum(ref.values())


@dataclass(frozen=True)
class CodeBleuParts:
    ngram: float
    weighted_ngram: float
    syntax_match: float

    @property
    def score(self) -> float:
        w1, w2, w3 = CODEBLEU_WEIGHTS
        return w1 * self.ngram + w2 * self.weighted_ngram + w3 * self.syntax_match


def codebleu_lite(gen: str, gold: str, language: Language) -> tuple[float, CodeBleuParts]:
    if exact_match(gen, gold, language):
        # identical normalized forms feed identical tokens and trees to every part
        return 1.0, CodeBleuParts(1.0, 1.0, 1.0)
    g, r = lex(gen), lex(gold)
    if not g or not r:
        return 0.0, CodeBleuParts(0.0, 0.0, 0.0)
    weights = {t: KEYWORD_WEIGHT for t in KEYWORDS[language]}
    parts = CodeBleuParts(bleu4(g, r), bleu4(g, r, weights), syntax_match(gen, gold, language))
    return parts.score, parts


@dataclass(frozen=True)
class LexicalScores:
    pair_id: str
    task: str
    context_mode: str
    sample_k: int
    exact_match: bool
    rouge_l: float
    codebleu: float
    components: CodeBleuParts

    def to_json(self) -> dict:
        d = asdict(self)
        d["metric"] = METRIC_NAME
        return d

    @classmethod
    def from_json(cls, d: dict) -> "LexicalScores":
        d = {k: v for k, v in d.items() if k != "metric"}
        d["components"] = CodeBleuParts(**d["components"])
        return cls(**d)


def score_sample(pair_id: str, task: str, context_mode: str, sample_k: int, gen: str, gold: str, language: Language) -> LexicalScores:
    cb, parts = codebleu_lite(gen, gold, language)
    return LexicalScores(pair_id, task, context_mode, sample_k, exact_match(gen, gold, language), rouge_l(gen, gold), cb, parts)


@dataclass(frozen=True)
class RuntimeOutcome:
    pair_id: str
    task: str
    context_mode: str
    sample_k: int
    compiled: bool
    passed: bool
    coverage_baseline: float | None = None
    coverage_with_gen: float | None = None
    has_assert: bool = False
    reason: str = ""
    verdict_source: str = ""

    def __post_init__(self):
        if self.passed and not self.compiled:
            raise ValueError("a sample cannot pass without compiling")
        has_cov = self.coverage_baseline is not None or self.coverage_with_gen is not None
        if has_cov and not self.passed:
            raise ValueError("coverage is only recorded for passing samples")
        for v in (self.coverage_baseline, self.coverage_with_gen):
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"coverage {v} outside [0, 1]")

    @property
    def coverage_delta(self) -> float | None:
        if self.coverage_with_gen is None or self.coverage_baseline is None:
            return None
        return self.coverage_with_gen - self.coverage_baseline

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.pair_id, self.task, self.context_mode, self.sample_k)

    def to_json(self) -> dict:
        d = asdict(self)
        d["coverage_delta"] = self.coverage_delta
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RuntimeOutcome":
        return cls(**{k: v for k, v in d.items() if k != "coverage_delta"})


@dataclass
class GroupTotals:
    """Exact running sums for one (task, context mode) cell."""

    samples: int = 0
    compiled: int = 0
    passed: int = 0
    scored: int = 0
    exact: int = 0
    rouge_sum: Fraction = Fraction(0)
    codebleu_sum: Fraction = Fraction(0)
    parts_sum: list[Fraction] = field(default_factory=lambda: [Fraction(0)] * 3)
    covered: int = 0
    delta_sum: Fraction = Fraction(0)

    def add_outcome(self, o: RuntimeOutcome) -> None:
        self.samples += 1
        self.compiled += o.compiled
        self.passed += o.passed
        if o.coverage_delta is not None:
            self.covered += 1
            self.delta_sum += Fraction(o.coverage_delta)

    def add_score(self, s: LexicalScores) -> None:
        self.scored += 1
        self.exact += s.exact_match
        self.rouge_sum += Fraction(s.rouge_l)
        self.codebleu_sum += Fraction(s.codebleu)
        c = s.components
        self.parts_sum = [a + Fraction(b) for a, b in zip(self.parts_sum, (c.ngram, c.weighted_ngram, c.syntax_match))]

    def merge(self, other: "GroupTotals") -> "GroupTotals":
        return GroupTotals(
            self.samples + other.samples,
            self.compiled + other.compiled,
            self.passed + other.passed,
            self.scored + other.scored,
            self.exact + other.exact,
            self.rouge_sum + other.rouge_sum,
            self.codebleu_sum + other.codebleu_sum,
            [a + b for a, b in zip(self.parts_sum, other.parts_sum)],
            self.covered + other.covered,
            self.delta_sum + other.delta_sum,
        )

    def to_json(self) -> dict:
        mean = lambda s, n: float(s / n) if n else None
        return {
            "samples": self.samples,
            "compiled": self.compiled,
            "passed": self.passed,
            "scored": self.scored,
            "exact_match": mean(Fraction(self.exact), self.scored),
            "rouge_l": mean(self.rouge_sum, self.scored),
            "codebleu": mean(self.codebleu_sum, self.scored),
            "codebleu_components": {
                name: mean(v, self.scored) for name, v in zip(("ngram", "weighted_ngram", "syntax_match"), self.parts_sum)
            },
            "with_coverage": self.covered,
            "coverage_delta": mean(self.delta_sum, self.covered),
        }


@dataclass
class EvaluationReport:
    groups: dict[tuple[str, str], GroupTotals]

    @property
    def total_samples(self) -> int:
        return sum(g.samples for g in self.groups.values())

    @property
    def total_scored(self) -> int:
        return sum(g.scored for g in self.groups.values())

    def merge(self, other: "EvaluationReport") -> "EvaluationReport":
        keys = set(self.groups) | set(other.groups)
        return EvaluationReport({k: self.groups.get(k, GroupTotals()).merge(other.groups.get(k, GroupTotals())) for k in keys})

    def to_json(self) -> dict:
        return {
            "metric": METRIC_NAME,
            "groups": [
                {"task": t, "context_mode": m, **self.groups[(t, m)].to_json()} for t, m in sorted(self.groups)
            ],
            "totals": {"samples": self.total_samples, "scored": self.total_scored},
        }

    def table(self) -> str:
        head = f"{'task':<11} {'context':<13} {'CodeBLEU':>8} {'XMatch':>7} {'Rouge':>7} {'Compile':>8} {'Pass':>6} {'dCov':>7}"
        rows = [head, "-" * len(head)]
        fmt = lambda v, pct=False: "-" if v is None else (f"{100 * v:.1f}" if pct else f"{v:.3f}")
        for t, m in sorted(self.groups):
            g = self.groups[(t, m)].to_json()
            rows.append(
                f"{t:<11} {m:<13} {fmt(g['codebleu']):>8} {fmt(g['exact_match'], True):>7} {fmt(g['rouge_l']):>7} "
                f"{g['compiled']:>8} {g['passed']:>6} {fmt(g['coverage_delta']):>7}"
            )
        return "\n".join(rows)


def aggregate(
    outcomes: Iterable[RuntimeOutcome], scores: Iterable[LexicalScores], pair_ids: Iterable[str] | None = None
) -> EvaluationReport:
    """Fold outcomes and lexical scores into per (task, context mode) totals.

    With ``pair_ids`` every record must belong to one of those pairs.  A
    sample key may appear at most once among outcomes and once among scores.
    Sums are kept as exact fractions, so the result does not depend on input
    order and shards can be merged.
    """
    outcomes, scores = list(outcomes), list(scores)
    if pair_ids is not None:
        known = set(pair_ids)
        stray = {r.pair_id for r in [*outcomes, *scores]} - known
        if stray:
            raise ValueError(f"records reference unknown pairs: {sorted(stray)[:5]}")
    for name, recs in (("outcome", outcomes), ("score", scores)):
        keys = Counter((r.pair_id, r.task, r.context_mode, r.sample_k) for r in recs)
        dup = [k for k, n in keys.items() if n > 1]
        if dup:
            raise ValueError(f"duplicate {name} for sample {dup[0]}")
    groups: dict[tuple[str, str], GroupTotals] = {}
    for o in outcomes:
        groups.setdefault((o.task, o.context_mode), GroupTotals()).add_outcome(o)
    for s in scores:
        groups.setdefault((s.task, s.context_mode), GroupTotals()).add_score(s)
    return EvaluationReport(groups)
