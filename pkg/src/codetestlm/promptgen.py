"""Evaluation prompts, ground truths and re-injection of generated tests.

Four tasks are built from a test file outline:

* first: the prompt stops right before the first test; every test method is
  removed from the baseline file.
* last: the prompt stops right before the final test; only that test is
  removed from the baseline.
* extra: the prompt is the whole file and there is no ground truth;
  generations go right after the last test method.
* completion: the prompt stops right before one statement of a test method;
  that statement is the ground truth.

Each task comes with and without the code file in front (code text, then the
separator).  Non-test helper methods always stay in the baseline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .align import CodeTestPair
from .common import Language
from .scanner import MethodSpan, Span, TestFileOutline, method_end
from .tokenizer import CODETESTPAIR, SEPARATOR_TEXT, Vocabulary


class Task(str, Enum):
    FIRST = "first"
    LAST = "last"
    EXTRA = "extra"
    COMPLETION = "completion"


class ContextMode(str, Enum):
    WITH_CODE = "with-code"
    WITHOUT_CODE = "without-code"


class PromptSkipped(ValueError):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


@dataclass(frozen=True)
class TaskPrompt:
    pair_id: str
    task: Task
    context_mode: ContextMode
    subject_language: Language
    code_context: str | None
    test_context: str
    ground_truth: str | None
    baseline_text: str
    insertion_point: int
    indent: str = ""
    statement_index: int | None = None

    @property
    def prompt_text(self) -> str:
        if self.code_context is None:
            return self.test_context
        return self.code_context + SEPARATOR_TEXT + self.test_context

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.pair_id, self.task.value, self.context_mode.value)

    def tokens(self, vocab: Vocabulary) -> list[int]:
        """Prompt ids; the separator is the special token, never its literal text."""
        if self.code_context is None:
            return vocab.encode(self.test_context)
        return vocab.encode(self.code_context) + [CODETESTPAIR] + vocab.encode(self.test_context)

    def without_code(self) -> "TaskPrompt":
        return replace(self, context_mode=ContextMode.WITHOUT_CODE, code_context=None)

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "task": self.task.value,
            "context_mode": self.context_mode.value,
            "subject_language": self.subject_language.value,
            "code_context": self.code_context,
            "test_context": self.test_context,
            "ground_truth": self.ground_truth,
            "baseline_text": self.baseline_text,
            "insertion_point": self.insertion_point,
            "indent": self.indent,
            "statement_index": self.statement_index,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TaskPrompt":
        return cls(
            d["pair_id"],
            Task(d["task"]),
            ContextMode(d["context_mode"]),
            Language(d["subject_language"]),
            d["code_context"],
            d["test_context"],
            d["ground_truth"],
            d["baseline_text"],
            d["insertion_point"],
            d.get("indent", ""),
            d.get("statement_index"),
        )


def remove_spans(text: str, spans: Iterable[Span]) -> str:
    out = []
    pos = 0
    for s in sorted(spans, key=lambda s: s.start):
        out.append(text[pos : s.start])
        pos = s.end
    out.append(text[pos:])
    return "".join(out)


def extract_method(text: str, method: MethodSpan) -> tuple[str, int, str]:
    """``(baseline, insertion_point, ground_truth)`` with just ``method`` cut out."""
    return text[: method.start] + text[method.end :], method.start, text[method.start : method.end]


def completion_targets(outline: TestFileOutline) -> list[tuple[MethodSpan, Span]]:
    return [(m, s) for m in outline.tests for s in m.statements]


def _leading_ws(line: str) -> str:
    return line[: len(line) - len(line.lstrip(" \t"))]


def reindent(generated: str, indent: str) -> str:
    """Shift ``generated`` so its first non-blank line starts at ``indent``.

    Deeper lines keep their depth relative to the first line; shallower ones
    are clamped to ``indent``.
    """
    lines = generated.splitlines(keepends=True)
    base = next((_leading_ws(l) for l in lines if l.strip()), "")
    if base == indent:
        return generated
    out = []
    for line in lines:
        if not line.strip():
            out.append(line)
        elif line.startswith(base):
            out.append(indent + line[len(base) :])
        else:
            out.append(indent + line.lstrip(" \t"))
    return "".join(out)


def inject_generation(
    baseline_file: str,
    insertion_point: int,
    generated: str,
    language: Language = Language.JAVA,
    indent: str | None = None,
) -> str:
    """Splice ``generated`` into ``baseline_file`` at ``insertion_point``.

    For Python the generation is re-indented to ``indent`` and, when it is
    inserted at a line start in front of more text, given a final newline.
    Nothing else in the baseline changes.  No syntax check is made.
    """
    if not 0 <= insertion_point <= len(baseline_file):
        raise ValueError(f"insertion point {insertion_point} outside file of length {len(baseline_file)}")
    if not generated:
        raise ValueError("generated text is empty")
    if language is Language.PYTHON:
        if indent is not None:
            generated = reindent(generated, indent)
        at_line_start = insertion_point == 0 or baseline_file[insertion_point - 1] == "\n"
        if at_line_start and insertion_point < len(baseline_file) and not generated.endswith("\n"):
            generated += "\n"
    return baseline_file[:insertion_point] + generated + baseline_file[insertion_point:]


def make_prompt(
    pair: CodeTestPair,
    outline: TestFileOutline,
    task: Task,
    context_mode: ContextMode,
    test_text: str,
    code_text: str,
    statement_index: int | None = None,
) -> TaskPrompt:
    """Build one prompt; raises :class:`PromptSkipped` when the file does not qualify."""
    if len(test_text) != outline.length:
        raise ValueError("outline does not belong to this test text")
    tests = outline.tests
    gt: str | None
    if task is Task.FIRST:
        if not tests:
            raise PromptSkipped("no-tests")
        first = tests[0]
        prefix = test_text[: first.start]
        baseline = remove_spans(test_text, [m.span for m in tests])
        point, gt, indent = first.start, first.span.text(test_text), first.indent
    elif task is Task.LAST:
        if len(tests) < 2:
            raise PromptSkipped("fewer-than-two-tests", f"{len(tests)} test(s)")
        last = tests[-1]
        prefix = test_text[: last.start]
        baseline, point, gt = extract_method(test_text, last)
        indent = last.indent
    elif task is Task.EXTRA:
        if not tests:
            raise PromptSkipped("no-tests")
        prefix = baseline = test_text
        point, gt, indent = tests[-1].end, None, tests[-1].indent
    elif task is Task.COMPLETION:
        targets = completion_targets(outline)
        if statement_index is None:
            raise PromptSkipped("no-statement-index")
        if not 0 <= statement_index < len(targets):
            raise PromptSkipped("no-such-statement", f"index {statement_index} of {len(targets)}")
        _, stmt = targets[statement_index]
        prefix = test_text[: stmt.start]
        gt = stmt.text(test_text)
        baseline, point = test_text[: stmt.start] + test_text[stmt.end :], stmt.start
        indent = _leading_ws(gt)
    else:
        raise ValueError(f"unknown task {task}")
    return TaskPrompt(
        pair_id=pair.pair_id,
        task=task,
        context_mode=context_mode,
        subject_language=pair.subject_language,
        code_context=code_text if context_mode is ContextMode.WITH_CODE else None,
        test_context=prefix,
        ground_truth=gt,
        baseline_text=baseline,
        insertion_point=point,
        indent=indent,
        statement_index=statement_index if task is Task.COMPLETION else None,
    )


def choose_statement(outline: TestFileOutline, pair_id: str, seed: int) -> int | None:
    targets = completion_targets(outline)
    if not targets:
        return None
    return random.Random(f"{seed}:{pair_id}").randrange(len(targets))


def make_prompts(
    pair: CodeTestPair,
    outline: TestFileOutline,
    test_text: str,
    code_text: str,
    tasks: Sequence[Task] = tuple(Task),
    modes: Sequence[ContextMode] = tuple(ContextMode),
    seed: int = 0,
) -> tuple[list[TaskPrompt], list[tuple[str, str, str]]]:
    """All prompts for one pair, plus ``(pair_id, task, reason)`` for each skipped task."""
    prompts, skipped = [], []
    stmt = choose_statement(outline, pair.pair_id, seed)
    for task in tasks:
        for mode in modes:
            try:
                prompts.append(make_prompt(pair, outline, task, mode, test_text, code_text, stmt))
            except PromptSkipped as exc:
                skipped.append((pair.pair_id, task.value, exc.reason))
                break
    return prompts, skipped


def statement_end(text: str, language: Language) -> int | None:
    """Offset just past the first complete statement in ``text``."""
    depth = 0
    quote = None
    i = 0
    seen = False
    while i < len(text):
        c = text[i]
        if quote:
            if c == "\\":
                i += 2
                continue
            if c == quote:
                quote = None
        elif c in "\"'":
            quote = c
        elif c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        elif language is Language.JAVA and c == ";" and depth <= 0:
            return i + 1
        elif language is Language.PYTHON and c == "\n" and depth <= 0 and seen:
            return i + 1
        if not c.isspace():
            seen = True
        i += 1
    return None


def stop_callback(vocab: Vocabulary, language: Language, task: Task) -> Callable[[list[int]], int | None]:
    """Token-level stop test for sampling: a whole method, or one statement for completion."""
    finder = statement_end if task is Task.COMPLETION else method_end

    def cut(ids: list[int]) -> int | None:
        text = vocab.decode(ids)
        end = finder(text, language)
        if end is None:
            return None
        for k in range(1, len(ids) + 1):
            if len(vocab.decode(ids[:k])) >= end:
                return k
        return len(ids)

    return cut


# generations/<pair_id>/<task>/<context_mode>/<sample_k>.txt


def generation_path(root: str | Path, key: tuple[str, str, str], k: int) -> Path:
    pair_id, task, mode = key
    return Path(root) / pair_id / task / mode / f"{k}.txt"


def write_generations(root: str | Path, key: tuple[str, str, str], samples: Sequence[str]) -> None:
    for k, text in enumerate(samples):
        p = generation_path(root, key, k)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8", newline="")


def read_generations(root: str | Path) -> dict[tuple[str, str, str], list[tuple[int, str]]]:
    """Load a generations tree, including ones produced by external models."""
    out: dict[tuple[str, str, str], list[tuple[int, str]]] = {}
    root = Path(root)
    for p in sorted(root.glob("*/*/*/*.txt")):
        pair_id, task, mode = p.relative_to(root).parts[:3]
        if not p.stem.isdigit():
            continue
        Task(task)
        ContextMode(mode)
        with open(p, encoding="utf-8", newline="") as fh:
            out.setdefault((pair_id, task, mode), []).append((int(p.stem), fh.read()))
    for v in out.values():
        v.sort()
    return out
