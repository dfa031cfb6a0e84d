from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from conftest import FIXTURES
from codetestlm.align import CodeTestPair, MatchKind
from codetestlm.common import Language
from codetestlm.promptgen import (
    ContextMode,
    PromptSkipped,
    Task,
    TaskPrompt,
    choose_statement,
    completion_targets,
    extract_method,
    inject_generation,
    make_prompt,
    make_prompts,
    read_generations,
    reindent,
    remove_spans,
    statement_end,
    stop_callback,
    write_generations,
)
from codetestlm.scanner import outline_text
from codetestlm.tokenizer import CODETESTPAIR, SEPARATOR_TEXT, train_bpe

TESTFILES = sorted(p for p in (FIXTURES / "testfiles").iterdir() if p.suffix in (".py", ".java"))
CODE = "def add(a, b):\n    return a + b\n"


def setup(path: Path):
    lang = Language.PYTHON if path.suffix == ".py" else Language.JAVA
    text = path.read_text(encoding="utf-8")
    pair = CodeTestPair("r", "r:code", "r:test", "code" + path.suffix, path.name, lang, MatchKind.EXACT, 1.0)
    return pair, outline_text(text, lang), text, lang


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_extract_then_inject_is_identity(path):
    _, outline, text, lang = setup(path)
    for m in outline.tests:
        baseline, point, gt = extract_method(text, m)
        assert inject_generation(baseline, point, gt, lang, m.indent) == text


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_task_baselines_restore_with_ground_truth(path):
    pair, outline, text, lang = setup(path)
    tests = outline.tests
    first = make_prompt(pair, outline, Task.FIRST, ContextMode.WITHOUT_CODE, text, CODE)
    # the first-test baseline drops every test; re-injecting the first brings back only that one
    assert inject_generation(first.baseline_text, first.insertion_point, first.ground_truth, lang, first.indent) == remove_spans(
        text, [m.span for m in tests[1:]]
    )
    if len(tests) >= 2:
        last = make_prompt(pair, outline, Task.LAST, ContextMode.WITHOUT_CODE, text, CODE)
        assert inject_generation(last.baseline_text, last.insertion_point, last.ground_truth, lang, last.indent) == text
    else:
        with pytest.raises(PromptSkipped) as exc:
            make_prompt(pair, outline, Task.LAST, ContextMode.WITHOUT_CODE, text, CODE)
        assert exc.value.reason == "fewer-than-two-tests"
    for i in range(len(completion_targets(outline))):
        p = make_prompt(pair, outline, Task.COMPLETION, ContextMode.WITHOUT_CODE, text, CODE, i)
        assert p.baseline_text[: p.insertion_point] + p.ground_truth + p.baseline_text[p.insertion_point :] == text


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_prompts_grow_first_last_extra(path):
    pair, outline, text, _ = setup(path)
    prompts, skipped = make_prompts(pair, outline, text, CODE)
    by_key = {(p.task, p.context_mode): p for p in prompts}
    ctx = {t: by_key[(t, ContextMode.WITHOUT_CODE)].test_context for t in (Task.FIRST, Task.EXTRA)}
    assert text.startswith(ctx[Task.FIRST]) and ctx[Task.EXTRA] == text
    if (Task.LAST, ContextMode.WITHOUT_CODE) in by_key:
        last = by_key[(Task.LAST, ContextMode.WITHOUT_CODE)].test_context
        assert len(ctx[Task.FIRST]) <= len(last) < len(text) and last.startswith(ctx[Task.FIRST])
    else:
        assert (pair.pair_id, "last", "fewer-than-two-tests") in skipped
    for p in prompts:
        assert text.startswith(p.test_context)


def test_last_task_needs_two_tests():
    for path in TESTFILES:
        pair, outline, text, _ = setup(path)
        prompts, _ = make_prompts(pair, outline, text, CODE)
        has_last = any(p.task is Task.LAST for p in prompts)
        assert has_last == (len(outline.tests) >= 2), path.name


@pytest.fixture(scope="module")
def vocab():
    return train_bpe([p.read_text() for p in TESTFILES], 400)


@pytest.mark.parametrize("path", TESTFILES[:6], ids=lambda p: p.name)
def test_with_code_is_code_separator_then_without_code(path, vocab):
    pair, outline, text, _ = setup(path)
    prompts, _ = make_prompts(pair, outline, text, CODE)
    by_key = {(p.task, p.context_mode): p for p in prompts}
    for (task, mode), p in by_key.items():
        if mode is not ContextMode.WITH_CODE:
            continue
        bare = by_key[(task, ContextMode.WITHOUT_CODE)]
        assert p.prompt_text == CODE + SEPARATOR_TEXT + bare.prompt_text
        assert p.without_code() == bare
        ids = p.tokens(vocab)
        assert ids == vocab.encode(CODE) + [CODETESTPAIR] + bare.tokens(vocab)
        assert len(ids) == len(vocab.encode(CODE)) + 1 + len(bare.tokens(vocab))


def test_json_round_trip():
    pair, outline, text, _ = setup(TESTFILES[0])
    for p in make_prompts(pair, outline, text, CODE)[0]:
        assert TaskPrompt.from_json(p.to_json()) == p


def test_statement_choice_is_seeded():
    pair, outline, text, _ = setup(FIXTURES / "testfiles" / "test_cache_class.py")
    picks = {choose_statement(outline, pair.pair_id, 0) for _ in range(3)}
    assert len(picks) == 1
    assert choose_statement(outline_text("x = 1\n", Language.PYTHON), "p", 0) is None


def test_inject_rejects_bad_input():
    with pytest.raises(ValueError):
        inject_generation("abc", 4, "x")
    with pytest.raises(ValueError):
        inject_generation("abc", 1, "")


def test_python_injection_reindents_and_terminates():
    base = "class T:\n    def test_a(self):\n        pass\n"
    out = inject_generation(base, len(base), "def test_b(self):\n    assert 1\n", Language.PYTHON, "    ")
    assert out == base + "    def test_b(self):\n        assert 1\n"
    out = inject_generation("a\nb\n", 2, "x = 1", Language.PYTHON, "")
    assert out == "a\nx = 1\nb\n"
    # java text is spliced untouched
    assert inject_generation("{}", 1, "void t() {}", Language.JAVA) == "{void t() {}}"


def test_reindent():
    assert reindent("  a\n    b\nc\n", "\t") == "\ta\n\t  b\n\tc\n"
    assert reindent("    a\n\n    b\n", "    ") == "    a\n\n    b\n"


@given(st.text(alphabet=" \tab\n", max_size=30), st.sampled_from(["", "  ", "    ", "\t"]))
def test_reindent_keeps_non_whitespace(text, indent):
    assert reindent(text, indent).split() == text.split()


def test_statement_end():
    assert statement_end('assertEquals(f(";"), 2); x();', Language.JAVA) == len('assertEquals(f(";"), 2);')
    assert statement_end("x = f(1,\n      2)\ny = 3\n", Language.PYTHON) == len("x = f(1,\n      2)\n")
    assert statement_end("\n\n    x = 1\n", Language.PYTHON) == len("\n\n    x = 1\n")
    assert statement_end("x = f(1,", Language.PYTHON) is None


def test_stop_callback_counts_tokens(vocab):
    ids = vocab.encode("    x = 1\n    y = 2\n")
    cut = stop_callback(vocab, Language.PYTHON, Task.COMPLETION)(ids)
    assert vocab.decode(ids[:cut]).startswith("    x = 1\n")
    assert "y" not in vocab.decode(ids[:cut])


def test_generations_round_trip(tmp_path):
    key = ("p1", "first", "with-code")
    write_generations(tmp_path, key, ["a\r\n", "b"])
    (tmp_path / "p1" / "first" / "with-code" / "notes.txt").write_text("ignored")
    assert read_generations(tmp_path) == {key: [(0, "a\r\n"), (1, "b")]}
    write_generations(tmp_path, ("p1", "bogus", "with-code"), ["c"])
    with pytest.raises(ValueError):
        read_generations(tmp_path)
