"""How one test file turns into task prompts, and how a generation is scored."""

from pathlib import Path

from codetestlm.align import CodeTestPair, MatchKind
from codetestlm.common import Language
from codetestlm.metrics import codebleu_lite, exact_match, rouge_l
from codetestlm.promptgen import ContextMode, make_prompts
from codetestlm.scanner import outline_text

here = Path(__file__).resolve().parent
test_file = here.parent / "tests" / "fixtures" / "testfiles" / "test_cache_class.py"
text = test_file.read_text()
code = "class LRUCache:\n    def __init__(self, size):\n        self.size = size\n"

outline = outline_text(text, Language.PYTHON)
print("methods found:", ", ".join(m.name for m in outline.methods))
print("tests found:  ", ", ".join(m.name for m in outline.tests))

pair = CodeTestPair("demo", "c", "t", "cache.py", test_file.name, Language.PYTHON, MatchKind.EXACT, 1.0)
prompts, skipped = make_prompts(pair, outline, text, code)
for p in prompts:
    if p.context_mode is ContextMode.WITHOUT_CODE:
        print(f"\n--- {p.task.value}: {len(p.test_context)} chars of context, insertion at {p.insertion_point}")
        if p.ground_truth:
            print(p.ground_truth.rstrip())

target = next(p for p in prompts if p.ground_truth)
guess = target.ground_truth.replace("assert", "assert not", 1)
print("\nscoring a slightly wrong guess against the first ground truth:")
print(f"  exact match {exact_match(guess, target.ground_truth, Language.PYTHON)}")
print(f"  rouge-l     {rouge_l(guess, target.ground_truth):.3f}")
score, parts = codebleu_lite(guess, target.ground_truth, Language.PYTHON)
print(f"  codebleu    {score:.3f} (ngram {parts.ngram:.3f}, weighted {parts.weighted_ngram:.3f}, syntax {parts.syntax_match:.3f})")
