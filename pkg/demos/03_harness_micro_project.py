"""Inject a few hand-written "generations" into the bundled Python micro-project.

Each one runs in a throwaway copy of the project: build (syntax and import
check), the test suite with coverage, then a per-file coverage lookup.
"""

from fractions import Fraction

from codetestlm.align import CodeTestPair, MatchKind
from codetestlm.common import Language
from codetestlm.harness import evaluate_generation, filter_generations, load_manifest, run_baseline
from codetestlm.promptgen import ContextMode, Task, make_prompt
from codetestlm.scanner import outline_text
from codetestlm.synthetic import microproject_dir

root = microproject_dir("python_calc")
manifest = load_manifest(root / "manifest.toml")
test_path, code_path = "test_calc.py", "calc.py"
test_text = (root / test_path).read_text()
code_text = (root / code_path).read_text()

_, base = run_baseline(manifest, test_text, test_path, code_path)
print(f"coverage of {code_path} with the existing suite: {base} = {float(base):.0%}")

pair = CodeTestPair("python_calc", "c", "t", code_path, test_path, Language.PYTHON, MatchKind.EXACT, 1.0)
prompt = make_prompt(pair, outline_text(test_text, Language.PYTHON), Task.EXTRA, ContextMode.WITHOUT_CODE, test_text, code_text)

candidates = {
    "known good": (root / "known_good_test.txt").read_text(),
    "no assert": (root / "no_assert_test.txt").read_text(),
    "wrong expectation": "def test_wrong():\n    assert calc.add(2, 2) == 5\n",
    "not python": "def test_x(:\n",
}
outcomes = []
for k, (label, text) in enumerate(candidates.items()):
    o = evaluate_generation(manifest, prompt, text, test_path, code_path, sample_k=k)
    outcomes.append(o)
    delta = "-" if o.coverage_delta is None else str(Fraction(o.coverage_delta).limit_denominator(100))
    print(f"{label:<18} compiled={o.compiled!s:<5} passed={o.passed!s:<5} asserts={o.has_assert!s:<5} "
          f"delta={delta:<5} ({o.reason or 'ok'}, verdict from {o.verdict_source or 'nothing'})")

kept = filter_generations(outcomes)
print(f"\n{len(kept)} of {len(outcomes)} survive the compile/pass/assert filter")
