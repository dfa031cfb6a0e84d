import dataclasses
import sys
from fractions import Fraction

import pytest

from builders import micro_prompt, micro_setup
from codetestlm.align import CodeTestPair, MatchKind
from codetestlm.common import Language
from codetestlm.harness import (
    TIMEOUT_EXIT,
    CoverageFormat,
    CoverageParseError,
    EvalJob,
    ManifestError,
    Phase,
    Sandbox,
    evaluate_generation,
    evaluate_many,
    file_coverage,
    filter_generations,
    has_assertion,
    load_manifest,
    load_manifests,
    parse_json_report,
    parse_xml_report,
    run_baseline,
    select_eval_pairs,
)
from codetestlm.harness.sandbox import SandboxError, expand
from codetestlm.promptgen import Task

COBERTURA = """<?xml version="1.0" ?>
<coverage version="7.4">
  <packages><package name="pkg"><classes>
    <class name="calc.py" filename="pkg/calc.py">
      <lines><line number="1" hits="1"/><line number="2" hits="0"/><line number="4" hits="3"/></lines>
    </class>
  </classes></package></packages>
</coverage>"""

JACOCO = """<?xml version="1.0" encoding="UTF-8"?>
<report name="calc">
  <package name="calc">
    <sourcefile name="Calc.java">
      <line nr="3" mi="0" ci="2" mb="0" cb="0"/>
      <line nr="5" mi="4" ci="0" mb="0" cb="0"/>
      <line nr="7" mi="0" ci="0" mb="0" cb="0"/>
      <line nr="9" mi="1" ci="1" mb="0" cb="0"/>
    </sourcefile>
  </package>
</report>"""


# --- manifests and coverage reports ----------------------------------------


def test_manifest_loading(tmp_path):
    (tmp_path / "proj").mkdir()
    (tmp_path / "m").mkdir()
    (tmp_path / "m" / "a.toml").write_text(
        'project_id = "a"\nworkdir = "../proj"\ntest_cmd = ["true"]\ncoverage_format = "xml-line-report"\n'
        'coverage_report = "cov.xml"\ntimeout_secs = 5\n[env]\nX = 1\n'
    )
    m = load_manifest(tmp_path / "m" / "a.toml")
    assert m.workdir == (tmp_path / "proj").resolve()
    assert m.coverage_format is CoverageFormat.XML and m.env == {"X": "1"} and m.timeout_secs == 5
    assert list(load_manifests(tmp_path / "m")) == ["a"]
    (tmp_path / "m" / "b.toml").write_text('project_id = "b"\ntest_cmd = ["true"]\ncoverage_format = "lcov"\ncoverage_report = "x"\n')
    with pytest.raises(ManifestError):
        load_manifests(tmp_path / "m")


def test_cobertura_adapter():
    report = parse_xml_report(COBERTURA)
    assert report == {"pkg/calc.py": {"covered": [1, 4], "coverable": [1, 2, 4]}}
    assert file_coverage(report, "calc.py") == Fraction(2, 3)
    assert file_coverage(report, "other.py") == 0


def test_jacoco_adapter_skips_lines_without_instructions():
    report = parse_xml_report(JACOCO)
    assert report == {"calc/Calc.java": {"covered": [3, 9], "coverable": [3, 5, 9]}}
    assert file_coverage(report, "src/main/java/calc/Calc.java") == Fraction(2, 3)


def test_json_adapter():
    text = '{"files": {"calc.py": {"executed_lines": [1, 2], "missing_lines": [5]}}}'
    assert parse_json_report(text) == {"calc.py": {"covered": [1, 2], "coverable": [1, 2, 5]}}


@pytest.mark.parametrize("bad", ["<coverage><class/></coverage>", "<nope/>", "<report", "{"])
def test_malformed_reports(bad):
    with pytest.raises(CoverageParseError):
        parse_json_report(bad) if bad == "{" else parse_xml_report(bad)


# --- sandbox ---------------------------------------------------------------


def test_sandbox_isolation(tmp_path, monkeypatch):
    (tmp_path / "a.txt").write_text("original")
    monkeypatch.setenv("CTLM_SECRET", "leak")
    with Sandbox(tmp_path, {"EXTRA": "yes"}) as box:
        box.write("a.txt", "changed")
        res = box.run(Phase.TEST, [sys.executable, "-c", "import os; print(os.environ.get('CTLM_SECRET'), os.environ['EXTRA'])"], 30)
        assert res.ok and res.stdout.split() == ["None", "yes"]
        with pytest.raises(SandboxError):
            box.path("../escape.txt")
        root = box.root
    assert (tmp_path / "a.txt").read_text() == "original"
    assert not root.exists()


def test_sandbox_timeout_kills_process_group(tmp_path):
    with Sandbox(tmp_path) as box:
        res = box.run(Phase.TEST, ["sh", "-c", "sleep 30 & sleep 30"], 0.5)
    assert res.timed_out and res.exit_code == TIMEOUT_EXIT and not res.ok
    assert res.duration < 10


def test_missing_executable_is_a_failed_phase(tmp_path):
    with Sandbox(tmp_path) as box:
        res = box.run(Phase.BUILD, ["/no/such/tool"], 5)
    assert res.exit_code == 127 and not res.ok


def test_expand_placeholders():
    assert expand(["{python}", "{test_path}", "{x}"], test_path="t.py") == [sys.executable, "t.py", "{x}"]


# --- python micro-project --------------------------------------------------


def test_python_baseline_coverage_is_hand_counted():
    root, manifest, expected, _, _, test_text, _ = micro_setup("python_calc")
    results, cov = run_baseline(manifest, test_text, expected["test_path"], expected["code_path"])
    assert [r.phase for r in results] == [Phase.BUILD, Phase.TEST, Phase.COVERAGE]
    assert cov == Fraction(*expected["baseline_coverage"])


def test_known_good_extra_test_adds_hand_counted_delta():
    root, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(manifest, prompt, (root / "known_good_test.txt").read_text(), expected["test_path"], expected["code_path"])
    assert o.compiled and o.passed and o.has_assert and o.verdict_source == "per-test"
    assert Fraction(o.coverage_with_gen).limit_denominator(100) == Fraction(*expected["with_known_good_coverage"])
    assert Fraction(o.coverage_delta).limit_denominator(100) == Fraction(*expected["coverage_delta"])


@pytest.mark.parametrize("garbage", ["def test_x(:\n    pass\n", "import no_such_module_xyz\n", "}}}{{{ ;;;"])
def test_garbage_does_not_compile(garbage):
    _, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(manifest, prompt, garbage, expected["test_path"], expected["code_path"])
    assert not o.compiled and not o.passed and o.reason == "compile-error"


def test_failing_test_compiles_but_fails():
    _, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(manifest, prompt, "def test_bad():\n    assert calc.add(1, 1) == 3\n", expected["test_path"], expected["code_path"])
    assert o.compiled and not o.passed and o.reason == "failed" and o.verdict_source == "per-test"


def test_assert_free_test_passes_but_is_filtered():
    root, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(manifest, prompt, (root / "no_assert_test.txt").read_text(), expected["test_path"], expected["code_path"])
    assert o.compiled and o.passed and not o.has_assert
    assert filter_generations([o]) == []


def test_ground_truth_last_test_restores_original_coverage():
    _, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.LAST)
    o = evaluate_generation(manifest, prompt, prompt.ground_truth, expected["test_path"], expected["code_path"])
    assert o.passed
    assert Fraction(o.coverage_with_gen).limit_denominator(100) == Fraction(*expected["baseline_coverage"])


def test_first_task_baseline_without_tests_is_valid():
    _, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.FIRST)
    results, cov = run_baseline(manifest, prompt.baseline_text, expected["test_path"], expected["code_path"])
    assert all(r.ok for r in results)
    # only the import-time lines (the three def statements) run
    assert cov == Fraction(3, 10)


def test_build_failure_stops_before_tests():
    _, manifest, expected, *_ = micro_setup("python_calc")
    results, cov = run_baseline(manifest, "def (:\n", expected["test_path"], expected["code_path"])
    assert [r.phase for r in results] == [Phase.BUILD] and cov is None


def test_timeouts_are_classified():
    _, manifest, expected, *_ = micro_setup("python_calc")
    fast = dataclasses.replace(manifest, timeout_secs=3)
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(fast, prompt, "import time\ntime.sleep(60)\n", expected["test_path"], expected["code_path"])
    assert not o.compiled and o.reason == "timeout"
    o = evaluate_generation(fast, prompt, "def test_slow():\n    import time\n    time.sleep(60)\n", expected["test_path"], expected["code_path"])
    assert o.compiled and not o.passed and o.reason == "timeout" and o.verdict_source == "suite-exit"


def test_suite_exit_fallback_without_junit_report():
    _, manifest, expected, *_ = micro_setup("python_calc")
    plain = dataclasses.replace(manifest, test_report=None)
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(plain, prompt, "def test_ok():\n    assert calc.mul(2, 2) == 4\n", expected["test_path"], expected["code_path"])
    assert o.passed and o.verdict_source == "suite-exit"


def test_empty_generation():
    _, manifest, expected, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    o = evaluate_generation(manifest, prompt, "  \n", expected["test_path"], expected["code_path"])
    assert (o.compiled, o.passed, o.reason) == (False, False, "empty")


def test_evaluate_many_orders_by_key():
    root, manifest, expected, pair, *_ = micro_setup("python_calc")
    prompt = micro_prompt("python_calc", Task.EXTRA)
    good = (root / "known_good_test.txt").read_text()
    jobs = [EvalJob(prompt, k, text, expected["test_path"], expected["code_path"]) for k, text in [(1, "x = (\n"), (0, good)]]
    out = evaluate_many(jobs, {"python_calc": manifest}, {pair.pair_id: "python_calc"}, workers=2)
    assert [o.sample_k for o in out] == [0, 1]
    assert out[0].passed and not out[1].compiled


# --- java micro-project ----------------------------------------------------


def test_java_manifest_and_known_values():
    root, manifest, expected, pair, outline, *_ = micro_setup("java_calc")
    assert manifest.coverage_format is CoverageFormat.XML
    assert [m.name for m in outline.tests] == ["testAdd", "testSub"]
    assert Fraction(*expected["coverage_delta"]) == Fraction(4, 8)


# --- assertion detection and pair selection --------------------------------


@pytest.mark.parametrize(
    "text,lang,expected",
    [
        ("assert x", Language.PYTHON, True),
        ("self.assertEqual(a, b)", Language.PYTHON, True),
        ("with pytest.raises(E): f()", Language.PYTHON, True),
        ("f(x)", Language.PYTHON, False),
        ("assertEquals(1, x);", Language.JAVA, True),
        ('fail("no");', Language.JAVA, True),
        ("x.run();", Language.JAVA, False),
        ("raises(x);", Language.JAVA, False),
    ],
)
def test_has_assertion(text, lang, expected):
    assert has_assertion(text, lang) == expected


def test_select_eval_pairs():
    two_funcs = "def a():\n    pass\n\ndef b():\n    pass\n"
    texts = {
        "c1": two_funcs,
        "c2": "def a():\n    pass\n",
        "t2": "def test_a():\n    assert 1\n\ndef test_b():\n    assert 1\n",
        "t1": "def test_a():\n    assert 1\n",
        "bad": "def (:\n",
    }
    mk = lambda repo, c, t: CodeTestPair(repo, c, t, f"{c}.py", f"{t}{repo}.py", Language.PYTHON, MatchKind.EXACT, 1.0)
    pairs = [mk("r1", "c1", "t2"), mk("r1", "c2", "t2"), mk("r1", "c1", "t1"), mk("r1", "c1", "bad")]
    pairs += [mk("r2", "c1", "t2"), mk("r3", "c1", "t2")]
    many = [CodeTestPair("r4", "c1", "t2", f"c{i}.py", f"t{i}.py", Language.PYTHON, MatchKind.EXACT, 1.0) for i in range(5)]
    out, dropped = select_eval_pairs(pairs + many, texts, per_project=2, seed=0)
    assert dropped == {"single-code-method": 1, "single-test-method": 1, "unparseable": 1, "subsampled": 3}
    assert sum(p.repo_id == "r4" for p in out) == 2
    assert out == select_eval_pairs(pairs + many, texts, per_project=2, seed=0)[0]
