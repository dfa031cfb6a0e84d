from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from conftest import FIXTURES, load_fixture
from oracles.method_counts import compute_all, python_counts
from codetestlm.common import Language
from codetestlm.scanner import UnparseableFile, block_tree, method_end, outline_text

TESTFILES = sorted(p for p in (FIXTURES / "testfiles").iterdir() if p.suffix in (".py", ".java"))


def lang_of(path: Path) -> Language:
    return Language.PYTHON if path.suffix == ".py" else Language.JAVA


def test_twenty_real_files():
    assert len(TESTFILES) == 20
    assert {p.suffix for p in TESTFILES} == {".py", ".java"}


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_method_counts_match_golden(path):
    golden = load_fixture("golden_method_counts.json")[path.name]
    outline = outline_text(path.read_text(encoding="utf-8"), lang_of(path))
    assert [m.name for m in outline.methods] == golden["methods"]
    assert [m.name for m in outline.tests] == golden["tests"]


def test_golden_counts_reproduce_from_oracle():
    pytest.importorskip("javalang")
    assert compute_all() == load_fixture("golden_method_counts.json")


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_pieces_tile_the_file(path):
    text = path.read_text(encoding="utf-8")
    outline = outline_text(text, lang_of(path))
    pieces = outline.pieces()
    assert "".join(s.text(text) for s in pieces) == text
    assert all(a.end == b.start for a, b in zip(pieces, pieces[1:]))


@pytest.mark.parametrize("path", TESTFILES, ids=lambda p: p.name)
def test_statements_sit_inside_their_method(path):
    text = path.read_text(encoding="utf-8")
    for m in outline_text(text, lang_of(path)).methods:
        for s in m.statements:
            assert m.start <= s.start < s.end <= m.end
            assert s.text(text).strip()


def test_java_strings_and_comments_are_not_code():
    text = (FIXTURES / "testfiles" / "StringsTest.java").read_text()
    names = [m.name for m in outline_text(text, Language.JAVA).methods]
    assert "fake" not in names and "another" not in names


def test_unparseable_input_raises():
    with pytest.raises(UnparseableFile):
        outline_text("def f(:\n    return 1\n  x\n", Language.PYTHON)
    with pytest.raises(UnparseableFile):
        outline_text('class A { void f() { String s = "open; } }', Language.JAVA)
    with pytest.raises(UnparseableFile):
        outline_text("class A { /* never closed", Language.JAVA)


def test_method_end_python():
    text = "def test_a():\n    x = 1\n\n    assert x\n\ndef test_b():\n    pass\n"
    assert text[: method_end(text, Language.PYTHON)] == "def test_a():\n    x = 1\n\n    assert x\n\n"
    assert method_end("def test_a():\n    x = 1\n", Language.PYTHON) is None


def test_method_end_java():
    text = "@Test\nvoid a() {\n  if (x) { y(); }\n}\nvoid b() {}"
    assert text[: method_end(text, Language.JAVA)] == "@Test\nvoid a() {\n  if (x) { y(); }\n}"
    assert method_end("void a() {\n  int x = 1;\n", Language.JAVA) is None
    # a stray closer ends the generation at the enclosing class brace
    assert method_end("  }\n}", Language.JAVA) == 2


def test_block_tree_shape():
    is_label = lambda t: not t[0].isalnum() and t[0] != "_" or t in {"if", "return"}
    tree = block_tree([(0, ["if", "x", ":"]), (1, ["return", "f", "(", "a", ")"]), (0, ["y", "=", "1"])], is_label)
    assert tree.signature() == "root[if : ; block[return ([] ;] = ;]"
    assert [n.kind for n in tree.walk()] == ["root", "block", "("]
    # an unbalanced closer is dropped
    assert block_tree([(None, [")", "x"])], is_label).signature() == "root[]"


# --- generated python test files -------------------------------------------

bodies = st.lists(st.sampled_from(["x = 1", "assert x == 1", "y = f(\n        2)", "# note", "", 's = """\nraw\n"""']), min_size=1, max_size=4)


@st.composite
def python_file(draw):
    parts = ["import os\n"]
    n = draw(st.integers(0, 5))
    for i in range(n):
        kind = draw(st.sampled_from(["test", "helper", "class", "assign"]))
        decorated = draw(st.booleans())
        if kind == "assign":
            parts.append(f"CONST_{i} = {i}\n")
            continue
        if kind == "class":
            parts.append(f"class TestK{i}:\n")
            for j in range(draw(st.integers(1, 3))):
                body = "\n".join(("        " + l if l else "") for l in draw(bodies))
                parts.append(f"    def test_m{i}_{j}(self):\n{body}\n        pass\n")
            continue
        name = f"test_f{i}" if kind == "test" else f"helper_{i}"
        body = "\n".join(("    " + l if l else "") for l in draw(bodies))
        deco = "@pytest.mark.x\n" if decorated else ""
        parts.append(f"{deco}def {name}():\n{body}\n    return None\n")
    sep = draw(st.sampled_from(["\n", "\n\n", "\n# comment\n"]))
    return sep.join(parts)


@given(python_file())
def test_generated_python_files(text):
    outline = outline_text(text, Language.PYTHON)
    oracle = python_counts(text)
    assert [m.name for m in outline.methods] == oracle["methods"]
    assert [m.name for m in outline.tests] == oracle["tests"]
    assert "".join(s.text(text) for s in outline.pieces()) == text
