"""Deterministic synthetic data: a small repository corpus and a toy signal corpus.

The repository corpus mimics the real input layout (checkouts plus
``repos.jsonl``) with Python and Java projects, exact and fuzzy test names,
unpaired files, files that trip each filter rule, cross-repository
duplicates, forks and low-star repositories.

The signal corpus works directly on token ids.  The first token of each test
file is a fixed function of the last token of its code file, so a model that
saw code and test side by side can predict it and one that did not cannot.
"""

from __future__ import annotations

import json
import random
import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .tokenizer import CODETESTPAIR, FIRST_MERGE_ID

_WORDS = """alpha bravo cargo delta ember falcon garnet harbor island jasper kettle lumen mango nectar
orbit pepper quartz raven saffron timber umber velvet willow xenon yonder zephyr amber basil cobalt
dune echo fjord glacier hazel iris juniper kelp lotus meadow nova onyx pixel quill ridge sierra tundra""".split()

_OPS = [("+", lambda a, b: a + b), ("-", lambda a, b: a - b), ("*", lambda a, b: a * b)]

_PY_FUNCS = [
    ("binary", "def {name}(a, b):\n    return a {op} b\n"),
    ("scaled", "def {name}(values):\n    total = 0\n    for v in values:\n        total += v * {k}\n    return total\n"),
    ("clamp", "def {name}(x, lo={lo}, hi={hi}):\n    if x < lo:\n        return lo\n    if x > hi:\n        return hi\n    return x\n"),
    ("label", "def {name}(text):\n    return \"{word}:\" + text.strip().lower()\n"),
]

_JAVA_FUNCS = [
    ("binary", "    public static int {name}(int a, int b) {{\n        return a {op} b;\n    }}\n"),
    (
        "scaled",
        "    public static int {name}(int[] values) {{\n        int total = 0;\n        for (int v : values) {{\n"
        "            total += v * {k};\n        }}\n        return total;\n    }}\n",
    ),
    (
        "clamp",
        "    public static int {name}(int x) {{\n        if (x < {lo}) {{\n            return {lo};\n        }}\n"
        "        return Math.min(x, {hi});\n    }}\n",
    ),
    ("label", "    public static String {name}(String text) {{\n        return \"{word}:\" + text.trim().toLowerCase();\n    }}\n"),
]


def _camel(*words: str) -> str:
    return "".join(w.capitalize() for w in words)


def _py_case(kind: str, mod: str, name: str, p: dict) -> str:
    if kind == "binary":
        return f"assert {mod}.{name}(7, 3) == {p['fn'](7, 3)}"
    if kind == "scaled":
        return f"assert {mod}.{name}([1, 2, 3]) == {6 * p['k']}"
    if kind == "clamp":
        return f"assert {mod}.{name}({p['hi'] + 5}) == {p['hi']}"
    return f"assert {mod}.{name}(\"  Hi \") == \"{p['word']}:hi\""


def _java_case(kind: str, cls: str, name: str, p: dict) -> str:
    if kind == "binary":
        return f"assertEquals({p['fn'](7, 3)}, {cls}.{name}(7, 3));"
    if kind == "scaled":
        return f"assertEquals({6 * p['k']}, {cls}.{name}(new int[] {{1, 2, 3}}));"
    if kind == "clamp":
        return f"assertEquals({p['hi']}, {cls}.{name}({p['hi'] + 5}));"
    return f"assertEquals(\"{p['word']}:hi\", {cls}.{name}(\"  Hi \"));"


def _functions(rng: random.Random, table, n: int, naming) -> list[tuple[str, str, str, dict]]:
    out = []
    used = set()
    for _ in range(n):
        kind, template = rng.choice(table)
        while True:
            name = naming(rng.choice(_WORDS), rng.choice(_WORDS))
            if name not in used:
                used.add(name)
                break
        op, fn = rng.choice(_OPS)
        lo = rng.randint(0, 5)
        params = {"op": op, "fn": fn, "k": rng.randint(2, 9), "lo": lo, "hi": lo + rng.randint(5, 50), "word": rng.choice(_WORDS)}
        out.append((kind, name, template.format(name=name, **params), params))
    return out


def python_module(rng: random.Random, module: str, n_funcs: int) -> tuple[str, list]:
    funcs = _functions(rng, _PY_FUNCS, n_funcs, lambda a, b: f"{a}_{b}")
    body = "\n\n".join(src for _, _, src, _ in funcs)
    return f'"""{module.replace("_", " ").capitalize()} helpers."""\n\n\n{body}', funcs


def python_test(rng: random.Random, module: str, funcs: list, as_class: bool) -> str:
    import_path = module.replace("/", ".")
    alias = module.rsplit("/", 1)[-1]
    head = f"import {import_path} as {alias}\n" if "/" in module else f"import {module}\n"
    cases = [(f"test_{name}", _py_case(kind, alias, name, p)) for kind, name, _, p in funcs]
    if rng.random() < 0.3:
        cases.append((f"test_{funcs[0][1]}_twice", _py_case(funcs[0][0], alias, funcs[0][1], funcs[0][3])))
    if as_class:
        body = "\n".join(f"    def {n}(self):\n        {c}\n" for n, c in cases)
        return f"{head}\n\nclass Test{_camel(*alias.split('_'))}:\n{body}"
    return head + "\n\n" + "\n\n".join(f"def {n}():\n    {c}\n" for n, c in cases)


def java_class(rng: random.Random, package: str, cls: str, n_funcs: int) -> tuple[str, list]:
    funcs = _functions(rng, _JAVA_FUNCS, n_funcs, lambda a, b: a + b.capitalize())
    body = "\n".join(src for _, _, src, _ in funcs)
    return f"package {package};\n\npublic final class {cls} {{\n{body}}}\n", funcs


def java_test(package: str, cls: str, test_cls: str, funcs: list) -> str:
    methods = "\n".join(
        f"    @Test\n    public void {name}Works() {{\n        {_java_case(kind, cls, name, p)}\n    }}\n"
        for kind, name, _, p in funcs
    )
    return (
        f"package {package};\n\nimport static org.junit.Assert.assertEquals;\n\nimport org.junit.Test;\n\n"
        f"public class {test_cls} {{\n{methods}}}\n"
    )


_AUTOGEN_PY = "# Auto-generated by protoc. Do not edit.\nSCHEMA = {'id': 1}\n"
_AUTOGEN_JAVA = "// This file was automatically generated. DO NOT EDIT.\npackage gen;\n\npublic class Schema {}\n"


def _junk(rng: random.Random, lang: str) -> dict[str, str]:
    """Files that a filter rule rejects, one rule each."""
    ext = "py" if lang == "python" else "java"
    comment = "#" if lang == "python" else "//"
    out = {}
    choice = rng.randrange(4)
    if choice == 0:
        out[f"generated_schema.{ext}"] = _AUTOGEN_PY if lang == "python" else _AUTOGEN_JAVA
    elif choice == 1:
        out[f"minified.{ext}"] = comment + " " + "x = 1; " * 200 + "\n"
    elif choice == 2:
        out[f"table.{ext}"] = "\n".join(comment + " |" + "-+" * 20 + "|" for _ in range(10)) + "\n"
    else:
        out[f"wide.{ext}"] = "\n".join(f"{comment} " + " ".join(rng.choice(_WORDS) for _ in range(20)) for _ in range(12)) + "\n"
    return out


_SHARED_PY = {"utils/__init__.py": "", "setup_helpers.py": '"""Shared build helper."""\n\nVERSION = "1.0"\n'}
_SHARED_JAVA = {"src/main/java/common/Version.java": "package common;\n\npublic final class Version {\n    public static final String V = \"1.0\";\n}\n"}


def _python_repo(rng: random.Random, shared: bool) -> dict[str, str]:
    files: dict[str, str] = {}
    pkg = rng.choice(_WORDS)
    n_modules = rng.randint(3, 5)
    modules = []
    for _ in range(n_modules):
        while True:
            m = f"{rng.choice(_WORDS)}_{rng.choice(_WORDS)}"
            if m not in modules:
                break
        modules.append(m)
    for i, mod in enumerate(modules):
        src, funcs = python_module(rng, mod, rng.randint(2, 4))
        files[f"{pkg}/{mod}.py"] = src
        style = i % 4
        as_class = rng.random() < 0.4
        if style == 3:
            continue  # code file without tests
        if style == 2 and "_" in mod:
            tname = f"test_{mod.replace('_', '')}"  # fuzzy: separator dropped
        else:
            tname = f"test_{mod}" if rng.random() < 0.7 else f"{mod}_test"
        files[f"tests/{tname}.py"] = python_test(rng, f"{pkg}/{mod}", funcs, as_class)
    files[f"{pkg}/__init__.py"] = f'"""{pkg} package."""\n'
    if rng.random() < 0.5:
        files["tests/test_integration.py"] = "import pytest\n\n\n@pytest.mark.skip\ndef test_end_to_end():\n    assert True\n"
    files.update({f"scripts/{k}": v for k, v in _junk(rng, "python").items()})
    if shared:
        files.update(_SHARED_PY)
    return files


def _java_repo(rng: random.Random, shared: bool) -> dict[str, str]:
    files: dict[str, str] = {}
    pkg = rng.choice(_WORDS)
    classes = []
    for _ in range(rng.randint(3, 5)):
        while True:
            c = _camel(rng.choice(_WORDS), rng.choice(["Util", "Helper", "Math", "Codec", "Parser"]))
            if c not in classes:
                break
        classes.append(c)
    for i, cls in enumerate(classes):
        src, funcs = java_class(rng, pkg, cls, rng.randint(2, 4))
        files[f"src/main/java/{pkg}/{cls}.java"] = src
        style = i % 4
        if style == 3:
            continue
        if style == 2:
            tcls = f"{cls}sTest"  # fuzzy: pluralized
        else:
            tcls = f"{cls}Test" if rng.random() < 0.7 else f"Test{cls}"
        files[f"src/test/java/{pkg}/{tcls}.java"] = java_test(pkg, cls, tcls, funcs)
    files.update({f"tools/{k}": v for k, v in _junk(rng, "java").items()})
    if shared:
        files.update(_SHARED_JAVA)
    return files


def microproject_dir(name: str) -> Path:
    """Path of a bundled micro-project (``python_calc`` or ``java_calc``)."""
    return Path(str(resources.files("codetestlm") / "data" / "microprojects" / name))


FIXTURE_CONFIG = """version = 1
seed = 0

[ingest]
test_repos_per_language = 4
pinned_test_repos = ["fixtures/python_calc"]

[tokenizer]
vocab_size = 800
lines_per_file = 40

[corpus]
context_length = 1024

[lm]
order = 4

[sampling]
num_samples = 2
max_tokens = 96

[signal]
seeds = [0, 1, 2, 3, 4]

[eval]
manifest_dir = "manifests"
pairs_per_project = 2
"""


def write_fixture_corpus(root: str | Path, n_python: int = 24, n_java: int = 16, seed: int = 0) -> dict:
    """Write checkouts, ``repos.jsonl``, manifests and a small pipeline config under ``root``.

    Returns a summary with file counts.
    """
    root = Path(root)
    rng = random.Random(seed)
    records = []
    n_files = 0
    specs = [("python", i) for i in range(n_python)] + [("java", i) for i in range(n_java)]
    for lang, i in specs:
        owner = f"{rng.choice(_WORDS)}{i}/{lang[:2]}-{rng.choice(_WORDS)}"
        shared = i % 5 == 1
        files = _python_repo(rng, shared) if lang == "python" else _java_repo(rng, shared)
        stars = rng.randint(10, 500)
        fork = False
        if i == 3:
            stars = rng.randint(0, 9)
        if i == 4:
            fork = True
        for rel, text in files.items():
            p = root / owner / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8", newline="")
            n_files += 1
        records.append({"owner_name": owner, "star_count": stars, "is_fork": fork, "subject_language": lang})

    calc = root / "fixtures" / "python_calc"
    shutil.copytree(microproject_dir("python_calc"), calc, ignore=shutil.ignore_patterns("*.txt", "*.json", "manifest.toml", "__pycache__"))
    n_files += sum(1 for p in calc.rglob("*.py"))
    records.append({"owner_name": "fixtures/python_calc", "star_count": 50, "is_fork": False, "subject_language": "python"})

    with open(root / "repos.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    manifests = root / "manifests"
    manifests.mkdir(exist_ok=True)
    text = (microproject_dir("python_calc") / "manifest.toml").read_text(encoding="utf-8")
    text = text.replace('project_id = "python_calc"', 'project_id = "fixtures/python_calc"')
    text = text.replace('workdir = "."', 'workdir = "../fixtures/python_calc"')
    (manifests / "python_calc.toml").write_text(text, encoding="utf-8")
    (root / "pipeline.toml").write_text(FIXTURE_CONFIG, encoding="utf-8")
    return {"repos": len(records), "files": n_files}


@dataclass
class SignalCorpus:
    aligned: list[tuple[int, ...]]
    shuffled: list[tuple[int, ...]]
    heldout: list[tuple[tuple[int, ...], tuple[int, ...]]]
    vocab_size: int


def _signal_pair(rng: random.Random, k: int, code_len: tuple[int, int], test_len: tuple[int, int], coupling: float):
    code = tuple(rng.randrange(k) for _ in range(rng.randint(*code_len)))
    first = (code[-1] * 7 + 3) % k if rng.random() < coupling else rng.randrange(k)
    test = [first]
    for _ in range(rng.randint(*test_len) - 1):
        # the test body follows a two-way branching chain both models can learn
        test.append((test[-1] * 3 + 1 + rng.randrange(2)) % k)
    return code, tuple(test)


def signal_corpus(
    n_pairs: int = 400,
    n_heldout: int = 100,
    content_tokens: int = 40,
    code_len: tuple[int, int] = (8, 24),
    test_len: tuple[int, int] = (4, 10),
    coupling: float = 0.9,
    seed: int = 0,
) -> SignalCorpus:
    """Paired documents, the same files unpaired, and held-out (code, test) pairs."""
    rng = random.Random(seed)
    pairs = [_signal_pair(rng, content_tokens, code_len, test_len, coupling) for _ in range(n_pairs)]
    heldout = [_signal_pair(rng, content_tokens, code_len, test_len, coupling) for _ in range(n_heldout)]
    aligned = [code + (CODETESTPAIR,) + test for code, test in pairs]
    files = [f for pair in pairs for f in pair]
    rng.shuffle(files)
    return SignalCorpus(aligned, files, heldout, FIRST_MERGE_ID)
