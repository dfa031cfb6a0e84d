"""Independent method counts for test files, via ``ast`` and ``javalang``.

Run as a script to refresh ``fixtures/golden_method_counts.json``.  The
counts are frozen in that file; tests compare the span scanner against it.
"""

import ast
import json
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "fixtures"


def python_counts(src: str) -> dict:
    methods, tests = [], []

    def visit(body):
        for node in body:
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                methods.append(node.name)
                if node.name.startswith("test"):
                    tests.append(node.name)
            elif isinstance(node, ast.ClassDef):
                visit(node.body)

    visit(ast.parse(src).body)
    return {"methods": methods, "tests": tests}


def java_counts(src: str) -> dict:
    import javalang

    tree = javalang.parse.parse(src)
    methods, tests = [], []

    def visit(type_decl):
        for member in type_decl.body:
            if isinstance(member, javalang.tree.ConstructorDeclaration):
                methods.append(member.name)
            elif isinstance(member, javalang.tree.MethodDeclaration):
                if member.body is None:
                    continue
                methods.append(member.name)
                annotations = {a.name for a in member.annotations}
                if "Test" in annotations or member.name.startswith("test"):
                    tests.append(member.name)
            elif isinstance(member, javalang.tree.TypeDeclaration):
                visit(member)

    for t in tree.types:
        visit(t)
    return {"methods": methods, "tests": tests}


def compute_all() -> dict:
    out = {}
    for p in sorted(f for f in (FIXTURES / "testfiles").iterdir() if f.suffix in (".py", ".java")):
        src = p.read_text(encoding="utf-8")
        out[p.name] = python_counts(src) if p.suffix == ".py" else java_counts(src)
    return out


if __name__ == "__main__":
    data = compute_all()
    (FIXTURES / "golden_method_counts.json").write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    json.dump({k: (len(v["methods"]), len(v["tests"])) for k, v in data.items()}, sys.stdout, indent=1)
