"""Adapters from coverage tool output to ``{file: {"covered": [...], "coverable": [...]}}``.

Supported inputs: coverage.py JSON, Cobertura XML (coverage.py ``xml``) and
JaCoCo XML.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from fractions import Fraction
from pathlib import Path

from .manifest import CoverageFormat


class CoverageParseError(ValueError):
    pass


Normalized = dict[str, dict[str, list[int]]]


def _entry(covered, coverable) -> dict[str, list[int]]:
    return {"covered": sorted(set(covered)), "coverable": sorted(set(coverable))}


def parse_json_report(text: str) -> Normalized:
    try:
        data = json.loads(text)
        files = data["files"]
        return {
            path.replace("\\", "/"): _entry(f["executed_lines"], f["executed_lines"] + f["missing_lines"])
            for path, f in files.items()
        }
    except (ValueError, KeyError, TypeError) as exc:
        raise CoverageParseError(f"not a JSON line report: {exc}") from exc


def _parse_cobertura(root: ET.Element) -> Normalized:
    out: dict[str, tuple[set, set]] = {}
    for cls in root.iter("class"):
        name = cls.get("filename")
        if name is None:
            raise CoverageParseError("class element without filename")
        covered, coverable = out.setdefault(name.replace("\\", "/"), (set(), set()))
        for line in cls.iter("line"):
            nr = int(line.get("number"))
            coverable.add(nr)
            if int(line.get("hits", "0")) > 0:
                covered.add(nr)
    return {k: _entry(*v) for k, v in out.items()}


def _parse_jacoco(root: ET.Element) -> Normalized:
    out = {}
    for pkg in root.iter("package"):
        prefix = pkg.get("name", "")
        for sf in pkg.iter("sourcefile"):
            path = f"{prefix}/{sf.get('name')}" if prefix else sf.get("name")
            covered, coverable = [], []
            for line in sf.iter("line"):
                nr = int(line.get("nr"))
                mi, ci = int(line.get("mi", "0")), int(line.get("ci", "0"))
                if mi + ci == 0:
                    continue
                coverable.append(nr)
                if ci > 0:
                    covered.append(nr)
            out[path] = _entry(covered, coverable)
    return out


def parse_xml_report(text: str) -> Normalized:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise CoverageParseError(f"malformed XML: {exc}") from exc
    try:
        if root.tag == "coverage":
            return _parse_cobertura(root)
        if root.tag == "report":
            return _parse_jacoco(root)
    except (TypeError, ValueError) as exc:
        raise CoverageParseError(f"bad line entry: {exc}") from exc
    raise CoverageParseError(f"unknown XML report root <{root.tag}>")


def parse_report(path: str | Path, fmt: CoverageFormat) -> Normalized:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CoverageParseError(f"cannot read coverage report: {exc}") from exc
    return parse_json_report(text) if fmt is CoverageFormat.JSON else parse_xml_report(text)


def _suffix_match(report_path: str, code_path: str) -> bool:
    a, b = report_path.strip("/"), code_path.strip("/")
    return a == b or a.endswith("/" + b) or b.endswith("/" + a)


def file_coverage(report: Normalized, code_path: str) -> Fraction:
    """Covered over coverable lines of ``code_path``; 0 when the file is absent or has no lines."""
    hits = [k for k in report if _suffix_match(k, code_path)]
    if len(hits) > 1:
        # prefer the longest (most specific) match
        hits.sort(key=len, reverse=True)
    if not hits:
        return Fraction(0)
    entry = report[hits[0]]
    if not entry["coverable"]:
        return Fraction(0)
    return Fraction(len(entry["covered"]), len(entry["coverable"]))
