"""Span-preserving scanners for Python and Java test files.

Neither scanner builds an AST.  Python files go through :mod:`tokenize` and
methods are the ``def`` blocks found by indentation; Java files are lexed
(skipping comments and literals) and methods are found by brace matching
inside type bodies.  All offsets are character offsets into the decoded
text, and every span covers whole lines where the layout allows.
"""

from __future__ import annotations

import io
import re
import tokenize
from dataclasses import dataclass, field

from .common import Language


class UnparseableFile(ValueError):
    pass


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def text(self, source: str) -> str:
        return source[self.start : self.end]


@dataclass(frozen=True)
class MethodSpan:
    name: str
    start: int
    end: int
    is_test: bool
    indent: str = ""
    statements: tuple[Span, ...] = ()

    @property
    def span(self) -> Span:
        return Span(self.start, self.end)


@dataclass
class TestFileOutline:
    file_id: str
    language: Language
    length: int
    methods: list[MethodSpan] = field(default_factory=list)

    @property
    def preamble_span(self) -> Span:
        return Span(0, self.methods[0].start if self.methods else self.length)

    @property
    def trailing_span(self) -> Span:
        return Span(self.methods[-1].end if self.methods else self.length, self.length)

    @property
    def tests(self) -> list[MethodSpan]:
        return [m for m in self.methods if m.is_test]

    def spans(self) -> list[Span]:
        return [self.preamble_span, *(m.span for m in self.methods), self.trailing_span]

    def pieces(self) -> list[Span]:
        """Spans and the gaps between them, in order; together they tile the file."""
        out: list[Span] = []
        pos = 0
        for s in self.spans():
            if s.start > pos:
                out.append(Span(pos, s.start))
            out.append(s)
            pos = max(pos, s.end)
        if pos < self.length:
            out.append(Span(pos, self.length))
        return out


def _line_starts(text: str) -> list[int]:
    starts = [0]
    for m in re.finditer("\n", text):
        starts.append(m.end())
    return starts


def _extend_to_line_start(text: str, pos: int) -> int:
    ls = text.rfind("\n", 0, pos) + 1
    return ls if text[ls:pos].strip() == "" else pos


def _extend_to_line_end(text: str, pos: int) -> int:
    nl = text.find("\n", pos)
    stop = len(text) if nl < 0 else nl + 1
    return stop if text[pos:stop].strip() == "" else pos


# --- Python -----------------------------------------------------------------


@dataclass
class _LogicalLine:
    first: int  # first physical row, 1-based
    last: int  # row holding NEWLINE
    col: int
    tokens: list[tokenize.TokenInfo]

    @property
    def head(self) -> str:
        return self.tokens[0].string

    def def_name(self) -> str | None:
        toks = [t.string for t in self.tokens]
        if toks[:1] == ["async"]:
            toks = toks[1:]
        if len(toks) >= 2 and toks[0] == "def":
            return toks[1]
        return None

    def ends_block_header(self) -> bool:
        sig = [t for t in self.tokens if t.type not in (tokenize.COMMENT, tokenize.NL)]
        return bool(sig) and sig[-1].string == ":"


def _python_logical_lines(text: str) -> list[_LogicalLine]:
    lines: list[_LogicalLine] = []
    cur: list[tokenize.TokenInfo] = []
    try:
        for tok in tokenize.generate_tokens(io.StringIO(text).readline):
            if tok.type in (tokenize.INDENT, tokenize.DEDENT, tokenize.ENCODING, tokenize.ENDMARKER):
                continue
            if tok.type in (tokenize.NL, tokenize.COMMENT) and not cur:
                continue
            if tok.type == tokenize.NEWLINE:
                if cur:
                    lines.append(_LogicalLine(cur[0].start[0], tok.start[0], cur[0].start[1], cur))
                cur = []
                continue
            cur.append(tok)
    except (tokenize.TokenError, IndentationError, SyntaxError) as exc:
        raise UnparseableFile(f"python tokenization failed: {exc}") from exc
    if cur:
        lines.append(_LogicalLine(cur[0].start[0], cur[-1].end[0], cur[0].start[1], cur))
    return lines


def _python_methods(text: str) -> list[MethodSpan]:
    starts = _line_starts(text)

    def row_start(row: int) -> int:
        return starts[row - 1]

    def row_after(row: int) -> int:
        return starts[row] if row < len(starts) else len(text)

    lines = _python_logical_lines(text)
    methods = []
    stack: list[tuple[str, int]] = []  # (kind, col) of enclosing class/def blocks
    pending_decorators: list[_LogicalLine] = []
    current: dict | None = None

    def close_current():
        nonlocal current
        if current is None:
            return
        ll_def, body, decorators = current["def"], current["body"], current["decorators"]
        first = decorators[0] if decorators else ll_def
        last_row = body[-1].last if body else ll_def.last
        start = row_start(first.first)
        stmts = tuple(
            Span(row_start(b.first), row_after(b.last))
            for b in body
            if not b.ends_block_header() and b.col > ll_def.col
        )
        name = ll_def.def_name()
        methods.append(
            MethodSpan(name, start, row_after(last_row), name.startswith("test"), text[start : start + first.col], stmts)
        )
        current = None

    for ll in lines:
        while stack and ll.col <= stack[-1][1]:
            kind, _ = stack.pop()
            if kind == "def":
                close_current()
        if stack and stack[-1][0] == "def":
            current["body"].append(ll)
            continue
        if ll.head == "@":
            pending_decorators.append(ll)
            continue
        name = ll.def_name()
        if name is not None:
            stack.append(("def", ll.col))
            current = {"def": ll, "body": [], "decorators": [d for d in pending_decorators if d.col == ll.col]}
        elif ll.head == "class" and ll.ends_block_header():
            stack.append(("class", ll.col))
        pending_decorators = []
        if name is not None and not ll.ends_block_header():
            # one-line def: ``def f(): return 1``
            stack.pop()
            close_current()
    while stack:
        kind, _ = stack.pop()
        if kind == "def":
            close_current()
    methods.sort(key=lambda m: m.start)
    return methods


# --- Java -------------------------------------------------------------------

_JAVA_LEX = re.compile(
    r"""
     (?P<ws>\s+)
    |(?P<comment>//[^\n]*|/\*.*?\*/)
    |(?P<text>\"\"\"(?:\\.|[^\\])*?\"\"\")
    |(?P<str>"(?:\\.|[^"\\\n])*")
    |(?P<chr>'(?:\\.|[^'\\\n])+')
    |(?P<id>[A-Za-z_$][\w$]*)
    |(?P<num>\d[\w.]*)
    |(?P<op>.)
    """,
    re.S | re.X,
)

_TYPE_KEYWORDS = {"class", "interface", "enum", "record"}
_CONTROL_WORDS = {"if", "for", "while", "switch", "catch", "synchronized", "return", "new", "throw", "else", "try", "do"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    start: int
    end: int


def java_tokens(text: str) -> list[_Tok]:
    toks = []
    for m in _JAVA_LEX.finditer(text):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        value = m.group()
        if kind == "op" and (value in "\"'" or (value == "/" and text.startswith("/*", m.start()))):
            raise UnparseableFile(f"unterminated literal or comment at offset {m.start()}")
        toks.append(_Tok(kind, value, m.start(), m.end()))
    return toks


def _match_brackets(toks: list[_Tok]) -> dict[int, int]:
    pairs = {"(": ")", "[": "]", "{": "}"}
    closers = {v: k for k, v in pairs.items()}
    stack: list[int] = []
    match: dict[int, int] = {}
    for i, t in enumerate(toks):
        if t.kind != "op":
            continue
        if t.value in pairs:
            stack.append(i)
        elif t.value in closers:
            if not stack or toks[stack[-1]].value != closers[t.value]:
                raise UnparseableFile(f"unbalanced {t.value!r} at offset {t.start}")
            match[stack.pop()] = i
    if stack:
        raise UnparseableFile(f"unclosed {toks[stack[-1]].value!r} at offset {toks[stack[-1]].start}")
    return match


def _java_header(toks: list[_Tok], match: dict[int, int], lo: int, hi: int) -> tuple[list[str], str | None]:
    """Annotation names and method name (None if not a method) of header tokens ``lo..hi``."""
    annotations = []
    i = lo
    name = None
    while i < hi:
        t = toks[i]
        if t.value == "@" and i + 1 < hi and toks[i + 1].kind == "id":
            if toks[i + 1].value == "interface":
                return annotations, None
            j = i + 1
            qual = [toks[j].value]
            while j + 2 < hi and toks[j + 1].value == "." and toks[j + 2].kind == "id":
                j += 2
                qual.append(toks[j].value)
            annotations.append(qual[-1])
            i = j + 1
            if i < hi and toks[i].value == "(":
                i = match[i] + 1
            continue
        if t.kind == "id" and t.value in _TYPE_KEYWORDS:
            return annotations, None
        if t.value == "=":
            return annotations, None
        if t.value == "(":
            prev = toks[i - 1] if i > lo else None
            if prev is not None and prev.kind == "id" and prev.value not in _CONTROL_WORDS:
                name = prev.value
            return annotations, name
        i += 1
    return annotations, None


def _java_statements(text: str, toks: list[_Tok], match: dict[int, int], lo: int, hi: int) -> tuple[Span, ...]:
    """Simple statements (ending in ``;``) directly inside the body ``lo..hi`` (exclusive)."""
    out = []
    i = lo
    start = None
    while i < hi:
        t = toks[i]
        if start is None:
            start = i
        if t.value in ("(", "["):
            i = match[i] + 1
            continue
        if t.value == "{":
            # block statement: not a completion target
            i = match[i] + 1
            start = None
            continue
        if t.value == ";":
            a = _extend_to_line_start(text, toks[start].start)
            b = _extend_to_line_end(text, t.end)
            out.append(Span(a, b))
            start = None
        i += 1
    return tuple(out)


def _header_words(toks: list[_Tok], match: dict[int, int], lo: int, hi: int) -> set[str]:
    # identifiers outside parentheses, so `@Test(expected = X.class)` is not a type header
    words = set()
    i = lo
    while i < hi:
        if toks[i].value == "(":
            i = match[i] + 1
            continue
        if toks[i].kind == "id":
            words.add(toks[i].value)
        i += 1
    return words


def _java_members(text: str, toks: list[_Tok], match: dict[int, int], lo: int, hi: int, in_type: bool, out: list):
    i = lo
    header = lo
    while i < hi:
        t = toks[i]
        if t.value == ";":
            header = i + 1
        elif t.value in ("(", "["):
            i = match[i]
        elif t.value == "=" and in_type:
            # field initializer: skip to the terminating semicolon
            j = i + 1
            while j < hi and toks[j].value != ";":
                j = match[j] + 1 if toks[j].value in "([{" else j + 1
            i = j
            header = j + 1
        elif t.value == "{":
            close = match[i]
            annotations, name = _java_header(toks, match, header, i)
            words = _header_words(toks, match, header, i)
            if words & _TYPE_KEYWORDS and not (toks[header].value == "@" and toks[header + 1].value == "interface"):
                _java_members(text, toks, match, i + 1, close, True, out)
            elif in_type and name is not None:
                start = _extend_to_line_start(text, toks[header].start)
                end = _extend_to_line_end(text, toks[close].end)
                is_test = "Test" in annotations or name.startswith("test")
                indent = text[start : toks[header].start] if start < toks[header].start else ""
                stmts = _java_statements(text, toks, match, i + 1, close)
                out.append(MethodSpan(name, start, end, is_test, indent, stmts))
            i = close
            header = close + 1
        i += 1


def _java_methods(text: str) -> list[MethodSpan]:
    toks = java_tokens(text)
    match = _match_brackets(toks)
    methods: list[MethodSpan] = []
    _java_members(text, toks, match, 0, len(toks), False, methods)
    methods.sort(key=lambda m: m.start)
    return methods


def outline_text(text: str, language: Language, file_id: str = "") -> TestFileOutline:
    if language is Language.PYTHON:
        methods = _python_methods(text)
    elif language is Language.JAVA:
        methods = _java_methods(text)
    else:
        raise ValueError(f"unsupported language {language}")
    for a, b in zip(methods, methods[1:]):
        if b.start < a.end:
            raise UnparseableFile(f"overlapping methods {a.name} and {b.name}")
    return TestFileOutline(file_id, language, len(text), methods)


def outline_test_file(sf) -> TestFileOutline:
    """Outline a :class:`~codetestlm.ingest.SourceFile` (or anything with text/subject_language/file_id)."""
    return outline_text(sf.text, sf.subject_language, sf.file_id)


# --- method boundaries in generated text -------------------------------------


def method_end(text: str, language: Language) -> int | None:
    """Offset just past the first complete method in ``text``, or None if it is still open."""
    if language is Language.JAVA:
        try:
            toks = java_tokens(text)
        except UnparseableFile:
            return None
        depth = 0
        seen_paren = False
        for t in toks:
            if t.value == "(":
                seen_paren = True
            if t.value == "{":
                depth += 1
            elif t.value == "}":
                depth -= 1
                if depth == 0 and seen_paren:
                    return t.end
                if depth < 0:
                    return t.start
        return None
    lines = text.splitlines(keepends=True)
    pos = 0
    base = None
    body_seen = False
    for line in lines:
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            indent = len(line) - len(line.lstrip())
            if base is None:
                base = indent
            elif indent > base:
                body_seen = True
            elif body_seen:
                return pos
        pos += len(line)
    return None


# --- block trees for structural similarity -----------------------------------


@dataclass
class BlockNode:
    kind: str
    items: list = field(default_factory=list)  # str labels and child BlockNodes

    def signature(self) -> str:
        inner = " ".join(i if isinstance(i, str) else i.signature() for i in self.items)
        return f"{self.kind}[{inner}]"

    def walk(self):
        yield self
        for i in self.items:
            if isinstance(i, BlockNode):
                yield from i.walk()


_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {v: k for k, v in _OPEN.items()}


def block_tree(lines: list[tuple[int | None, list[str]]], is_label) -> BlockNode:
    """Build a tree from ``(indent_level, tokens)`` lines.

    Brackets open child nodes.  A line at a deeper indentation level than the
    previous one opens a ``block`` child.  Lines with level None (continuation
    lines) never change block structure.  Only tokens for which ``is_label``
    is true (keywords and punctuation) are kept as labels.  Unbalanced
    closers are dropped.  Each complete line with a level ends with a ``;``
    label.
    """
    root = BlockNode("root")
    blocks: list[tuple[int, BlockNode]] = [(0, root)]
    brackets: list[BlockNode] = []
    for level, toks in lines:
        if level is not None and not brackets:
            while len(blocks) > 1 and level < blocks[-1][0]:
                blocks.pop()
            if level > blocks[-1][0]:
                node = BlockNode("block")
                blocks[-1][1].items.append(node)
                blocks.append((level, node))
        for tok in toks:
            target = brackets[-1] if brackets else blocks[-1][1]
            if tok in _OPEN:
                node = BlockNode(tok)
                target.items.append(node)
                brackets.append(node)
            elif tok in _CLOSE:
                if brackets and brackets[-1].kind == _CLOSE[tok]:
                    brackets.pop()
            elif is_label(tok):
                target.items.append(tok)
        if level is not None and not brackets:
            blocks[-1][1].items.append(";")
    return root
