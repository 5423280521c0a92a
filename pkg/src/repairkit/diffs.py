"""Unified diff construction, parsing, and fuzzy application.

The wire format is the standard `@@ -a,b +c,d @@` hunk syntax without file
headers (headers are tolerated on input and skipped). Texts that do not end
with a newline round-trip exactly via the `\\ No newline at end of file`
marker.

Line matching during construction uses difflib's SequenceMatcher; hunk
grouping, rendering, parsing, and application are implemented here.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from difflib import SequenceMatcher
from typing import Iterator

from .errors import HunkApplyFailure, MalformedOutput

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_NO_NEWLINE = "\\ No newline at end of file"


def split_lines(text: str) -> list[str]:
    """Split into lines that keep their terminators; '' yields []."""
    return text.splitlines(keepends=True)


@dataclass(frozen=True)
class DiffLine:
    tag: str  # ' ', '-', or '+'
    text: str  # content without the trailing newline
    newline: bool = True  # False only for a final line with no terminator

    @property
    def element(self) -> str:
        return self.text + ("\n" if self.newline else "")


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[DiffLine, ...]

    def old_elements(self) -> list[str]:
        return [dl.element for dl in self.lines if dl.tag in " -"]

    def new_elements(self) -> list[str]:
        return [dl.element for dl in self.lines if dl.tag in " +"]

    def validate(self) -> None:
        old_n = sum(1 for dl in self.lines if dl.tag in " -")
        new_n = sum(1 for dl in self.lines if dl.tag in " +")
        if old_n != self.old_len or new_n != self.new_len:
            raise MalformedOutput(
                f"hunk body ({old_n}/{new_n} lines) does not match header "
                f"(-{self.old_start},{self.old_len} +{self.new_start},{self.new_len})"
            )


@dataclass(frozen=True)
class UnifiedDiff:
    hunks: tuple[Hunk, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.hunks

    def render(self) -> str:
        parts: list[str] = []
        for hunk in self.hunks:
            parts.append(
                f"@@ -{_range(hunk.old_start, hunk.old_len)} "
                f"+{_range(hunk.new_start, hunk.new_len)} @@\n"
            )
            for dl in hunk.lines:
                parts.append(f"{dl.tag}{dl.text}\n")
                if not dl.newline:
                    parts.append(_NO_NEWLINE + "\n")
        return "".join(parts)

    @classmethod
    def parse(cls, text: str) -> "UnifiedDiff":
        """Decode rendered diff text; raises MalformedOutput on garbage."""
        lines = text.split("\n")
        i = 0
        # Tolerate leading blank lines and optional ---/+++ file headers.
        while i < len(lines) and not lines[i].strip():
            i += 1
        while i < len(lines) and lines[i].startswith(("--- ", "+++ ", "---", "+++")):
            i += 1
        hunks: list[Hunk] = []
        while i < len(lines):
            if not lines[i].strip():
                i += 1
                continue
            m = _HUNK_RE.match(lines[i])
            if m is None:
                raise MalformedOutput(f"expected hunk header, got {lines[i]!r}")
            old_start = int(m.group(1))
            old_len = int(m.group(2)) if m.group(2) is not None else 1
            new_start = int(m.group(3))
            new_len = int(m.group(4)) if m.group(4) is not None else 1
            i += 1
            body: list[DiffLine] = []
            want_old, want_new = old_len, new_len
            while i < len(lines) and (want_old > 0 or want_new > 0):
                raw = lines[i]
                if raw == _NO_NEWLINE:
                    body[-1:] = [_strip_newline(body[-1])] if body else []
                    i += 1
                    continue
                tag, content = (raw[0], raw[1:]) if raw else (" ", "")
                if tag not in " -+":
                    raise MalformedOutput(f"unexpected line in hunk body: {raw!r}")
                if tag in " -":
                    want_old -= 1
                if tag in " +":
                    want_new -= 1
                body.append(DiffLine(tag, content))
                i += 1
            if want_old > 0 or want_new > 0:
                raise MalformedOutput("hunk body shorter than header counts")
            if i < len(lines) and lines[i] == _NO_NEWLINE and body:
                body[-1:] = [_strip_newline(body[-1])]
                i += 1
            hunk = Hunk(old_start, old_len, new_start, new_len, tuple(body))
            hunk.validate()
            hunks.append(hunk)
        _check_ordering(hunks)
        return cls(tuple(hunks))


def _strip_newline(dl: DiffLine) -> DiffLine:
    return DiffLine(dl.tag, dl.text, newline=False)


def _range(start: int, length: int) -> str:
    return f"{start}" if length == 1 else f"{start},{length}"


def _check_ordering(hunks: list[Hunk]) -> None:
    prev_end = 0
    for hunk in hunks:
        begin = hunk.old_start - 1 if hunk.old_len else hunk.old_start
        if begin < prev_end:
            raise MalformedOutput("hunks overlap or are out of order")
        prev_end = begin + hunk.old_len


def _grouped_opcodes(
    opcodes: list[tuple[str, int, int, int, int]], context: int
) -> Iterator[list[tuple[str, int, int, int, int]]]:
    """Group change opcodes, clipping equal runs to the context width.

    Adjacent changes merge into one group when the equal run between them
    is at most twice the context width.
    """
    codes = [op for op in opcodes]
    if not codes:
        return
    if codes[0][0] == "equal":
        tag, i1, i2, j1, j2 = codes[0]
        codes[0] = (tag, max(i1, i2 - context), i2, max(j1, j2 - context), j2)
    if codes[-1][0] == "equal":
        tag, i1, i2, j1, j2 = codes[-1]
        codes[-1] = (tag, i1, min(i2, i1 + context), j1, min(j2, j1 + context))
    group: list[tuple[str, int, int, int, int]] = []
    for tag, i1, i2, j1, j2 in codes:
        if tag == "equal" and i2 - i1 > 2 * context:
            group.append((tag, i1, min(i2, i1 + context), j1, min(j2, j1 + context)))
            yield group
            group = [(tag, max(i1, i2 - context), i2, max(j1, j2 - context), j2)]
            continue
        group.append((tag, i1, i2, j1, j2))
    if group and not (len(group) == 1 and group[0][0] == "equal"):
        yield group


def _line(tag: str, element: str) -> DiffLine:
    if element.endswith("\n"):
        return DiffLine(tag, element[:-1])
    return DiffLine(tag, element, newline=False)


def make_unified_diff(a: str, b: str, context: int = 3) -> UnifiedDiff:
    """Line diff from a to b with the given context width; empty when a == b."""
    if context < 0:
        raise ValueError("context must be >= 0")
    al, bl = split_lines(a), split_lines(b)
    matcher = SequenceMatcher(None, al, bl, autojunk=False)
    hunks: list[Hunk] = []
    for group in _grouped_opcodes(matcher.get_opcodes(), context):
        body: list[DiffLine] = []
        for tag, i1, i2, j1, j2 in group:
            if tag == "equal":
                body.extend(_line(" ", el) for el in al[i1:i2])
                continue
            if tag in ("replace", "delete"):
                body.extend(_line("-", el) for el in al[i1:i2])
            if tag in ("replace", "insert"):
                body.extend(_line("+", el) for el in bl[j1:j2])
        i1, i2 = group[0][1], group[-1][2]
        j1, j2 = group[0][3], group[-1][4]
        hunks.append(
            Hunk(
                old_start=i1 + 1 if i2 > i1 else i1,
                old_len=i2 - i1,
                new_start=j1 + 1 if j2 > j1 else j1,
                new_len=j2 - j1,
                lines=tuple(body),
            )
        )
    return UnifiedDiff(tuple(hunks))


def apply_diff(diff: UnifiedDiff, a: str, fuzz: int = 0) -> str:
    """Apply a unified diff to text `a`.

    Each hunk is tried at its stated position first; on mismatch the old
    window is searched within +/-fuzz lines. A hunk that matches nowhere,
    or equally well at two offsets of the same distance, raises
    HunkApplyFailure with its index; nothing is applied unless every hunk
    applies (the function is pure, so failure simply leaves `a` unused).
    """
    src = split_lines(a)
    splices: list[tuple[int, int, list[str]]] = []
    prev_end = 0
    for index, hunk in enumerate(diff.hunks):
        old = hunk.old_elements()
        new = hunk.new_elements()
        want = hunk.old_start - 1 if hunk.old_len else hunk.old_start
        if not old:
            if want < prev_end or want > len(src):
                raise HunkApplyFailure(index, "insertion point out of range")
            splices.append((want, want, new))
            prev_end = want
            continue

        def matches(pos: int) -> bool:
            return (
                prev_end <= pos <= len(src) - len(old)
                and src[pos : pos + len(old)] == old
            )

        if matches(want):
            found = want
        else:
            found = None
            for dist in range(1, fuzz + 1):
                hits = [p for p in (want - dist, want + dist) if p >= 0 and matches(p)]
                if len(hits) > 1:
                    raise HunkApplyFailure(index, "ambiguous context match")
                if hits:
                    found = hits[0]
                    break
            if found is None:
                raise HunkApplyFailure(index)
        splices.append((found, found + len(old), new))
        prev_end = found + len(old)
    out: list[str] = []
    cursor = 0
    for start, end, new in splices:
        out.extend(src[cursor:start])
        out.extend(new)
        cursor = end
    out.extend(src[cursor:])
    return "".join(out)
