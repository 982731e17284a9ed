"""Error-tolerant tokenizer for Python source.

Produces a flat token stream with INDENT/DEDENT/NEWLINE bookkeeping, implicit
line joining inside brackets, and explicit backslash continuations. It never
raises on malformed input: unterminated strings end at the line (or file) and
unknown characters become ERRORTOK tokens for the parser to fold into ERROR
nodes. Comments are discarded (treated like whitespace).

Offsets are in characters; the parser converts to byte offsets.
"""

from __future__ import annotations

from .grammar import OPERATORS_2, OPERATORS_3, STRING_PREFIXES

NAME = "name"
NUMBER = "number"
STRING = "string"
OP = "op"
NEWLINE = "newline"
INDENT = "indent"
DEDENT = "dedent"
ERRORTOK = "errortok"
EOF = "eof"

_TABSIZE = 8
_OPERATORS_1 = set("+-*/%@&|^~<>()[]{},:.;=")


class Token:
    __slots__ = ("kind", "text", "start", "end")

    def __init__(self, kind: str, text: str, start: int, end: int):
        self.kind = kind
        self.text = text
        self.start = start
        self.end = end

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Token({self.kind}, {self.text!r}, {self.start}, {self.end})"


def _is_name_start(c: str) -> bool:
    return c == "_" or c.isalpha()


def _is_name_part(c: str) -> bool:
    return c == "_" or c.isalnum()


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    n = len(source)
    i = 0
    depth = 0
    indents = [0]
    at_line_start = True

    def scan_string(start: int) -> int:
        """Scan a string literal starting at an optional prefix; return end."""
        j = start
        while j < n and _is_name_part(source[j]):
            j += 1
        quote = source[j]
        if source[j : j + 3] in ('"""', "'''"):
            closer = source[j : j + 3]
            j += 3
            while j < n:
                if source[j] == "\\":
                    j += 2
                    continue
                if source[j : j + 3] == closer:
                    return j + 3
                j += 1
            return n  # unterminated triple quote: swallow to EOF
        closer = quote
        j += 1
        while j < n:
            c = source[j]
            if c == "\\" and j + 1 < n:
                j += 2
                continue
            if c == closer:
                return j + 1
            if c in "\r\n":
                return j  # unterminated: stop before the newline
            j += 1
        return n

    def scan_number(start: int) -> tuple[int, bool]:
        """Return (end, is_float)."""
        j = start
        is_float = False
        if source[j] == "0" and j + 1 < n and source[j + 1] in "xXoObB":
            j += 2
            while j < n and (source[j] in "_" or source[j].isalnum()):
                j += 1
            if j < n and source[j] in "jJ":
                j += 1
            return j, False
        while j < n and (source[j].isdigit() or source[j] == "_"):
            j += 1
        if j < n and source[j] == ".":
            k = j + 1
            # "1." and "1.5" are floats; "1.real" is int + attribute access
            if k >= n or not _is_name_start(source[k]):
                is_float = True
                j = k
                while j < n and (source[j].isdigit() or source[j] == "_"):
                    j += 1
        if j < n and source[j] in "eE":
            k = j + 1
            if k < n and source[k] in "+-":
                k += 1
            if k < n and source[k].isdigit():
                is_float = True
                j = k
                while j < n and (source[j].isdigit() or source[j] == "_"):
                    j += 1
        if j < n and source[j] in "jJ":
            j += 1
        return j, is_float

    while i < n:
        if at_line_start and depth == 0:
            # Measure indentation; blank and comment-only lines emit nothing.
            col = 0
            j = i
            while j < n and source[j] in " \t\f":
                if source[j] == "\t":
                    col = (col // _TABSIZE + 1) * _TABSIZE
                elif source[j] == " ":
                    col += 1
                j += 1
            if j >= n:
                break
            if source[j] in "\r\n":
                i = j + (2 if source[j : j + 2] == "\r\n" else 1)
                continue
            if source[j] == "#":
                while j < n and source[j] not in "\r\n":
                    j += 1
                i = j + (2 if source[j : j + 2] == "\r\n" else 1) if j < n else n
                continue
            if col > indents[-1]:
                indents.append(col)
                toks.append(Token(INDENT, "", j, j))
            else:
                while col < indents[-1]:
                    indents.pop()
                    toks.append(Token(DEDENT, "", j, j))
                # A dedent to a level never seen just aligns to the nearest one.
            i = j
            at_line_start = False
            continue

        c = source[i]
        if c in " \t\f":
            i += 1
            continue
        if c == "\\" and i + 1 < n and source[i + 1] in "\r\n":
            i += 2 + (1 if source[i + 1 : i + 3] == "\r\n" else 0)
            continue
        if c in "\r\n":
            end = i + (2 if source[i : i + 2] == "\r\n" else 1)
            if depth == 0:
                toks.append(Token(NEWLINE, source[i:end], i, end))
                at_line_start = True
            i = end
            continue
        if c == "#":
            while i < n and source[i] not in "\r\n":
                i += 1
            continue
        if _is_name_start(c):
            j = i + 1
            while j < n and _is_name_part(source[j]):
                j += 1
            text = source[i:j]
            if j < n and source[j] in "\"'" and text.lower() in STRING_PREFIXES:
                j = scan_string(i)
                toks.append(Token(STRING, source[i:j], i, j))
            else:
                toks.append(Token(NAME, text, i, j))
            i = j
            continue
        if c in "\"'":
            j = scan_string(i)
            toks.append(Token(STRING, source[i:j], i, j))
            i = j
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j, _ = scan_number(i)
            toks.append(Token(NUMBER, source[i:j], i, j))
            i = j
            continue
        three = source[i : i + 3]
        if three in OPERATORS_3:
            toks.append(Token(OP, three, i, i + 3))
            i += 3
            continue
        two = source[i : i + 2]
        if two in OPERATORS_2:
            toks.append(Token(OP, two, i, i + 2))
            i += 2
            continue
        if c in _OPERATORS_1:
            if c in "([{":
                depth += 1
            elif c in ")]}" and depth > 0:
                depth -= 1
            toks.append(Token(OP, c, i, i + 1))
            i += 1
            continue
        toks.append(Token(ERRORTOK, c, i, i + 1))
        i += 1

    if toks and toks[-1].kind not in (NEWLINE, DEDENT):
        toks.append(Token(NEWLINE, "", n, n))
    while len(indents) > 1:
        indents.pop()
        toks.append(Token(DEDENT, "", n, n))
    toks.append(Token(EOF, "", n, n))
    return toks


def number_is_float(text: str) -> bool:
    """Classify a NUMBER token: floats carry a dot or a decimal exponent."""
    low = text.lower()
    if low.startswith(("0x", "0o", "0b")):
        return False
    return "." in low or "e" in low
