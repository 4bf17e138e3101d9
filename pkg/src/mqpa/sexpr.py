"""A small s-expression reader that keeps source positions for error messages."""
from __future__ import annotations

from .errors import SyntaxError_


class Atom(str):
    line: int
    column: int

    def __new__(cls, text, line, column):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.column = column
        return obj


class SList(list):
    def __init__(self, items, line, column):
        super().__init__(items)
        self.line = line
        self.column = column


def _tokens(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch in "()":
            yield ch, line, col
            i, col = i + 1, col + 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i, col = i + 1, col + 1
        yield text[start:i], line, start_col


def read_all(text: str) -> list:
    """Parse every top-level datum in ``text``."""
    stack: list[SList] = []
    out: list = []
    last = (1, 1)
    for tok, line, col in _tokens(text):
        last = (line, col)
        if tok == "(":
            stack.append(SList([], line, col))
        elif tok == ")":
            if not stack:
                raise SyntaxError_("unexpected ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            (stack[-1] if stack else out).append(Atom(tok, line, col))
    if stack:
        open_ = stack[-1]
        raise SyntaxError_("unclosed '(' opened here", open_.line, open_.column)
    if not out:
        raise SyntaxError_("empty input", *last)
    return out


def read_one(text: str):
    data = read_all(text)
    if len(data) != 1:
        extra = data[1]
        raise SyntaxError_("expected a single expression", *position(extra))
    return data[0]


def position(datum) -> tuple[int, int]:
    return getattr(datum, "line", None), getattr(datum, "column", None)
