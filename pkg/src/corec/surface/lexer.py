from __future__ import annotations

from dataclasses import dataclass

from ..errors import SyntaxError
from ..syntax import Span

KEYWORDS = {
    "codatatype", "corec", "well_behaved", "force", "check", "register", "prove",
    "upto", "via", "depth", "using", "fuel",
    "if", "then", "else", "true", "false", "and", "or", "not",
    "map", "fimage", "exists-in",
}

# infix symbols usable as user function names
OP_SYMBOLS = {"⊕": "add", "⊞": "add", "⊗": "mul", "⊠": "mul"}

PUNCT = {
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "|", "+", "-", "*", "×",
    "^", "<", ">", ".", "λ", "\\",
}


@dataclass(frozen=True)
class Token:
    kind: str  # "nat", "ident", "kw", "op", "punct", "eof"
    text: str
    span: Span


def _ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'′"


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def adv(k):
        nonlocal i, col
        i += k
        col += k

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            adv(1)
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                adv(1)
            continue
        start = Span(line, col)
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(Token("nat", text[i:j], Span(line, col, line, col + j - i)))
            adv(j - i)
            continue
        if c == "λ":
            out.append(Token("punct", c, Span(line, col, line, col + 1)))
            adv(1)
            continue
        if c.isalpha() or c == "_":
            if text.startswith("exists-in", i) and (i + 9 >= n or not _ident_char(text[i + 9])):
                out.append(Token("kw", "exists-in", Span(line, col, line, col + 9)))
                adv(9)
                continue
            j = i
            while j < n and _ident_char(text[j]):
                j += 1
            word = text[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            out.append(Token(kind, word, Span(line, col, line, col + j - i)))
            adv(j - i)
            continue
        if c in OP_SYMBOLS:
            out.append(Token("op", c, Span(line, col, line, col + 1)))
            adv(1)
            continue
        if c in PUNCT:
            out.append(Token("punct", c, Span(line, col, line, col + 1)))
            adv(1)
            continue
        raise SyntaxError(f"unexpected character {c!r}", start, expected=())
    out.append(Token("eof", "", Span(line, col, line, col)))
    return out
