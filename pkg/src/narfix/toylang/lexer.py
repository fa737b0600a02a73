"""Maximal-munch lexer for the toy language."""
from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset({"int", "bool", "void", "if", "else", "return", "true", "false"})
OPERATORS = ("==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "<", ">", "=", "!")
PUNCTUATION = ("(", ")", "{", "}", ",", ";", ".")

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<literal>[0-9]+)"
    r"|(?P<operator>==|!=|<=|>=|&&|\|\||[+\-*/<>=!])"
    r"|(?P<punctuation>[(){},;.])"
)


class LexError(ValueError):
    def __init__(self, position: int, char: str):
        super().__init__(f"unexpected character {char!r} at offset {position}")
        self.position = position
        self.char = char


@dataclass(frozen=True)
class Token:
    text: str
    kind: str
    id: int = -1


def classify(text: str) -> str:
    if text.startswith("[") and text.endswith("]") and len(text) > 2:
        return "special"
    if text in ("true", "false"):
        return "literal"
    if text in KEYWORDS:
        return "keyword"
    if text in OPERATORS:
        return "operator"
    if text in PUNCTUATION:
        return "punctuation"
    if text.isdigit():
        return "literal"
    return "identifier"


def lex(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise LexError(pos, source[pos])
        kind = match.lastgroup
        if kind != "ws":
            text = match.group()
            if kind == "word":
                kind = "keyword" if text in KEYWORDS else "identifier"
            if text in ("true", "false"):
                kind = "literal"
            tokens.append(Token(text, kind))
        pos = match.end()
    return tokens


def tokenize(source: str) -> list[str]:
    """Split ``source`` into lexemes, e.g. ``"return a+b;"`` -> ``['return', 'a', '+', 'b', ';']``."""
    return [tok.text for tok in lex(source)]


def detokenize(tokens) -> str:
    return " ".join(tokens)
