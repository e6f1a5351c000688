"""Tokenizer for minilang source and for the stub-program text form."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MiniSyntaxError


KEYWORDS = {
    "record", "exception", "interface", "class", "field", "constructor", "fn",
    "let", "return", "if", "else", "while", "break", "continue", "throw",
    "try", "catch", "new", "mock", "stub", "any", "eq", "this",
    "true", "false", "null",
    "test", "act", "assert", "stub_site", "verify", "times",
    "assertEquals", "assertTrue", "assertNotNull", "assertSame", "assertThrows",
}

_PUNCT = [
    "<-", "->", "&&", "||", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", "[", "]", ",", ";", ":", ".",
    "+", "-", "*", "/", "%", "<", ">", "=", "!",
]

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "int" | "real" | "str" | "punct" | "eof"
    text: str
    value: object
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":  # line comment
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            is_real = False
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                is_real = True
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    is_real = True
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            value: object = float(text) if is_real else int(text)
            tokens.append(Token("real" if is_real else "int", text, value, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, text, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n:
                    raise MiniSyntaxError("unterminated string literal", start_line, start_col)
                ch = source[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\n":
                    raise MiniSyntaxError("newline in string literal", start_line, start_col)
                if ch == "\\":
                    if j + 1 >= n or source[j + 1] not in _ESCAPES:
                        raise MiniSyntaxError("bad escape in string literal", line, col)
                    out.append(_ESCAPES[source[j + 1]])
                    j += 2
                    continue
                out.append(ch)
                j += 1
            tokens.append(Token("str", source[i:j], "".join(out), start_line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            raise MiniSyntaxError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", None, line, col))
    return tokens


def quote_string(s: str) -> str:
    """Render a string as a minilang literal (inverse of the lexer)."""
    out = ['"']
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
