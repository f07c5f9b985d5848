"""Tokenizer for P4_14 source (v1.0.4 dialect)."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LexError

# Structural reserved words.  Attribute-position words (length, algorithm,
# next, last, ...) stay plain identifiers and are matched by text in the
# parser, which keeps the identifier namespace open.
KEYWORDS = frozenset({
    "header_type", "header", "metadata", "parser", "parser_exception",
    "action", "table", "control", "field_list", "field_list_calculation",
    "calculated_field", "counter", "meter", "register",
    "return", "select", "default", "ingress", "if", "else",
    "and", "or", "not", "valid", "current", "latest", "mask", "payload",
    "parser_drop", "parse_error", "apply", "extract", "set_metadata",
    "fields", "reads", "actions",
})

PUNCT = (
    "<<", ">>", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", "[", "]", ":", ";", ",", ".",
    "+", "-", "*", "&", "|", "^", "<", ">",
)

KIND_IDENT = "identifier"
KIND_INT = "integer-literal"
KIND_WINT = "width-prefixed-literal"
KIND_KW = "keyword"
KIND_PUNCT = "punctuation"
KIND_EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    pos: int  # absolute offset into the source

    # parsed payload for literals
    value: int = 0
    width: int | None = None
    signed: bool = False

    @property
    def span(self):
        return (self.line, self.col)

    def end_pos(self) -> int:
        return self.pos + len(self.text)

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def _is_ident_start(c):
    return c.isalpha() or c == "_"


def _is_ident(c):
    return c.isalnum() or c == "_"


def _parse_int(text: str) -> int:
    if text.startswith(("0x", "0X")):
        return int(text, 16)
    if text.startswith(("0b", "0B")):
        return int(text, 2)
    return int(text, 10)


def tokenize(source: str) -> list[Token]:
    """Produce the full token stream, ending with an eof token.

    Pragmas (`@pragma ...`) are consumed and discarded.  Preprocessor
    directives are rejected: input files must be pre-flattened.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def err(msg, ln=None, cl=None):
        raise LexError(msg, (ln or line, cl or col))

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
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                err("unterminated block comment")
            for ch in source[i:end + 2]:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = end + 2
            continue
        if c == "@":
            # pragma: discard to end of line
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        if c == "#":
            if source.startswith("#include", i):
                err("preprocessor directives are not supported; "
                    "flatten #include before running")
            err(f"unrecognized character {c!r}")
        if c.isdigit():
            start = i
            start_col = col
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            # width-prefixed literal: <width>'w<value> or <width>'s<value>
            if j < n and source[j] == "'":
                width_txt = word
                k = j + 1
                if k >= n or source[k] not in "ws":
                    err("expected 'w' or 's' after width prefix", line, start_col)
                signed = source[k] == "s"
                k += 1
                m = k
                while m < n and (source[m].isalnum() or source[m] == "_"):
                    m += 1
                value_txt = source[k:m]
                text = source[start:m]
                try:
                    width = int(width_txt, 10)
                    value = _parse_int(value_txt)
                except ValueError:
                    err(f"bad width-prefixed literal {text!r}", line, start_col)
                if width <= 0:
                    err(f"zero width in literal {text!r}", line, start_col)
                tokens.append(Token(KIND_WINT, text, line, start_col, start,
                                    value=value, width=width, signed=signed))
                col += m - i
                i = m
                continue
            try:
                value = _parse_int(word)
            except ValueError:
                err(f"bad integer literal {word!r}", line, start_col)
            tokens.append(Token(KIND_INT, word, line, start_col, start,
                                value=value))
            col += j - i
            i = j
            continue
        if _is_ident_start(c):
            start = i
            start_col = col
            j = i
            while j < n and _is_ident(source[j]):
                j += 1
            word = source[i:j]
            kind = KIND_KW if word in KEYWORDS else KIND_IDENT
            tokens.append(Token(kind, word, line, start_col, start))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token(KIND_PUNCT, p, line, col, i))
                i += len(p)
                col += len(p)
                break
        else:
            err(f"unrecognized character {c!r}")
    tokens.append(Token(KIND_EOF, "", line, col, i))
    return tokens
