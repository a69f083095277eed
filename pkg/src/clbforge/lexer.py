"""Byte-exact fault-tolerant C lexer.

Tokens carry byte spans into the original buffer, so splicing edits back into
the file never loses a byte. Comments, string literals, char literals, and
whole preprocessor directives are single opaque tokens; everything the later
passes do not care about is just a run of punct tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnterminatedComment, UnterminatedLiteral

IDENT_START = set(b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
IDENT_CONT = IDENT_START | set(b"0123456789")
DIGITS = set(b"0123456789")
SPACE = set(b" \t\r\n\f\v")

# Longest-match punctuator table; three-char first.
PUNCT3 = (b"<<=", b">>=", b"...")
PUNCT2 = (
    b"==", b"!=", b"<=", b">=", b"&&", b"||", b"<<", b">>", b"++", b"--",
    b"+=", b"-=", b"*=", b"/=", b"%=", b"&=", b"|=", b"^=", b"->", b"##",
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | str | char | comment | directive | punct
    start: int
    end: int
    text: bytes


@dataclass
class TokenStream:
    path: str
    data: bytes
    tokens: list[Token]


def tokenize(data: bytes, path: str = "<mem>") -> TokenStream:
    tokens: list[Token] = []
    i = 0
    n = len(data)
    at_line_start = True

    def emit(kind: str, start: int, end: int) -> None:
        tokens.append(Token(kind, start, end, data[start:end]))

    while i < n:
        c = data[i]
        if c in SPACE:
            if c == 0x0A:
                at_line_start = True
            i += 1
            continue

        start = i
        if c == 0x23 and at_line_start:  # '#': directive spans the logical line
            i = _scan_directive(data, i)
            emit("directive", start, i)
            at_line_start = True
            continue
        at_line_start = False

        if c == 0x2F and i + 1 < n and data[i + 1] == 0x2F:  # //
            while i < n and data[i] != 0x0A:
                i += 1
            emit("comment", start, i)
            continue
        if c == 0x2F and i + 1 < n and data[i + 1] == 0x2A:  # /*
            end = data.find(b"*/", i + 2)
            if end == -1:
                raise UnterminatedComment(start)
            i = end + 2
            emit("comment", start, i)
            continue
        if c in (0x22, 0x27):  # " or '
            i = _scan_literal(data, i, c)
            emit("str" if c == 0x22 else "char", start, i)
            continue
        if c in IDENT_START:
            i += 1
            while i < n and data[i] in IDENT_CONT:
                i += 1
            emit("ident", start, i)
            continue
        if c in DIGITS or (c == 0x2E and i + 1 < n and data[i + 1] in DIGITS):
            i = _scan_number(data, i)
            emit("num", start, i)
            continue

        chunk3 = data[i:i + 3]
        chunk2 = data[i:i + 2]
        if chunk3 in PUNCT3:
            i += 3
        elif chunk2 in PUNCT2:
            i += 2
        else:
            i += 1
        emit("punct", start, i)

    return TokenStream(path, data, tokens)


def _scan_literal(data: bytes, i: int, quote: int) -> int:
    start = i
    i += 1
    n = len(data)
    while i < n:
        c = data[i]
        if c == 0x5C:  # backslash escape
            i += 2
            continue
        if c == quote:
            return i + 1
        if c == 0x0A:
            break
        i += 1
    raise UnterminatedLiteral(start)


def _scan_number(data: bytes, i: int) -> int:
    # pp-number: digits, dots, identifier chars, and exponent signs.
    n = len(data)
    i += 1
    while i < n:
        c = data[i]
        if c in IDENT_CONT or c == 0x2E:
            i += 1
        elif c in (0x2B, 0x2D) and data[i - 1] in (0x65, 0x45, 0x70, 0x50):  # e E p P
            i += 1
        else:
            break
    return i


def _scan_directive(data: bytes, i: int) -> int:
    """Consume '#' .. end of logical line, honoring continuations and comments."""
    n = len(data)
    while i < n:
        c = data[i]
        if c == 0x5C and i + 1 < n and data[i + 1] == 0x0A:
            i += 2
            continue
        if c == 0x5C and i + 2 < n and data[i + 1] == 0x0D and data[i + 2] == 0x0A:
            i += 3
            continue
        if c == 0x2F and i + 1 < n and data[i + 1] == 0x2A:
            end = data.find(b"*/", i + 2)
            if end == -1:
                raise UnterminatedComment(i)
            i = end + 2
            continue
        if c == 0x2F and i + 1 < n and data[i + 1] == 0x2F:
            while i < n and data[i] != 0x0A:
                i += 1
            return i
        if c in (0x22, 0x27):
            try:
                i = _scan_literal(data, i, c)
            except UnterminatedLiteral:
                # Headers like <stdio.h> and stray quotes in #error text are
                # not real literals; skip the single byte.
                i += 1
            continue
        if c == 0x0A:
            return i
        i += 1
    return i


def reconstruct(stream: TokenStream) -> bytes:
    """Rebuild the source from token spans plus the inter-token bytes."""
    out = bytearray()
    pos = 0
    for tok in stream.tokens:
        out += stream.data[pos:tok.start]
        out += tok.text
        pos = tok.end
    out += stream.data[pos:]
    return bytes(out)
