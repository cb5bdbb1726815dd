"""Token codec for the line-oriented wire grammar.

command  := VERB (SP token)* LF
response := seq SP ("OK" (SP token)* | "ERR" SP code SP qstring) LF
event    := "EVT" SP txId SP seqInTx SP op SP elementId (SP token)* LF

Encoding is UTF-8, LF only. A token containing whitespace, quotes or a
backslash is wrapped in double quotes with backslash escaping of `"` and
`\\`. STRING values are always emitted quoted so they re-parse
unambiguously; INT, REAL and BOOL literals are always bare.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import KernelError
from .meta import INT_MAX, INT_MIN, Base, Value

_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_REAL_RE = re.compile(r"^[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+|[0-9]+(?:\.[0-9]*)?[eE][+-]?[0-9]+)$")
_NEEDS_QUOTES = re.compile(r'[\s"\\]')


@dataclass(frozen=True)
class Token:
    text: str
    quoted: bool
    col: int  # 0-based column of the token's first byte


def tokenize(line: str) -> list[Token]:
    """Total tokenizer; any failure raises PARSE_ERROR with the column."""
    if "\x00" in line:
        raise KernelError("PARSE_ERROR", f"column {line.index(chr(0))}: NUL byte")
    line = line.rstrip("\n")
    out: list[Token] = []
    i, n = 0, len(line)
    while i < n:
        if line[i] in (" ", "\t"):
            i += 1
            continue
        start = i
        if line[i] == '"':
            i += 1
            buf: list[str] = []
            while True:
                if i >= n:
                    raise KernelError("PARSE_ERROR", f"column {start}: unterminated quote")
                c = line[i]
                if c == "\\":
                    if i + 1 >= n or line[i + 1] not in ('"', "\\"):
                        raise KernelError("PARSE_ERROR", f"column {i}: bad escape")
                    buf.append(line[i + 1])
                    i += 2
                elif c == '"':
                    i += 1
                    break
                else:
                    buf.append(c)
                    i += 1
            if i < n and line[i] not in (" ", "\t"):
                raise KernelError("PARSE_ERROR", f"column {i}: junk after closing quote")
            out.append(Token("".join(buf), True, start))
        else:
            while i < n and line[i] not in (" ", "\t"):
                if line[i] == '"':
                    raise KernelError("PARSE_ERROR", f"column {i}: quote inside bare token")
                i += 1
            out.append(Token(line[start:i], False, start))
    return out


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def bare_or_quoted(s: str) -> str:
    """Bare when safe; used for verbs, codes, kinds and similar atoms."""
    if s and not _NEEDS_QUOTES.search(s):
        return s
    return quote(s)


def fmt_real(f: float) -> str:
    """Shortest round-trip decimal, always with a '.' or an exponent."""
    return repr(float(f))


def render_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_real(v)
    return quote(v)


def parse_value(tok: Token, base: Base) -> Value:
    """Interpret one token as a literal of the given base or TYPE_MISMATCH."""
    if base is Base.STRING:
        return tok.text
    if tok.quoted:
        raise KernelError("TYPE_MISMATCH", f"quoted string where {base.value} expected")
    t = tok.text
    if base is Base.BOOL:
        if t == "true":
            return True
        if t == "false":
            return False
        raise KernelError("TYPE_MISMATCH", f"{t!r} is not a BOOL literal")
    if base is Base.INT:
        if not _INT_RE.match(t):
            raise KernelError("TYPE_MISMATCH", f"{t!r} is not an INT literal")
        v = int(t)
        if not (INT_MIN <= v <= INT_MAX):
            raise KernelError("TYPE_MISMATCH", f"{t!r} exceeds the signed 64-bit range")
        return v
    # REAL: mandatory '.' or exponent, finite
    if not _REAL_RE.match(t):
        raise KernelError("TYPE_MISMATCH", f"{t!r} is not a REAL literal")
    v = float(t)
    if not math.isfinite(v):
        raise KernelError("TYPE_MISMATCH", f"{t!r} is not finite")
    return v


def parse_int(tok: Token, what: str = "integer") -> int:
    if tok.quoted or not _INT_RE.match(tok.text):
        raise KernelError("PARSE_ERROR", f"column {tok.col}: {what} expected")
    return int(tok.text)


def join(tokens: list[str]) -> str:
    return " ".join(tokens)
