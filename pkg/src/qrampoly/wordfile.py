"""Word-per-line data files (memory contents, qLUT tables)."""

from __future__ import annotations


class WordFileError(ValueError):
    pass


def parse_words(text: str, ell: int, fmt: str = "auto") -> list[int]:
    """Parse one word per line.

    ``fmt`` is ``hex``, ``bin`` or ``auto``.  Explicit ``0x``/``0b`` prefixes
    always win; under ``auto`` a file whose lines are all 0/1 strings of
    exactly ``ell`` characters is binary, anything else is hex.  Blank lines and
    ``#`` comments are skipped.
    """
    if fmt not in ("auto", "hex", "bin"):
        raise WordFileError(f"unknown word format {fmt!r}")
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip().lower()
        if line:
            lines.append((lineno, line))
    if fmt == "auto":
        binary = all(set(s) <= {"0", "1"} and len(s) == ell for _, s in lines)
        fmt = "bin" if binary and lines else "hex"
    words = []
    for lineno, s in lines:
        base = 2 if fmt == "bin" else 16
        if s.startswith("0x"):
            base, s = 16, s[2:]
        elif s.startswith("0b"):
            base, s = 2, s[2:]
        try:
            w = int(s, base)
        except ValueError:
            raise WordFileError(f"line {lineno}: cannot parse {s!r} as base-{base} word") from None
        if not 0 <= w < 1 << ell:
            raise WordFileError(f"line {lineno}: word {w} does not fit in {ell} bits")
        words.append(w)
    return words


def format_words(words, ell: int, fmt: str = "bin") -> str:
    if fmt == "hex":
        width = (ell + 3) // 4
        return "".join(f"{w:0{width}x}\n" for w in words)
    return "".join(f"{w:0{ell}b}\n" for w in words)
