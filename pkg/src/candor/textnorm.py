"""Text normalization shared by phrase matching and the knowledge filter.

Normalization is deliberately mechanical: lowercase, apostrophes dropped
inside words, every other non-alphanumeric character treated as a
separator. Both sides of any comparison go through the same rules, so
matching stays consistent without language-aware processing.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Token:
    text: str  # normalized form: lowercased, apostrophes removed
    start: int  # char offset in the original string
    end: int  # exclusive


def tokenize(text: str) -> list[Token]:
    """Split text into normalized tokens with original character spans."""
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isalnum() or ch == "'":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "'"):
                i += 1
            norm = text[start:i].replace("'", "").lower()
            if norm:
                tokens.append(Token(norm, start, i))
        else:
            i += 1
    return tokens


def normalize_words(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]
