"""Shared text normalization used by the scene graph and the language model."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[^\W_]+")
_SPACE_RE = re.compile(r"\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on every run of non-alphanumeric characters.

    >>> tokenize("What room is this?")
    ['what', 'room', 'is', 'this']
    >>> tokenize("red-and-silver racket")
    ['red', 'and', 'silver', 'racket']
    """
    return _TOKEN_RE.findall(text.lower())


def normalize(text: str) -> str:
    """Lowercase and collapse whitespace; strips both ends."""
    return _SPACE_RE.sub(" ", text.lower()).strip()


def token_count(text: str) -> int:
    return len(tokenize(text))
