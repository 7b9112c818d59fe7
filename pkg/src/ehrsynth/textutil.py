"""Shared text utilities: tokenization used by the coherence and plausibility checks."""
from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics, dropping punctuation-only pieces.

    No stemming and no stopword removal, so scores stay hand-computable.
    """
    return _TOKEN_RE.findall(text.lower())


def token_set(text: str) -> set[str]:
    return set(tokenize(text))


def sentence_case(fragment: str) -> str:
    """Turn a text fragment into a sentence: capitalize, ensure trailing period."""
    fragment = fragment.strip()
    if not fragment:
        return ""
    out = fragment[0].upper() + fragment[1:]
    if not out.endswith("."):
        out += "."
    return out
