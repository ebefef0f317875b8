"""Word / sentence tokenization and the syllable heuristic.

Deliberately simple, documented rules: downstream features only need
stable, deterministic counts, not linguistic perfection.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

_WORD_RE = re.compile(r"[\w']+", re.UNICODE)
_SENT_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_HAS_ALNUM_RE = re.compile(r"[^\W_]", re.UNICODE)
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def tokenize(text: str) -> list[str]:
    """Split text into lowercased words.

    A word is a maximal run of word characters and apostrophes;
    leading/trailing apostrophes and underscores are stripped and
    tokens without any alphanumeric character are dropped.
    """
    words = []
    for tok in _WORD_RE.findall(text.lower()):
        tok = tok.strip("'_")
        if tok and _HAS_ALNUM_RE.search(tok):
            words.append(tok)
    return words


def split_sentences(text: str) -> list[str]:
    """Split text into sentences on . ! ? followed by whitespace or EOF.

    No abbreviation guard. A trailing segment without terminal
    punctuation counts as a sentence; segments with no alphanumeric
    content (stray punctuation) do not.
    """
    text = text.strip()
    if not text:
        return []
    parts = _SENT_SPLIT_RE.split(text)
    return [p.strip() for p in parts if p.strip() and _HAS_ALNUM_RE.search(p)]


def count_syllables(word: str) -> int:
    """Heuristic syllable count: maximal vowel groups (a e i o u y),
    minus one for a silent trailing 'e' (unless the word ends in 'le'),
    floored at 1."""
    w = word.lower()
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e") and not w.endswith("le"):
        groups -= 1
    return max(groups, 1)


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """English stop-word list shipped with the package (stopwords.txt)."""
    data = resources.files("bestanswer").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in data.splitlines() if w.strip() and not w.startswith("#"))
