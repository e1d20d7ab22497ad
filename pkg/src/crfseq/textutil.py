"""Unicode helpers: NFC normalization and grapheme-cluster segmentation."""

from __future__ import annotations

import unicodedata

# ZWNJ / ZWJ extend the current cluster (they are invisible formatting marks).
_JOINERS = {"‌", "‍"}


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def graphemes(word: str) -> list[str]:
    """Split a word into user-perceived character units.

    Combining marks (Mn/Mc/Me) and zero-width joiners attach to the preceding
    base character, and an Indic virama (canonical combining class 9) glues
    the following consonant into the same cluster. Bangla vowel signs and
    conjuncts therefore never split. This covers the scripts this toolkit
    targets; it is not a full UAX #29 segmenter (no Hangul or emoji rules).
    """
    clusters: list[str] = []
    join_next = False
    for ch in word:
        extend = unicodedata.category(ch) in ("Mn", "Mc", "Me") or ch in _JOINERS
        if clusters and (extend or join_next):
            clusters[-1] += ch
        else:
            clusters.append(ch)
        if unicodedata.combining(ch) == 9:
            join_next = True
        elif ch not in _JOINERS:
            # a joiner keeps a pending virama link alive; anything else ends it
            join_next = False
    return clusters
