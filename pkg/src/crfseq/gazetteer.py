"""Per-entity-type gazetteer lists with longest-match position tagging.

File contract: one UTF-8 file per entity type, one entry per line,
multi-word entries space-separated. Matching is exact on NFC-normalized
surface forms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

from .conll import Sentence
from .errors import DataError
from .textutil import nfc

log = logging.getLogger(__name__)

Entry = tuple[str, ...]


@dataclass(frozen=True)
class Gazetteer:
    """Entity type -> set of entries, each entry a tuple of word forms."""

    entries: dict[str, frozenset[Entry]]
    max_entry_len: int = field(init=False, compare=False)

    def __post_init__(self):
        by_first: dict[str, dict[str, list[Entry]]] = {}
        longest = 0
        for typ, entry_set in self.entries.items():
            index: dict[str, list[Entry]] = {}
            for entry in entry_set:
                if not entry or any(not w or any(c.isspace() for c in w) for w in entry):
                    raise DataError(f"bad gazetteer entry for {typ!r}: {entry!r}")
                index.setdefault(entry[0], []).append(entry)
                longest = max(longest, len(entry))
            for cands in index.values():
                # longest first so the first full match wins; lexicographic
                # among equal lengths keeps iteration order deterministic
                cands.sort(key=lambda e: (-len(e), e))
            by_first[typ] = index
        object.__setattr__(self, "max_entry_len", longest)
        object.__setattr__(self, "_by_first", by_first)

    @property
    def types(self) -> list[str]:
        return sorted(self.entries)


def load_gazetteer(paths: Mapping[str, str]) -> Gazetteer:
    """Read one entry-per-line gazetteer file per entity type.

    Entries are NFC-normalized and deduplicated. An empty file yields an
    empty set for that type (warning, not an error); an unreadable file is
    an error naming the type and path.
    """
    entries: dict[str, frozenset[Entry]] = {}
    for typ, path in paths.items():
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read gazetteer for {typ!r} at {path}: {exc}") from exc
        found = {
            tuple(nfc(line).split())
            for line in text.split("\n")
            if line.strip()
        }
        if not found:
            log.warning("gazetteer file for %r at %s is empty", typ, path)
        entries[typ] = frozenset(found)
    return Gazetteer(entries)


def match_positions(gazetteer: Gazetteer, sentence: Sentence) -> list[set[str]]:
    """Per-position set of entity types matched by the gazetteer.

    For every type independently and at every position, the longest entry of
    that type starting there (if any) marks all covered positions with the
    type. Matches of different types may overlap; matching is exact on
    NFC-normalized surfaces.
    """
    surfaces = [nfc(tok.surface) for tok in sentence]
    n = len(surfaces)
    hits: list[set[str]] = [set() for _ in range(n)]
    by_first = getattr(gazetteer, "_by_first")
    for typ, index in by_first.items():
        for i in range(n):
            for entry in index.get(surfaces[i], ()):
                m = len(entry)
                if i + m <= n and tuple(surfaces[i : i + m]) == entry:
                    for j in range(i, i + m):
                        hits[j].add(typ)
                    break
    return hits
