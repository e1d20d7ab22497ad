"""Feature templates: turn token positions into sparse indicator features.

Template strings and their shapes:

    bias                 constant, always emitted
    w[o]=SURFACE         neighbor window, o in [-k_nb, +k_nb] (0 = current word)
    pos[o]=TAG           POS window, o in [-k_pos, +k_pos]
    sufN=S / preN=S      last/first N grapheme clusters of the current word
    digit=true|false     whole token is decimal digits (ASCII or Bangla)
    cluster[o]=ID        embedding-cluster id, o in {-1, 0, +1}
    gaz=TYPE             gazetteer membership of this position, one per type

Window positions beyond the sentence edges emit the configured boundary pad
literal instead of a value. Values are escaped (backslash escapes ``=`` and
itself) so distinct (template, offset, value) triples never collide as
strings.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterable

import numpy as np

from .conll import Sentence, Token
from .errors import ConfigError, DataError, InternalError, ParseError
from .textutil import graphemes, nfc

PAD = "<PAD>"

_BANGLA_DIGITS = "০১২৩৪৫৬৭৮৯"
_DIGIT_CHARS = frozenset("0123456789" + _BANGLA_DIGITS)

_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)


def suffix(word: str, n: int) -> str:
    """Last min(n, len) extended grapheme clusters of ``word``."""
    if n < 1:
        raise ConfigError(f"affix length must be >= 1, got {n}")
    return "".join(graphemes(word)[-n:])


def prefix(word: str, n: int) -> str:
    """First min(n, len) extended grapheme clusters of ``word``."""
    if n < 1:
        raise ConfigError(f"affix length must be >= 1, got {n}")
    return "".join(graphemes(word)[:n])


def is_digit_token(word: str) -> bool:
    """True iff every character is a decimal digit (ASCII 0-9 or Bangla numerals)."""
    return bool(word) and all(c in _DIGIT_CHARS for c in word)


@dataclass(frozen=True)
class FeatureTemplateConfig:
    """Which template families are enabled and their parameters."""

    use_pos: bool = False
    k_pos: int = 2
    use_suffix: bool = True
    suffix_lengths: tuple[int, ...] = (1, 2, 3, 4)
    use_prefix: bool = True
    prefix_lengths: tuple[int, ...] = (1, 2, 3)
    use_neighbors: bool = True
    k_nb: int = 2
    use_digit: bool = False
    use_cluster: bool = False
    use_gazetteer: bool = False
    boundary_pad: str = PAD
    lowercase: bool = True

    def __post_init__(self):
        object.__setattr__(self, "suffix_lengths", tuple(sorted(set(self.suffix_lengths))))
        object.__setattr__(self, "prefix_lengths", tuple(sorted(set(self.prefix_lengths))))
        if self.k_pos < 0 or self.k_nb < 0:
            raise ConfigError("window sizes k_pos and k_nb must be >= 0")
        for n in self.suffix_lengths + self.prefix_lengths:
            if n < 1:
                raise ConfigError(f"affix lengths must be >= 1, got {n}")
        if not self.boundary_pad:
            raise ConfigError("boundary_pad must be non-empty")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureTemplateConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown feature config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("suffix_lengths", "prefix_lengths"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("=", "\\=")


def _ofs(o: int) -> str:
    return "0" if o == 0 else f"{o:+d}"


def extract_features(
    sentence: Sentence,
    position: int,
    config: FeatureTemplateConfig,
    cluster_lookup: Callable[[str], int] | None = None,
    gazetteer_hits: list[set[str]] | None = None,
) -> list[str]:
    """Instantiate every enabled template at one position of a sentence.

    ``cluster_lookup`` maps a surface form to a cluster id (required when the
    cluster family is on); ``gazetteer_hits`` is the per-position set of
    matched entity types (required when the gazetteer family is on). Pure
    function of its arguments; feature order is fixed.
    """
    n = len(sentence)
    if not 0 <= position < n:
        raise InternalError(f"position {position} out of range for sentence of length {n}")

    def surface_at(i: int) -> str | None:
        if i < 0 or i >= n:
            return None
        s = sentence[i].surface
        return s.translate(_ASCII_LOWER) if config.lowercase else s

    feats = ["bias"]
    if config.use_neighbors:
        for o in range(-config.k_nb, config.k_nb + 1):
            s = surface_at(position + o)
            value = config.boundary_pad if s is None else _escape(s)
            feats.append(f"w[{_ofs(o)}]={value}")
    if config.use_pos:
        for o in range(-config.k_pos, config.k_pos + 1):
            i = position + o
            if i < 0 or i >= n:
                feats.append(f"pos[{_ofs(o)}]={config.boundary_pad}")
                continue
            tag = sentence[i].pos
            if tag is None:
                raise ConfigError(
                    f"POS features are enabled but token {i} "
                    f"({sentence[i].surface!r}) has no POS tag"
                )
            feats.append(f"pos[{_ofs(o)}]={_escape(tag)}")
    word = surface_at(position)
    if config.use_suffix:
        for m in config.suffix_lengths:
            feats.append(f"suf{m}={_escape(suffix(word, m))}")
    if config.use_prefix:
        for m in config.prefix_lengths:
            feats.append(f"pre{m}={_escape(prefix(word, m))}")
    if config.use_digit:
        feats.append(f"digit={'true' if is_digit_token(sentence[position].surface) else 'false'}")
    if config.use_cluster:
        if cluster_lookup is None:
            raise ConfigError("cluster features are enabled but no cluster lookup was supplied")
        for o in (-1, 0, 1):
            i = position + o
            if i < 0 or i >= n:
                feats.append(f"cluster[{_ofs(o)}]={config.boundary_pad}")
            else:
                feats.append(f"cluster[{_ofs(o)}]={cluster_lookup(sentence[i].surface)}")
    if config.use_gazetteer:
        if gazetteer_hits is None:
            raise ConfigError("gazetteer features are enabled but no match sets were supplied")
        for typ in sorted(gazetteer_hits[position]):
            feats.append(f"gaz={_escape(typ)}")
    return feats


class FeatureIndex:
    """Bijective feature-string <-> integer-id map, append-only until frozen.

    While unfrozen, ids are handed out monotonically; once frozen, unseen
    feature strings map to "absent" and the size never changes again.
    """

    def __init__(self, features: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._frozen = False
        for f in features:
            if f in self._ids:
                raise DataError(f"duplicate feature string {f!r}")
            self._ids[f] = len(self._ids)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, feature: str) -> bool:
        return feature in self._ids

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "FeatureIndex":
        self._frozen = True
        return self

    def intern(self, feature: str) -> int:
        if self._frozen:
            raise InternalError("cannot add features to a frozen index")
        if feature not in self._ids:
            self._ids[feature] = len(self._ids)
        return self._ids[feature]

    def lookup(self, feature: str) -> int | None:
        return self._ids.get(feature)

    def vector(self, features: Iterable[str]) -> np.ndarray:
        """Sorted distinct ids for the given feature strings.

        Unknown strings are interned while the index is unfrozen and
        silently dropped once it is frozen.
        """
        if self._frozen:
            ids = {i for i in (self._ids.get(f) for f in features) if i is not None}
        else:
            ids = {self.intern(f) for f in features}
        return np.array(sorted(ids), dtype=np.int32)

    def feature_strings(self) -> list[str]:
        """All feature strings in id order (the inverse map)."""
        out = [""] * len(self._ids)
        for f, i in self._ids.items():
            out[i] = f
        return out


def featurize(
    sentences: Iterable[Sentence],
    config: FeatureTemplateConfig,
    index: FeatureIndex,
    cluster_lookup: Callable[[str], int] | None = None,
    gazetteer_hits_fn: Callable[[Sentence], list[set[str]]] | None = None,
) -> list[list[np.ndarray]]:
    """Per-position feature-id vectors for every sentence, via ``index``."""
    out: list[list[np.ndarray]] = []
    for si, sent in enumerate(sentences):
        hits = gazetteer_hits_fn(sent) if gazetteer_hits_fn is not None else None
        try:
            out.append(
                [
                    index.vector(
                        extract_features(sent, t, config, cluster_lookup, hits)
                    )
                    for t in range(len(sent))
                ]
            )
        except ConfigError as exc:
            raise ConfigError(f"sentence {si}: {exc}") from exc
    return out


def index_corpus(
    sentences: Iterable[Sentence],
    config: FeatureTemplateConfig,
    cluster_lookup: Callable[[str], int] | None = None,
    gazetteer_hits_fn: Callable[[Sentence], list[set[str]]] | None = None,
) -> tuple[FeatureIndex, list[list[np.ndarray]]]:
    """Build a fresh feature index over a corpus and freeze it.

    Every distinct feature string receives one id (in corpus order, so the
    result is deterministic); the returned vectors reference only those ids.
    """
    index = FeatureIndex()
    vectors = featurize(sentences, config, index, cluster_lookup, gazetteer_hits_fn)
    index.freeze()
    return index, vectors


def load_pos_lexicon(path) -> dict[str, str]:
    """Read a "word<TAB>tag" lexicon file (NFC-normalized words)."""
    lexicon: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read POS lexicon {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError("expected 'word<TAB>tag'", line=lineno, path=str(path))
        lexicon[nfc(parts[0].strip())] = parts[1].strip()
    return lexicon


def apply_pos_lexicon(
    sentences: list[Sentence],
    lexicon: dict[str, str],
    unknown_tag: str | None = None,
) -> list[Sentence]:
    """Fill missing POS tags from a lexicon; unmatched words get ``unknown_tag``.

    Tokens that already carry a POS tag are left alone. With
    ``unknown_tag=None`` unmatched words stay untagged (and extraction will
    reject them if POS features are enabled).
    """
    out = []
    for sent in sentences:
        toks = []
        changed = False
        for tok in sent:
            if tok.pos is None:
                tag = lexicon.get(tok.surface, unknown_tag)
                if tag is not None:
                    tok = Token(tok.surface, tag, tok.label)
                    changed = True
            toks.append(tok)
        out.append(Sentence(tuple(toks)) if changed else sent)
    return out
