"""CoNLL corpus parsing and serialization, BIO validation, dataset statistics.

Corpora are files of whitespace-separated columns, one token per row, with
sentences separated by blank lines. Which column holds the surface form, the
POS tag, and the BIO label is given by a column spec such as
``("surface", "pos", "label")``; the role ``"-"`` skips a column. Lines
starting with ``#`` before the first token row are treated as file comments,
so a corpus whose very first surface form starts with ``#`` is not
representable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ConfigError, DataError, ParseError
from .textutil import nfc

DEFAULT_ENTITY_TYPES = ("LOC", "GRP", "PROD", "CW", "CORP", "PER")

_ROLES = ("surface", "pos", "label", "-")


@dataclass(frozen=True)
class Token:
    """One corpus token: surface form, optional POS tag, optional BIO label."""

    surface: str
    pos: str | None = None
    label: str | None = None

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise DataError(
                f"token surface must be non-empty and whitespace-free, got {self.surface!r}"
            )


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise DataError("a sentence needs at least one token")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def labels(self) -> list[str | None]:
        return [t.label for t in self.tokens]


@dataclass(frozen=True)
class LabelSchema:
    """Ordered entity types and the derived BIO label alphabet.

    The label list is always ``O`` first, then a ``B-X, I-X`` pair per entity
    type in declaration order, so label ids are stable and deterministic.
    """

    entity_types: tuple[str, ...] = DEFAULT_ENTITY_TYPES
    labels: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        types = tuple(self.entity_types)
        if not types:
            raise ConfigError("schema needs at least one entity type")
        seen = set()
        for t in types:
            if not t or any(c.isspace() for c in t):
                raise ConfigError(f"bad entity type name: {t!r}")
            if t == "O":
                raise ConfigError('"O" cannot be an entity type')
            if t in seen:
                raise ConfigError(f"duplicate entity type: {t!r}")
            seen.add(t)
        labels = ("O",) + tuple(
            f"{p}-{t}" for t in types for p in ("B", "I")
        )
        object.__setattr__(self, "entity_types", types)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_ids", {lab: i for i, lab in enumerate(labels)})

    def __len__(self) -> int:
        return len(self.labels)

    def id_of(self, label: str) -> int:
        ids = getattr(self, "_ids")
        if label not in ids:
            raise DataError(f"label {label!r} is not in the schema {self.labels}")
        return ids[label]

    def label_of(self, label_id: int) -> str:
        return self.labels[label_id]

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sentence]) -> "LabelSchema":
        """Derive a schema from the entity types seen in a corpus (sorted)."""
        types = set()
        for sent in sentences:
            for tok in sent:
                if tok.label is not None:
                    _, typ = split_label(tok.label)
                    if typ is not None:
                        types.add(typ)
        if not types:
            raise DataError("corpus contains no entity labels to derive a schema from")
        return cls(tuple(sorted(types)))


def split_label(label: str) -> tuple[str, str | None]:
    """Return (prefix, entity type) for a BIO label; ("O", None) for outside."""
    if label == "O":
        return "O", None
    if len(label) > 2 and label[0] in "BI" and label[1] == "-":
        return label[0], label[2:]
    raise DataError(f"not a BIO label: {label!r}")


def _check_columns(columns, *, for_write=False):
    columns = tuple(columns)
    for role in columns:
        if role not in _ROLES or (for_write and role == "-"):
            raise ConfigError(f"unknown column role {role!r}; expected one of {_ROLES}")
    for role in ("surface", "pos", "label"):
        if columns.count(role) > 1:
            raise ConfigError(f"column role {role!r} given more than once")
    if "surface" not in columns:
        raise ConfigError('column spec must include "surface"')
    return columns


def _map_bare_labels(raw_labels: list[str | None]) -> list[str | None]:
    """Turn bare family tags into BIO2 by adjacency: X,X,O -> B-X,I-X,O."""
    out: list[str | None] = []
    prev_raw = None
    for raw in raw_labels:
        if raw is None or raw == "O" or (len(raw) > 2 and raw[0] in "BI" and raw[1] == "-"):
            out.append(raw)
        else:
            out.append(("I-" if raw == prev_raw else "B-") + raw)
        prev_raw = raw
    return out


def parse_conll(
    text: str | Iterable[str],
    columns: Iterable[str] = ("surface", "label"),
    *,
    bare_labels: bool = False,
    normalize: bool = True,
    path: str | None = None,
) -> list[Sentence]:
    """Parse CoNLL text into sentences.

    ``text`` may be a string or an iterable of lines. Rows are split on runs
    of whitespace; a row with fewer fields than the column spec is a parse
    error carrying its 1-based line number. Extra trailing fields are
    ignored. Surface forms (and POS/label fields) are NFC-normalized unless
    ``normalize`` is off. With ``bare_labels``, labels without a B-/I- prefix
    are mapped to BIO2 by adjacency.
    """
    columns = _check_columns(columns)
    if isinstance(text, str):
        lines = text.split("\n")
    else:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in text]

    def clean(s: str) -> str:
        return nfc(s) if normalize else s

    sentences: list[Sentence] = []
    rows: list[dict] = []
    seen_token_row = False

    def flush():
        nonlocal rows
        if not rows:
            return
        if bare_labels:
            mapped = _map_bare_labels([r["label"] for r in rows])
            for r, lab in zip(rows, mapped):
                r["label"] = lab
        sentences.append(
            Sentence(tuple(Token(r["surface"], r["pos"], r["label"]) for r in rows))
        )
        rows = []

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            flush()
            continue
        if not seen_token_row and line.lstrip().startswith("#"):
            continue
        seen_token_row = True
        fields = line.split()
        if len(fields) < len(columns):
            raise ParseError(
                f"expected {len(columns)} columns {tuple(columns)}, got {len(fields)}",
                line=lineno,
                path=path,
            )
        row = {"surface": None, "pos": None, "label": None}
        for role, value in zip(columns, fields):
            if role != "-":
                row[role] = clean(value)
        rows.append(row)
    flush()
    return sentences


def validate_bio(
    sentence: Sentence,
    mode: str = "strict",
    schema: LabelSchema | None = None,
) -> Sentence:
    """Check (or repair) BIO2 discipline on one sentence.

    ``strict`` raises on an I-X that does not continue a B-X/I-X of the same
    type; ``repair`` rewrites such an I-X into B-X. Repair is idempotent.
    Malformed label strings and (when a schema is given) unknown entity
    types are errors in both modes.
    """
    if mode not in ("strict", "repair"):
        raise ConfigError(f"mode must be 'strict' or 'repair', got {mode!r}")
    new_labels: list[str] = []
    changed = False
    prev_prefix, prev_type = "O", None
    for i, tok in enumerate(sentence):
        if tok.label is None:
            raise DataError(f"token {i} ({tok.surface!r}) has no label to validate")
        prefix, typ = split_label(tok.label)
        if schema is not None and typ is not None and typ not in schema.entity_types:
            raise DataError(f"position {i}: unknown entity type in label {tok.label!r}")
        if prefix == "I" and not (prev_prefix in ("B", "I") and prev_type == typ):
            if mode == "strict":
                raise DataError(
                    f"position {i}: illegal {tok.label} after "
                    f"{'start of sentence' if i == 0 else sentence[i - 1].label}"
                )
            prefix = "B"
            changed = True
        new_labels.append("O" if prefix == "O" else f"{prefix}-{typ}")
        prev_prefix, prev_type = prefix, typ
    if not changed:
        return sentence
    return Sentence(
        tuple(
            Token(tok.surface, tok.pos, lab)
            for tok, lab in zip(sentence, new_labels)
        )
    )


def write_conll(
    sentences: Iterable[Sentence],
    columns: Iterable[str] = ("surface", "label"),
) -> str:
    """Serialize sentences to CoNLL text.

    Columns are tab-separated; each sentence is followed by one blank line,
    so ``parse_conll(write_conll(s)) == s`` for matching column specs.
    """
    columns = _check_columns(columns, for_write=True)
    parts: list[str] = []
    for sent in sentences:
        for i, tok in enumerate(sent):
            fields = []
            for role in columns:
                value = getattr(tok, role)
                if value is None:
                    raise DataError(
                        f"token {i} ({tok.surface!r}) has no {role!r} field "
                        f"but the column spec requires one"
                    )
                if any(c.isspace() for c in value):
                    raise DataError(
                        f"token {i}: {role!r} field {value!r} contains whitespace"
                    )
                fields.append(value)
            parts.append("\t".join(fields) + "\n")
        parts.append("\n")
    return "".join(parts)


@dataclass(frozen=True)
class CorpusStats:
    """Sentence counts, length distribution, and per-tag-family token counts."""

    sentence_count: int
    min_len: int
    max_len: int
    mean_len: float
    tag_counts: dict[str, int]


def corpus_stats(sentences: Iterable[Sentence]) -> CorpusStats:
    """Count tokens per entity family (B-X and I-X both count toward X)."""
    lengths: list[int] = []
    counts: dict[str, int] = {}
    for sent in sentences:
        lengths.append(len(sent))
        for i, tok in enumerate(sent):
            if tok.label is None:
                raise DataError(f"token {i} ({tok.surface!r}) has no label")
            _, typ = split_label(tok.label)
            family = typ if typ is not None else "O"
            counts[family] = counts.get(family, 0) + 1
    if not lengths:
        return CorpusStats(0, 0, 0, 0.0, {})
    return CorpusStats(
        sentence_count=len(lengths),
        min_len=min(lengths),
        max_len=max(lengths),
        mean_len=sum(lengths) / len(lengths),
        tag_counts=counts,
    )


def class_weights(tag_counts: Mapping[str, int]) -> dict[str, float]:
    """Per-tag weights w_i = 1 - n_i / sum_j n_j.

    Each weight lies in [0, 1) and the weights sum to N - 1 for N tags.
    """
    for tag, n in tag_counts.items():
        if n < 0:
            raise DataError(f"negative count for tag {tag!r}")
    total = sum(tag_counts.values())
    if total <= 0:
        raise DataError("all tag counts are zero; weights are undefined")
    return {tag: 1.0 - n / total for tag, n in tag_counts.items()}


def _family_order(tag_counts: Mapping[str, int]) -> list[str]:
    return (["O"] if "O" in tag_counts else []) + sorted(
        t for t in tag_counts if t != "O"
    )


def stats_render(stats: CorpusStats, fmt: str = "human") -> str:
    """Render stats as a human report or as "name<TAB>value" lines."""
    if fmt == "tsv":
        lines = [
            f"sentence_count\t{stats.sentence_count}",
            f"min_len\t{stats.min_len}",
            f"max_len\t{stats.max_len}",
            f"mean_len\t{stats.mean_len!r}",
        ]
        lines += [
            f"tag_count_{t}\t{stats.tag_counts[t]}" for t in _family_order(stats.tag_counts)
        ]
        return "\n".join(lines) + "\n"
    if fmt == "human":
        lines = [
            f"sentences    {stats.sentence_count}",
            f"min length   {stats.min_len}",
            f"max length   {stats.max_len}",
            f"mean length  {stats.mean_len:.2f}",
            "tokens by tag family:",
        ]
        lines += [
            f"  {t:<8} {stats.tag_counts[t]}" for t in _family_order(stats.tag_counts)
        ]
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown stats format {fmt!r}")
