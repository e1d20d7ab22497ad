"""Entity-span extraction from BIO sequences and span-level P/R/F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .conll import Sentence, split_label
from .errors import ConfigError, DataError


@dataclass(frozen=True, order=True)
class EntitySpan:
    """One labeled entity mention: type plus inclusive token range."""

    entity_type: str
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise DataError(f"span start {self.start} > end {self.end}")


def extract_spans(labels: Sequence[str]) -> set[EntitySpan]:
    """Spans of a BIO sequence: each maximal B-X (I-X)* run is one span.

    Tolerant of ill-formed input (as unconstrained decoders can produce):
    an I-X that does not continue a same-type entity starts a new span,
    matching repair-mode BIO validation.
    """
    spans: set[EntitySpan] = set()
    open_type: str | None = None
    open_start = 0
    for i, label in enumerate(labels):
        prefix, typ = split_label(label)
        if open_type is not None and (prefix != "I" or typ != open_type):
            spans.add(EntitySpan(open_type, open_start, i - 1))
            open_type = None
        if prefix == "B" or (prefix == "I" and open_type is None):
            open_type, open_start = typ, i
    if open_type is not None:
        spans.add(EntitySpan(open_type, open_start, len(labels) - 1))
    return spans


@dataclass(frozen=True)
class TypeMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    """Per-type and overall span-level scores.

    ``micro_*`` pool TP/FP/FN over all types; ``macro_f1`` is the unweighted
    mean of per-type F1 over types with gold support > 0.
    """

    per_type: dict[str, TypeMetrics]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_f1: float


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def evaluate(gold: Sequence[Sentence], predicted: Sequence[Sequence[str]]) -> EvalReport:
    """Span-level scores of predicted label sequences against a gold corpus.

    A predicted span is a true positive iff a span with identical
    (type, start, end) exists in the gold sentence.
    """
    if len(gold) != len(predicted):
        raise DataError(
            f"corpus size mismatch: {len(gold)} gold sentences, {len(predicted)} predictions"
        )
    tally: dict[str, list[int]] = {}  # type -> [tp, fp, fn]
    for si, (gold_sent, pred_labels) in enumerate(zip(gold, predicted)):
        if len(gold_sent) != len(pred_labels):
            raise DataError(
                f"sentence {si}: {len(gold_sent)} gold tokens vs "
                f"{len(pred_labels)} predicted labels"
            )
        gold_labels = gold_sent.labels
        if any(lab is None for lab in gold_labels):
            raise DataError(f"sentence {si}: gold corpus has unlabeled tokens")
        g = extract_spans(gold_labels)
        p = extract_spans(list(pred_labels))
        for span in g | p:
            tally.setdefault(span.entity_type, [0, 0, 0])
        for span in g & p:
            tally[span.entity_type][0] += 1
        for span in p - g:
            tally[span.entity_type][1] += 1
        for span in g - p:
            tally[span.entity_type][2] += 1

    per_type: dict[str, TypeMetrics] = {}
    for typ in sorted(tally):
        tp, fp, fn = tally[typ]
        prec, rec, f1 = _prf(tp, fp, fn)
        per_type[typ] = TypeMetrics(prec, rec, f1, tp + fn, tp, fp, fn)
    tp = sum(m.tp for m in per_type.values())
    fp = sum(m.fp for m in per_type.values())
    fn = sum(m.fn for m in per_type.values())
    micro_p, micro_r, micro_f1 = _prf(tp, fp, fn)
    with_support = [m.f1 for m in per_type.values() if m.support > 0]
    macro_f1 = sum(with_support) / len(with_support) if with_support else 0.0
    return EvalReport(per_type, micro_p, micro_r, micro_f1, macro_f1)


def report_render(report: EvalReport, fmt: str = "human") -> str:
    """Render a report as an aligned human table or as "name<TAB>value" lines."""
    if fmt == "human":
        lines = []
        for typ, m in report.per_type.items():
            lines.append(f"P-{typ:<12} {m.precision:.6f}")
            lines.append(f"R-{typ:<12} {m.recall:.6f}")
            lines.append(f"F1-{typ:<11} {m.f1:.6f}  (support {m.support})")
        lines.append(f"{'Precision':<14} {report.micro_precision:.6f}")
        lines.append(f"{'Recall':<14} {report.micro_recall:.6f}")
        lines.append(f"{'F1':<14} {report.micro_f1:.6f}")
        lines.append(f"{'Macro-F1':<14} {report.macro_f1:.6f}")
        return "\n".join(lines) + "\n"
    if fmt == "tsv":
        lines = []
        for typ, m in report.per_type.items():
            lines.append(f"P-{typ}\t{m.precision!r}")
            lines.append(f"R-{typ}\t{m.recall!r}")
            lines.append(f"F1-{typ}\t{m.f1!r}")
            lines.append(f"support-{typ}\t{m.support}")
        lines.append(f"Precision\t{report.micro_precision!r}")
        lines.append(f"Recall\t{report.micro_recall!r}")
        lines.append(f"F1\t{report.micro_f1!r}")
        lines.append(f"Macro-F1\t{report.macro_f1!r}")
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")
