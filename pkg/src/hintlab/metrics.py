"""Accuracy, relative student gain, category aggregation, hint counts, and BLEU."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional, Sequence

from .corpus import resource_class
from .engine import TERMINAL_CORRECT_AFTER_HINTS, TERMINAL_CORRECT_INITIALLY, SessionRecord


class MetricsError(Exception):
    pass


class ZeroBaseline(MetricsError):
    pass


class EmptyCategory(MetricsError):
    pass


class UndefinedMember(MetricsError):
    pass


class EmptyRecordSet(MetricsError):
    pass


class LengthMismatch(MetricsError):
    pass


class EmptyCorpus(MetricsError):
    pass


@dataclass(frozen=True)
class AccuracyPair:
    a_before: float
    a_after: float
    n_items: int

    def __post_init__(self) -> None:
        for name in ("a_before", "a_after"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name}={value} outside [0, 100]")
        if self.n_items < 1:
            raise ValueError("n_items must be positive")


def student_gain(pair: AccuracyPair) -> float:
    """Relative improvement G = (a_after - a_before) / a_before * 100. Negative means regression."""
    if pair.a_before == 0.0:
        raise ZeroBaseline("gain is undefined for a zero baseline; report a flagged null, not 0")
    return (pair.a_after - pair.a_before) / pair.a_before * 100.0


def category_mean(gains: Sequence[Optional[float]], category: Optional[str] = None) -> float:
    label = f" for {category}" if category else ""
    if not gains:
        raise EmptyCategory(f"no gains{label}")
    if any(g is None for g in gains):
        raise UndefinedMember(f"gain list{label} holds an undefined (zero-baseline) member")
    return sum(gains) / len(gains)


def model_delta(g_a: float, g_b: float) -> float:
    return g_a - g_b


STAGE_BEFORE = "before"
STAGE_AFTER = "after"


def _completed_same_config(records: Iterable[SessionRecord]) -> list[SessionRecord]:
    completed = [r for r in records if r.completed]
    if not completed:
        raise EmptyRecordSet("no completed session records")
    fingerprints = {r.config["fingerprint"] for r in completed}
    if len(fingerprints) > 1:
        raise MetricsError(f"records span {len(fingerprints)} configs; accuracy is per-config")
    return completed


def accuracy(records: Iterable[SessionRecord], stage: str) -> float:
    """Percentage correct before any hint, or after up to N hints."""
    completed = _completed_same_config(records)
    if stage == STAGE_BEFORE:
        hits = sum(1 for r in completed if r.terminal_state == TERMINAL_CORRECT_INITIALLY)
    elif stage == STAGE_AFTER:
        hits = sum(1 for r in completed if r.solved)
    else:
        raise ValueError(f"unknown stage {stage!r}")
    return 100.0 * hits / len(completed)


def accuracy_pair(records: Iterable[SessionRecord]) -> AccuracyPair:
    completed = _completed_same_config(records)
    return AccuracyPair(
        a_before=accuracy(completed, STAGE_BEFORE),
        a_after=accuracy(completed, STAGE_AFTER),
        n_items=len(completed),
    )


@dataclass(frozen=True)
class HintCountStats:
    language: str
    entered: int  # sessions that saw at least one hint
    rescued: int
    mean_hints: Optional[float]  # None when nothing entered the loop
    histogram: dict[int, int]  # hints_used at termination -> session count


def hint_count_stats(records: Iterable[SessionRecord]) -> dict[str, HintCountStats]:
    """Per-language hint usage over sessions that entered the revision loop."""
    by_language: dict[str, list[SessionRecord]] = {}
    for record in records:
        if record.completed:
            by_language.setdefault(record.config["language"], []).append(record)
    stats: dict[str, HintCountStats] = {}
    for language in sorted(by_language):
        entered = [r for r in by_language[language] if r.hints_used >= 1]
        histogram = dict(sorted(Counter(r.hints_used for r in entered).items()))
        stats[language] = HintCountStats(
            language=language,
            entered=len(entered),
            rescued=sum(1 for r in entered if r.terminal_state == TERMINAL_CORRECT_AFTER_HINTS),
            mean_hints=(sum(r.hints_used for r in entered) / len(entered)) if entered else None,
            histogram=histogram,
        )
    return stats


_BLEU_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def bleu_tokenize(text: str) -> list[str]:
    """Case-sensitive tokenizer: word characters grouped, punctuation split off."""
    return _BLEU_TOKEN_RE.findall(text)


def _ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str], max_order: int = 4) -> float:
    """Corpus-level BLEU in [0, 100]: uniform 4-gram weights, brevity penalty, no smoothing."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise EmptyCorpus("BLEU needs at least one sentence pair")

    matched = [0] * max_order
    totals = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hypothesis, reference in zip(hypotheses, references):
        hyp_tokens = bleu_tokenize(hypothesis)
        ref_tokens = bleu_tokenize(reference)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for order in range(1, max_order + 1):
            hyp_counts = _ngram_counts(hyp_tokens, order)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref_tokens, order)
            totals[order - 1] += sum(hyp_counts.values())
            matched[order - 1] += sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())

    if hyp_len == 0 or any(m == 0 for m in matched) or any(t == 0 for t in totals):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matched, totals)) / max_order
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision)


def round_half_up(value: float, places: int = 2) -> float:
    """Report rounding: decimal half-up (0.005 -> 0.01), not banker's rounding."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class GainCell:
    language: str
    mode: str
    strategy: str
    student: str
    teacher: str
    n_items: int
    a_before: float
    a_after: float
    gain: Optional[float]
    zero_baseline: bool


@dataclass(frozen=True)
class CategoryRow:
    category: str  # HRL | LRL
    mode: str
    strategy: str
    student: str
    teacher: str
    languages: tuple[str, ...]
    mean_gain: Optional[float]
    undefined_members: int


@dataclass(frozen=True)
class AvgRow:
    category: str
    mode: str
    strategy: str
    teacher: str
    students: tuple[str, ...]
    mean_gain: Optional[float]


@dataclass(frozen=True)
class DeltaRow:
    category: str
    mode: str
    strategy: str
    teacher: str
    student_a: str
    student_b: str
    delta: Optional[float]


@dataclass(frozen=True)
class GainTable:
    cells: tuple[GainCell, ...]
    category_rows: tuple[CategoryRow, ...]
    avg_rows: tuple[AvgRow, ...]
    delta_rows: tuple[DeltaRow, ...]


def build_gain_table(records: Iterable[SessionRecord], student_order: Optional[Sequence[str]] = None) -> GainTable:
    """Assemble per-language cells plus category, cross-student, and delta rows.

    Zero-baseline gains surface as flagged nulls and poison every aggregate
    that would include them; they are never coerced to 0.
    """
    by_fingerprint: dict[str, list[SessionRecord]] = {}
    for record in records:
        if record.completed:
            by_fingerprint.setdefault(record.config["fingerprint"], []).append(record)
    if not by_fingerprint:
        raise EmptyRecordSet("no completed session records to tabulate")

    cells = []
    for fingerprint in by_fingerprint:
        group = by_fingerprint[fingerprint]
        cfg = group[0].config
        pair = accuracy_pair(group)
        zero = pair.a_before == 0.0
        cells.append(
            GainCell(
                language=cfg["language"],
                mode=cfg["mode"],
                strategy=cfg["strategy"],
                student=cfg["student"],
                teacher=cfg["teacher"],
                n_items=pair.n_items,
                a_before=pair.a_before,
                a_after=pair.a_after,
                gain=None if zero else student_gain(pair),
                zero_baseline=zero,
            )
        )
    cells.sort(key=lambda c: (c.language, c.mode, c.strategy, c.student, c.teacher))

    if student_order is None:
        ordered_students = sorted({c.student for c in cells})
    else:
        ordered_students = [s for s in student_order if any(c.student == s for c in cells)]

    grouped: dict[tuple[str, str, str, str, str], list[GainCell]] = {}
    for cell in cells:
        key = (cell.mode, cell.strategy, cell.student, cell.teacher, resource_class(cell.language))
        grouped.setdefault(key, []).append(cell)

    category_rows = []
    for (mode, strategy, student, teacher, category), members in sorted(grouped.items()):
        gains = [m.gain for m in members]
        undefined = sum(1 for g in gains if g is None)
        mean = None if undefined else category_mean(gains, category)
        category_rows.append(
            CategoryRow(
                category=category,
                mode=mode,
                strategy=strategy,
                student=student,
                teacher=teacher,
                languages=tuple(m.language for m in members),
                mean_gain=mean,
                undefined_members=undefined,
            )
        )

    by_cross: dict[tuple[str, str, str, str], dict[str, Optional[float]]] = {}
    for row in category_rows:
        by_cross.setdefault((row.mode, row.strategy, row.teacher, row.category), {})[row.student] = row.mean_gain

    avg_rows = []
    delta_rows = []
    for (mode, strategy, teacher, category), per_student in sorted(by_cross.items()):
        students = tuple(s for s in ordered_students if s in per_student)
        means = [per_student[s] for s in students]
        avg = None if any(m is None for m in means) else category_mean(means, category)
        avg_rows.append(AvgRow(category=category, mode=mode, strategy=strategy, teacher=teacher, students=students, mean_gain=avg))
        if len(students) == 2:
            g_a, g_b = per_student[students[0]], per_student[students[1]]
            delta = None if g_a is None or g_b is None else model_delta(g_a, g_b)
            delta_rows.append(
                DeltaRow(
                    category=category,
                    mode=mode,
                    strategy=strategy,
                    teacher=teacher,
                    student_a=students[0],
                    student_b=students[1],
                    delta=delta,
                )
            )

    return GainTable(
        cells=tuple(cells),
        category_rows=tuple(category_rows),
        avg_rows=tuple(avg_rows),
        delta_rows=tuple(delta_rows),
    )
