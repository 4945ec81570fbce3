"""Post-hoc hint audits: gold-answer leakage, language consistency, back-translation BLEU."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .backends import TranslatorUnavailable
from .backends.lid import LanguageIdentifier
from .corpus import ExerciseItem, resource_class
from .engine import SessionRecord
from .metrics import corpus_bleu
from .prompts import StudentPromptMode, student_prompt_language

SHORT_TEXT_CHARS = 20  # LID below this length is flagged low-confidence but still counted

# native digit forms for corpus scripts that have them; OFF unless passed explicitly
NATIVE_DIGITS: dict[str, str] = {}
for _ascii, _bn, _te, _th in zip("0123456789", "০১২৩৪৫৬৭৮৯", "౦౧౨౩౪౫౬౭౮౯", "๐๑๒๓๔๕๖๗๘๙"):
    NATIVE_DIGITS[_bn] = _ascii
    NATIVE_DIGITS[_te] = _ascii
    NATIVE_DIGITS[_th] = _ascii


def transliterate_digits(text: str, table: dict[str, str]) -> str:
    return text.translate(str.maketrans(table))


@lru_cache(maxsize=4096)
def _leakage_pattern(answer: str) -> re.Pattern:
    # standalone occurrence: word-bounded, not touching a decimal point on either side
    return re.compile(r"(?<!\.)\b" + re.escape(answer) + r"\b(?!\.)")


def detect_leakage(hint: str, gold_answer_str: str, digit_table: Optional[dict[str, str]] = None) -> bool:
    """True iff the gold answer appears standalone in the hint text."""
    if digit_table:
        hint = transliterate_digits(hint, digit_table)
    return _leakage_pattern(gold_answer_str).search(hint) is not None


@dataclass(frozen=True)
class LeakageGroupRow:
    strategy: str
    student: str
    teacher: str
    category: str
    total_sessions: int
    leaked_sessions: int
    proportion: float  # leaked_sessions / total_sessions * 100
    total_hints: int
    leaked_hints: int
    leaked_pre_translation: int  # diagnostic: leaks in the untranslated hint form


@dataclass(frozen=True)
class LeakageLanguageRow:
    language: str
    helpful_hint_total: int
    helpful_leaked: int
    leakage_ratio: Optional[float]  # None when no helpful hints exist


@dataclass(frozen=True)
class LeakageReport:
    groups: tuple[LeakageGroupRow, ...]
    languages: tuple[LeakageLanguageRow, ...]


def _gold_lookup(corpora: dict[str, list[ExerciseItem]]) -> dict[tuple[str, int], str]:
    return {(lang, item.id): item.gold_answer_str for lang, items in corpora.items() for item in items}


def leakage_report(
    records: Iterable[SessionRecord],
    corpora: dict[str, list[ExerciseItem]],
    digit_table: Optional[dict[str, str]] = None,
) -> LeakageReport:
    """Aggregate leakage per (strategy, student, teacher, category) and per language.

    The session-level proportion counts sessions whose hints leak the gold
    answer over all completed sessions in the group; hint-level counts ride
    along for diagnostics. Hints are audited in the form the student saw.
    """
    golds = _gold_lookup(corpora)
    groups: dict[tuple[str, str, str, str], dict[str, int]] = {}
    lang_rows: dict[str, dict[str, int]] = {}

    for record in records:
        if not record.completed:
            continue
        cfg = record.config
        gold = golds.get((cfg["language"], record.exercise_id))
        if gold is None:
            raise KeyError(f"no corpus item for language {cfg['language']} exercise {record.exercise_id}")
        group_key = (cfg["strategy"], cfg["student"], cfg["teacher"], resource_class(cfg["language"]))
        group = groups.setdefault(
            group_key,
            {"total_sessions": 0, "leaked_sessions": 0, "total_hints": 0, "leaked_hints": 0, "leaked_pre": 0},
        )
        lang = lang_rows.setdefault(cfg["language"], {"helpful": 0, "helpful_leaked": 0})

        group["total_sessions"] += 1
        session_leaked = False
        for iteration in record.iterations:
            leaked = detect_leakage(iteration.hint, gold, digit_table)
            session_leaked = session_leaked or leaked
            group["total_hints"] += 1
            group["leaked_hints"] += int(leaked)
            if iteration.hint_pre_translation is not None:
                group["leaked_pre"] += int(detect_leakage(iteration.hint_pre_translation, gold, digit_table))
            if iteration.hint_label == "good":
                lang["helpful"] += 1
                lang["helpful_leaked"] += int(leaked)
        group["leaked_sessions"] += int(session_leaked)

    group_rows = tuple(
        LeakageGroupRow(
            strategy=strategy,
            student=student,
            teacher=teacher,
            category=category,
            total_sessions=c["total_sessions"],
            leaked_sessions=c["leaked_sessions"],
            proportion=100.0 * c["leaked_sessions"] / c["total_sessions"],
            total_hints=c["total_hints"],
            leaked_hints=c["leaked_hints"],
            leaked_pre_translation=c["leaked_pre"],
        )
        for (strategy, student, teacher, category), c in sorted(groups.items())
    )
    language_rows = tuple(
        LeakageLanguageRow(
            language=language,
            helpful_hint_total=c["helpful"],
            helpful_leaked=c["helpful_leaked"],
            leakage_ratio=(100.0 * c["helpful_leaked"] / c["helpful"]) if c["helpful"] else None,
        )
        for language, c in sorted(lang_rows.items())
    )
    return LeakageReport(groups=group_rows, languages=language_rows)


def helpful_leakage_ratio(
    records: Iterable[SessionRecord],
    corpora: dict[str, list[ExerciseItem]],
    digit_table: Optional[dict[str, str]] = None,
) -> dict[str, LeakageLanguageRow]:
    report = leakage_report(records, corpora, digit_table)
    return {row.language: row for row in report.languages}


@dataclass(frozen=True)
class LidScore:
    accuracy: Optional[float]  # None when no scorable texts
    scored: int
    skipped_empty: int
    short_texts: int


def lid_accuracy(texts: Iterable[str], expected: str, identifier: LanguageIdentifier) -> LidScore:
    """Share of texts whose top-1 identification equals the expected language."""
    scored = 0
    hits = 0
    skipped = 0
    short = 0
    for text in texts:
        if not text or not text.strip():
            skipped += 1
            continue
        if len(text) < SHORT_TEXT_CHARS:
            short += 1
        scored += 1
        hits += int(identifier.identify(text).language == expected)
    return LidScore(
        accuracy=(100.0 * hits / scored) if scored else None,
        scored=scored,
        skipped_empty=skipped,
        short_texts=short,
    )


TEXT_KINDS = ("hint", "initial_solution", "revised_solution")


@dataclass(frozen=True)
class ConsistencyRow:
    text_kind: str
    strategy: str
    category: str
    expected_breakdown: tuple[tuple[str, int], ...]  # (expected language, n texts)
    accuracy: Optional[float]
    scored: int
    skipped_empty: int
    short_texts: int


@dataclass(frozen=True)
class ConsistencyReport:
    rows: tuple[ConsistencyRow, ...]


def consistency_report(records: Iterable[SessionRecord], identifier: LanguageIdentifier) -> ConsistencyReport:
    """Mean LID accuracy per (text kind, strategy, resource category)."""
    buckets: dict[tuple[str, str, str], list[tuple[str, str]]] = {}  # -> [(text, expected)]
    for record in records:
        if not record.completed:
            continue
        cfg = record.config
        category = resource_class(cfg["language"])
        student_lang = student_prompt_language(StudentPromptMode(cfg["mode"]), cfg["language"])
        buckets.setdefault(("initial_solution", cfg["strategy"], category), []).append(
            (record.initial_solution, student_lang)
        )
        for iteration in record.iterations:
            buckets.setdefault(("hint", cfg["strategy"], category), []).append(
                (iteration.hint, iteration.hint_language_requested)
            )
            buckets.setdefault(("revised_solution", cfg["strategy"], category), []).append(
                (iteration.revised_solution, student_lang)
            )

    rows = []
    for (text_kind, strategy, category), pairs in sorted(buckets.items()):
        scored = 0
        hits = 0
        skipped = 0
        short = 0
        expected_counts: dict[str, int] = {}
        for text, expected in pairs:
            if not text or not text.strip():
                skipped += 1
                continue
            if len(text) < SHORT_TEXT_CHARS:
                short += 1
            scored += 1
            expected_counts[expected] = expected_counts.get(expected, 0) + 1
            hits += int(identifier.identify(text).language == expected)
        rows.append(
            ConsistencyRow(
                text_kind=text_kind,
                strategy=strategy,
                category=category,
                expected_breakdown=tuple(sorted(expected_counts.items())),
                accuracy=(100.0 * hits / scored) if scored else None,
                scored=scored,
                skipped_empty=skipped,
                short_texts=short,
            )
        )
    return ConsistencyReport(rows=tuple(rows))


@dataclass(frozen=True)
class BackTranslationRow:
    language: str
    n_pairs: int
    bleu: float


@dataclass(frozen=True)
class BackTranslationReport:
    rows: tuple[BackTranslationRow, ...]


def backtranslation_quality(hints_en: list[str], hints_translated: list[str], language: str, translator) -> float:
    """Back-translate L hints to English and score them against the originals."""
    if translator is None:
        raise TranslatorUnavailable(f"back-translation for {language!r} needs a translator backend")
    back = [translator.translate(text, language, "en") for text in hints_translated]
    return corpus_bleu(back, hints_en)


def backtranslation_report(records: Iterable[SessionRecord], translator) -> BackTranslationReport:
    """BLEU per language over hints that went through the translation step."""
    pairs: dict[str, tuple[list[str], list[str]]] = {}
    for record in records:
        if not record.completed:
            continue
        language = record.config["language"]
        for iteration in record.iterations:
            if iteration.hint_pre_translation is None:
                continue
            originals, translated = pairs.setdefault(language, ([], []))
            originals.append(iteration.hint_pre_translation)
            translated.append(iteration.hint)
    rows = []
    for language in sorted(pairs):
        originals, translated = pairs[language]
        rows.append(
            BackTranslationRow(
                language=language,
                n_pairs=len(originals),
                bleu=backtranslation_quality(originals, translated, language, translator),
            )
        )
    return BackTranslationReport(rows=tuple(rows))
