"""Exercise corpora and language metadata.

One corpus file per language, UTF-8 TSV named ``mgsm_<code>.tsv`` with one
``question<TAB>answer`` pair per line. Files for different languages are
parallel: row i in every file is the same underlying problem, so gold answers
must agree numerically across languages.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

LANGUAGES: tuple[str, ...] = ("en", "bn", "de", "es", "fr", "ja", "ru", "sw", "te", "th", "zh")

HIGH_RESOURCE: frozenset[str] = frozenset({"en", "zh", "fr", "de", "ja", "ru", "es"})
LOW_RESOURCE: frozenset[str] = frozenset({"bn", "th", "te", "sw"})

# English display names, used for the {hint_lang} prompt placeholder
ENGLISH_NAMES: dict[str, str] = {
    "en": "English",
    "bn": "Bengali",
    "de": "German",
    "es": "Spanish",
    "fr": "French",
    "ja": "Japanese",
    "ru": "Russian",
    "sw": "Swahili",
    "te": "Telugu",
    "th": "Thai",
    "zh": "Chinese",
}


class CorpusError(Exception):
    """Base class for corpus loading failures."""


class UnknownLanguage(CorpusError):
    def __init__(self, code: str) -> None:
        super().__init__(f"unknown language code {code!r}; admissible: {', '.join(LANGUAGES)}")
        self.code = code


class MissingCorpusFile(CorpusError):
    def __init__(self, path: Path) -> None:
        super().__init__(f"corpus file not found: {path}")
        self.path = path


class MalformedRow(CorpusError):
    def __init__(self, path: Path, line_no: int, reason: str) -> None:
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


class UnparseableAnswer(CorpusError):
    def __init__(self, path: Path, line_no: int, raw: str) -> None:
        super().__init__(f"{path}:{line_no}: answer field {raw!r} is not a finite decimal")
        self.path = path
        self.line_no = line_no
        self.raw = raw


def check_language(code: str) -> str:
    if code not in LANGUAGES:
        raise UnknownLanguage(code)
    return code


def resource_class(language: str) -> str:
    """Return "HRL" or "LRL" for an admissible language code."""
    check_language(language)
    return "HRL" if language in HIGH_RESOURCE else "LRL"


@dataclass(frozen=True)
class ExerciseItem:
    id: int
    language: str
    question: str
    gold_answer: Decimal
    # exact answer string as written in the corpus (post comma-stripping);
    # the leakage audit matches against this form
    gold_answer_str: str
    normalization_applied: bool = False


def parse_answer(raw: str) -> tuple[Decimal, str, bool]:
    """Parse an answer field into (value, normalized string, stripped-commas flag)."""
    normalized = raw.strip().replace(",", "")
    value = Decimal(normalized)  # raises InvalidOperation on junk
    if not value.is_finite():
        raise InvalidOperation(f"non-finite answer {raw!r}")
    return value, normalized, normalized != raw.strip()


def corpus_path(root: Path | str, language: str) -> Path:
    return Path(root) / f"mgsm_{language}.tsv"


def load_corpus(path: Path | str, language: str) -> list[ExerciseItem]:
    """Load one language's exercise file.

    Returns items in file order with ids 0..n-1. Duplicate question rows,
    rows without exactly one tab, and non-decimal answers are rejected.
    """
    check_language(language)
    path = Path(path)
    if not path.is_file():
        raise MissingCorpusFile(path)

    items: list[ExerciseItem] = []
    seen_questions: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedRow(path, line_no, f"expected 2 tab-separated fields, got {len(parts)}")
            question, raw_answer = parts
            if not question.strip():
                raise MalformedRow(path, line_no, "empty question field")
            if question in seen_questions:
                raise MalformedRow(path, line_no, "duplicate question row")
            seen_questions.add(question)
            try:
                value, normalized, stripped = parse_answer(raw_answer)
            except InvalidOperation:
                raise UnparseableAnswer(path, line_no, raw_answer) from None
            items.append(
                ExerciseItem(
                    id=len(items),
                    language=language,
                    question=question,
                    gold_answer=value,
                    gold_answer_str=normalized,
                    normalization_applied=stripped,
                )
            )
    if not items:
        warnings.warn(f"corpus file {path} is empty", stacklevel=2)
    return items


def load_corpora(root: Path | str, languages: list[str] | tuple[str, ...]) -> dict[str, list[ExerciseItem]]:
    """Load several languages from one corpus root, enforcing parallelism."""
    corpora = {lang: load_corpus(corpus_path(root, lang), lang) for lang in languages}
    counts = {lang: len(items) for lang, items in corpora.items()}
    if len(set(counts.values())) > 1:
        raise CorpusError(f"corpus files are not parallel, row counts differ: {counts}")
    reference = next(iter(corpora.values()), [])
    for lang, items in corpora.items():
        for ref_item, item in zip(reference, items):
            if ref_item.gold_answer != item.gold_answer:
                raise CorpusError(
                    f"gold answer mismatch at id {item.id}: "
                    f"{reference[0].language}={ref_item.gold_answer} vs {lang}={item.gold_answer}"
                )
    return corpora
