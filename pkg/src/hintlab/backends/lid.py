"""Language identification: scripted table, offline heuristic, external model adapter."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Protocol

from ..corpus import LANGUAGES
from .base import EmptyText


@dataclass(frozen=True)
class LidResult:
    language: str  # corpus code, or "other:<code>"
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


class LanguageIdentifier(Protocol):
    def identify(self, text: str) -> LidResult: ...


def _require_text(text: str) -> str:
    if not text or not text.strip():
        raise EmptyText("cannot identify the language of empty text")
    return text


class ScriptedIdentifier:
    """Table-driven identifier: ordered substring rules with a default label."""

    def __init__(self, rules: Iterable[dict], default_language: str = "other:und", default_confidence: float = 0.0) -> None:
        self._rules = [(r["contains"], r["language"], float(r.get("confidence", 0.99))) for r in rules]
        self._default = LidResult(default_language, default_confidence)

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedIdentifier":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(raw.get("rules", []), raw.get("default_language", "other:und"), float(raw.get("default_confidence", 0.0)))

    def identify(self, text: str) -> LidResult:
        _require_text(text)
        for needle, language, confidence in self._rules:
            if needle in text:
                return LidResult(language, confidence)
        return self._default


# Unicode block -> language, for scripts that identify a corpus language on their own
_SCRIPT_BLOCKS: tuple[tuple[str, int, int], ...] = (
    ("bn", 0x0980, 0x09FF),
    ("te", 0x0C00, 0x0C7F),
    ("th", 0x0E00, 0x0E7F),
    ("ru", 0x0400, 0x04FF),
)
_KANA = ((0x3040, 0x309F), (0x30A0, 0x30FF))
_HAN = ((0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF))

_LATIN_STOPWORDS: dict[str, frozenset[str]] = {
    "en": frozenset("the and is of to a in that it was are on with for how many much does did".split()),
    "fr": frozenset("le la les et est une un des du que qui dans pour il elle avec sont combien".split()),
    "de": frozenset("der die das und ist ein eine nicht mit wie viele hat sie er im für".split()),
    "es": frozenset("el los las es una y en que por para tiene con su más cuántos".split()),
    "sw": frozenset("na ya kwa ni wa za ana katika la kuwa ngapi cha alikuwa".split()),
}

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


class HeuristicIdentifier:
    """Offline identifier: Unicode script counts, then stopword voting for Latin text.

    Coarse by construction; meant as the default when no pretrained model file
    is available. Only the 11 corpus languages are distinguishable.
    """

    def identify(self, text: str) -> LidResult:
        _require_text(text)
        letters = [ch for ch in text if ch.isalpha()]
        if not letters:
            return LidResult("other:und", 0.0)

        counts: dict[str, int] = {}
        kana = han = latin = 0
        for ch in letters:
            cp = ord(ch)
            if any(lo <= cp <= hi for lo, hi in _KANA):
                kana += 1
                continue
            if any(lo <= cp <= hi for lo, hi in _HAN):
                han += 1
                continue
            for code, lo, hi in _SCRIPT_BLOCKS:
                if lo <= cp <= hi:
                    counts[code] = counts.get(code, 0) + 1
                    break
            else:
                if cp < 0x0250 or 0x1E00 <= cp <= 0x1EFF:
                    latin += 1
        # kana implies Japanese even though most characters may be Han
        if kana:
            counts["ja"] = kana + han
        elif han:
            counts["zh"] = han

        total = len(letters)
        best_script = max(counts, key=lambda c: counts[c]) if counts else None
        if best_script is not None and counts[best_script] >= max(1, latin):
            return LidResult(best_script, counts[best_script] / total)

        words = [w.lower() for w in _WORD_RE.findall(text)]
        votes = {code: sum(1 for w in words if w in stops) for code, stops in _LATIN_STOPWORDS.items()}
        total_votes = sum(votes.values())
        if total_votes == 0:
            return LidResult("other:und", 0.0)
        best = max(sorted(votes), key=lambda c: votes[c])  # ties break alphabetically
        return LidResult(best, votes[best] / total_votes)


class FastTextIdentifier:
    """Adapter for a fasttext LID model file supplied by the operator."""

    def __init__(self, model_path: Path | str) -> None:
        import fasttext  # deferred: optional heavyweight dependency

        self._model = fasttext.load_model(str(model_path))

    def identify(self, text: str) -> LidResult:
        _require_text(text)
        labels, scores = self._model.predict(text.replace("\n", " "), k=1)
        code = labels[0].rsplit("__", 1)[-1]
        language = code if code in LANGUAGES else f"other:{code}"
        return LidResult(language, max(0.0, min(1.0, float(scores[0]))))
