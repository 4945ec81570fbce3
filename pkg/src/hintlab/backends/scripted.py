"""Deterministic scripted stand-ins for chat models and the translator.

Scripted rules make the whole pipeline reproducible offline: a rules file is
an ordered JSON list of matcher/reply pairs, checked top to bottom, and must
end with a fallback rule so no prompt is ever unanswered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .base import BackendConfig, ChatExchange, ProviderError, prompt_hash


class ScriptedRuleError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptedRule:
    reply: str
    contains: Optional[str] = None
    contains_all: Optional[tuple[str, ...]] = None
    prompt_sha256: Optional[str] = None
    fallback: bool = False

    def __post_init__(self) -> None:
        forms = [
            self.contains is not None,
            self.contains_all is not None,
            self.prompt_sha256 is not None,
            self.fallback,
        ]
        if sum(forms) != 1:
            raise ScriptedRuleError("rule needs exactly one of: contains, contains_all, prompt_sha256, fallback")

    def matches(self, prompt: str) -> bool:
        if self.fallback:
            return True
        if self.contains is not None:
            return self.contains in prompt
        if self.contains_all is not None:
            return all(part in prompt for part in self.contains_all)
        return self.prompt_sha256 == prompt_hash(prompt)

    @staticmethod
    def from_dict(raw: dict) -> "ScriptedRule":
        contains_all = raw.get("contains_all")
        return ScriptedRule(
            reply=raw["reply"],
            contains=raw.get("contains"),
            contains_all=tuple(contains_all) if contains_all is not None else None,
            prompt_sha256=raw.get("prompt_sha256"),
            fallback=bool(raw.get("fallback", False)),
        )


def load_rules(path: Path | str) -> list[ScriptedRule]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ScriptedRuleError(f"{path}: rules file must hold a JSON list")
    rules = [ScriptedRule.from_dict(entry) for entry in raw]
    validate_rules(rules, origin=str(path))
    return rules


def validate_rules(rules: Iterable[ScriptedRule], origin: str = "rules") -> None:
    rules = list(rules)
    if not rules or not rules[-1].fallback:
        raise ScriptedRuleError(f"{origin}: last rule must be a fallback")
    for i, rule in enumerate(rules[:-1]):
        if rule.fallback:
            raise ScriptedRuleError(f"{origin}: fallback rule at position {i} shadows later rules")


class ScriptedTransport:
    """Transport that answers from an ordered rule list; first match wins."""

    def __init__(self, rules: list[ScriptedRule]) -> None:
        validate_rules(rules)
        self.rules = rules

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedTransport":
        return cls(load_rules(path))

    def __call__(self, config: BackendConfig, prompt: str) -> ChatExchange:
        for rule in self.rules:
            if rule.matches(prompt):
                return ChatExchange(prompt=prompt, response=rule.reply, latency=0.0)
        raise AssertionError("unreachable: rule lists always end with a fallback")


class ScriptedTranslator:
    """Translator backed by an exact (source, target, text) pair table."""

    def __init__(self, pairs: Iterable[dict]) -> None:
        self._table: dict[tuple[str, str, str], str] = {}
        for pair in pairs:
            key = (pair["source"], pair["target"], pair["text"])
            self._table[key] = pair["translation"]
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedTranslator":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, list):
            raise ScriptedRuleError(f"{path}: translator pairs file must hold a JSON list")
        return cls(raw)

    def translate(self, text: str, source: str, target: str) -> str:
        if source == target:
            return text
        self.calls += 1
        try:
            return self._table[(source, target, text)]
        except KeyError:
            raise ProviderError(f"scripted translator has no pair for {source}->{target} text {text[:60]!r}") from None
