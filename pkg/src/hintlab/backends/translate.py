"""Translator interface plus a chat-model-backed implementation."""

from __future__ import annotations

from typing import Protocol

from ..corpus import ENGLISH_NAMES
from .base import ChatClient, ProviderError


class Translator(Protocol):
    def translate(self, text: str, source: str, target: str) -> str: ...


_TRANSLATE_INSTRUCTION = (
    "Translate the following text from {source} to {target}. "
    "Preserve any {{placeholder}} tokens exactly as written. "
    "Output only the translation, nothing else.\n\n{text}"
)


class ChatTranslator:
    """Routes translation requests through a chat backend."""

    def __init__(self, client: ChatClient) -> None:
        self._client = client

    def translate(self, text: str, source: str, target: str) -> str:
        if source == target:
            return text
        try:
            source_name = ENGLISH_NAMES[source]
            target_name = ENGLISH_NAMES[target]
        except KeyError as err:
            raise ProviderError(f"translator has no language named {err.args[0]!r}") from None
        prompt = _TRANSLATE_INSTRUCTION.format(source=source_name, target=target_name, text=text)
        return self._client.complete(prompt).response


class IdentityTranslator:
    """Returns input unchanged; handy for English-only pipelines and tests."""

    def translate(self, text: str, source: str, target: str) -> str:
        return text
