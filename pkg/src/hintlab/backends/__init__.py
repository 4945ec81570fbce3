from .base import (
    BackendConfig,
    BackendError,
    ChatClient,
    ChatExchange,
    EmptyPrompt,
    EmptyText,
    HttpError,
    ProviderError,
    RateLimited,
    RequestTimeout,
    TokenBucket,
    TranslatorUnavailable,
    cache_key,
    prompt_hash,
)
from .cache import ResponseCache
from .http import HttpChatTransport
from .lid import FastTextIdentifier, HeuristicIdentifier, LanguageIdentifier, LidResult, ScriptedIdentifier
from .scripted import ScriptedRule, ScriptedRuleError, ScriptedTransport, ScriptedTranslator, load_rules
from .translate import ChatTranslator, IdentityTranslator, Translator

__all__ = [
    "BackendConfig",
    "BackendError",
    "ChatClient",
    "ChatExchange",
    "ChatTranslator",
    "EmptyPrompt",
    "EmptyText",
    "FastTextIdentifier",
    "HeuristicIdentifier",
    "HttpChatTransport",
    "HttpError",
    "IdentityTranslator",
    "LanguageIdentifier",
    "LidResult",
    "ProviderError",
    "RateLimited",
    "RequestTimeout",
    "ResponseCache",
    "ScriptedIdentifier",
    "ScriptedRule",
    "ScriptedRuleError",
    "ScriptedTransport",
    "ScriptedTranslator",
    "TokenBucket",
    "Translator",
    "TranslatorUnavailable",
    "cache_key",
    "load_rules",
    "prompt_hash",
]
