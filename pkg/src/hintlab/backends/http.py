"""HTTP transport speaking the common chat-completions JSON protocol."""

from __future__ import annotations

import os
import time
from typing import Optional

import requests

from .base import BackendConfig, ChatExchange, HttpError, ProviderError, RateLimited, RequestTimeout


def _auth_headers(config: BackendConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    # tokens come from the environment only, never from config files or flags
    token = os.environ.get(config.api_key_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


class HttpChatTransport:
    """POSTs a single user message to ``<endpoint>/chat/completions``."""

    def __init__(self, session: Optional[requests.Session] = None) -> None:
        self._session = session or requests.Session()

    def __call__(self, config: BackendConfig, prompt: str) -> ChatExchange:
        url = config.endpoint.rstrip("/") + "/chat/completions"
        body = {
            "model": config.model_id,
            "temperature": config.resolved_temperature(),
            "max_tokens": config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        }
        start = time.monotonic()
        try:
            resp = self._session.post(url, json=body, headers=_auth_headers(config), timeout=config.timeout)
        except requests.Timeout as err:
            raise RequestTimeout(f"{config.name}: request timed out after {config.timeout}s") from err
        except requests.RequestException as err:
            raise HttpError(f"{config.name}: {err}") from err
        latency = time.monotonic() - start

        if resp.status_code == 429:
            raise RateLimited(f"{config.name}: throttled by endpoint")
        if resp.status_code >= 400:
            raise HttpError(f"{config.name}: HTTP {resp.status_code}: {resp.text[:200]}", status=resp.status_code)

        try:
            payload = resp.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as err:
            raise ProviderError(f"{config.name}: malformed completion payload: {err}") from err
        if text is None:
            raise ProviderError(f"{config.name}: completion payload carried no text")

        usage = payload.get("usage") or {}
        return ChatExchange(
            prompt=prompt,
            response=text,
            latency=latency,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            truncated=choice.get("finish_reason") == "length",
        )
