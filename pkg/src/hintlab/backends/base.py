"""Chat-backend client core: config, errors, rate limiting, retries, caching.

A concrete backend is a transport callable wrapped by ChatClient, which owns
the retry loop, the per-backend token bucket, and the response cache. All of
that state is internally locked, so one client may serve many worker threads.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

DEFAULT_TEMPERATURES = {"student": 0.0, "teacher": 1.0, "judge": 0.0, "translator": 0.0}


class BackendError(Exception):
    """Base class for backend failures."""


class EmptyPrompt(BackendError):
    pass


class RequestTimeout(BackendError):
    pass


class RateLimited(BackendError):
    pass


class HttpError(BackendError):
    def __init__(self, message: str, status: Optional[int] = None) -> None:
        super().__init__(message)
        self.status = status

    @property
    def retryable(self) -> bool:
        # connection-level failures (no status) and server-side errors retry;
        # 4xx means the request itself is wrong and will not improve
        return self.status is None or self.status >= 500


class TranslatorUnavailable(BackendError):
    pass


class ProviderError(BackendError):
    pass


class EmptyText(BackendError):
    pass


@dataclass(frozen=True)
class BackendConfig:
    name: str
    endpoint: str  # base URL, or "scripted"
    model_id: str
    temperature: Optional[float] = None  # None: resolved from role default
    max_output_tokens: int = 1024
    timeout: float = 60.0
    max_retries: int = 3
    rate_limit: Optional[float] = None  # requests per second
    api_key_env: str = "HINTLAB_API_KEY"
    rules_path: Optional[str] = None  # scripted endpoints only
    cache_sampled: bool = True  # cache temperature > 0 replies too

    def with_role_defaults(self, role: str) -> "BackendConfig":
        if self.temperature is not None:
            return self
        if role not in DEFAULT_TEMPERATURES:
            raise ValueError(f"unknown backend role {role!r}")
        return BackendConfig(**{**self.__dict__, "temperature": DEFAULT_TEMPERATURES[role]})

    def resolved_temperature(self) -> float:
        if self.temperature is None:
            raise ValueError(f"backend {self.name!r} has no temperature bound; assign a role first")
        return self.temperature


@dataclass
class ChatExchange:
    prompt: str
    response: str
    latency: float
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    cache_hit: bool = False
    truncated: bool = False


class Transport(Protocol):
    """Single request attempt; raises BackendError subclasses on failure."""

    def __call__(self, config: BackendConfig, prompt: str) -> ChatExchange: ...


class Cache(Protocol):
    def get(self, key: str, prompt: str) -> Optional[ChatExchange]: ...

    def put(self, key: str, exchange: ChatExchange) -> None: ...


class TokenBucket:
    """Requests-per-second limiter. acquire() blocks until a token is free."""

    def __init__(
        self,
        rate: float,
        burst: Optional[float] = None,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = burst if burst is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._time = time_fn
        self._sleep = sleep_fn
        self._last = time_fn()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._time()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


def cache_key(model_id: str, temperature: float, prompt: str) -> str:
    payload = f"{model_id}\x00{temperature!r}\x00{prompt}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ChatClient:
    """complete() with caching, rate limiting, and bounded-backoff retries."""

    def __init__(
        self,
        config: BackendConfig,
        transport: Transport,
        cache: Optional[Cache] = None,
        backoff_base: float = 0.5,
        backoff_cap: float = 30.0,
        sleep_fn: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self._transport = transport
        self._cache = cache
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._sleep = sleep_fn
        self._limiter = TokenBucket(config.rate_limit) if config.rate_limit else None
        self._lock = threading.Lock()
        self.calls = 0  # transport attempts that were issued (not cache hits)

    def complete(self, prompt: str) -> ChatExchange:
        if not prompt or not prompt.strip():
            raise EmptyPrompt(f"backend {self.config.name!r} received an empty prompt")
        temperature = self.config.resolved_temperature()
        cacheable = self._cache is not None and (temperature == 0.0 or self.config.cache_sampled)
        key = cache_key(self.config.model_id, temperature, prompt)
        if cacheable:
            hit = self._cache.get(key, prompt)
            if hit is not None:
                return hit

        attempts = self.config.max_retries + 1
        last_error: Optional[BackendError] = None
        for attempt in range(attempts):
            if self._limiter is not None:
                self._limiter.acquire()
            with self._lock:
                self.calls += 1
            try:
                exchange = self._transport(self.config, prompt)
            except (RequestTimeout, RateLimited) as err:
                last_error = err
            except HttpError as err:
                if not err.retryable:
                    raise
                last_error = err
            else:
                exchange.response = exchange.response.rstrip()
                if cacheable:
                    self._cache.put(key, exchange)
                return exchange
            if attempt + 1 < attempts:
                self._sleep(min(self._backoff_cap, self._backoff_base * (2**attempt)))
        assert last_error is not None
        raise last_error
