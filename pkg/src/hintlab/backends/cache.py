"""Disk cache for chat replies: a directory of JSONL shards keyed by request hash."""

from __future__ import annotations

import json
import os
import threading
import warnings
from pathlib import Path
from typing import Optional

from .base import ChatExchange, prompt_hash


class ResponseCache:
    """Thread-safe append-only cache.

    Entries land in ``<dir>/<key[:2]>.jsonl``. Each line stores the request
    key, the prompt's own hash, and the reply. A hit whose stored prompt hash
    does not match the live prompt is treated as corruption: warned, ignored.
    """

    def __init__(self, directory: Path | str) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._entries: dict[str, dict] = {}
        self._loaded_shards: set[str] = set()
        self._lock = threading.Lock()

    def _shard_path(self, key: str) -> Path:
        return self.directory / f"{key[:2]}.jsonl"

    def _load_shard(self, shard: str) -> None:
        if shard in self._loaded_shards:
            return
        self._loaded_shards.add(shard)
        path = self.directory / f"{shard}.jsonl"
        if not path.is_file():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    warnings.warn(f"skipping corrupt cache line in {path}", stacklevel=2)
                    continue
                self._entries[entry["key"]] = entry

    def get(self, key: str, prompt: str) -> Optional[ChatExchange]:
        with self._lock:
            self._load_shard(key[:2])
            entry = self._entries.get(key)
        if entry is None:
            return None
        if entry.get("prompt_sha256") != prompt_hash(prompt):
            warnings.warn(f"cache entry {key[:12]} has mismatched prompt hash; ignoring", stacklevel=2)
            return None
        return ChatExchange(
            prompt=prompt,
            response=entry["response"],
            latency=0.0,
            prompt_tokens=entry.get("prompt_tokens"),
            completion_tokens=entry.get("completion_tokens"),
            cache_hit=True,
            truncated=bool(entry.get("truncated", False)),
        )

    def put(self, key: str, exchange: ChatExchange) -> None:
        entry = {
            "key": key,
            "prompt_sha256": prompt_hash(exchange.prompt),
            "response": exchange.response,
            "prompt_tokens": exchange.prompt_tokens,
            "completion_tokens": exchange.completion_tokens,
            "truncated": exchange.truncated,
        }
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        with self._lock:
            self._load_shard(key[:2])
            if key in self._entries:
                return
            self._entries[key] = entry
            with open(self._shard_path(key), "a", encoding="utf-8", newline="") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
