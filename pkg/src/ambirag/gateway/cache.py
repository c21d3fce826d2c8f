"""Content-addressed completion cache stored as one JSON record per line."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ..types import TokenUsage
from .backends import CompletionParams

CACHE_FILE = "completions.jsonl"


def cache_key(prompt: str, params: CompletionParams) -> str:
    blob = json.dumps({"prompt": prompt, "params": asdict(params)}, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True, slots=True)
class CacheEntry:
    key: str
    completion: str
    usage: TokenUsage
    created_at: float


class CompletionCache:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / CACHE_FILE
        self._lock = threading.Lock()
        self._entries: dict[str, CacheEntry] = {}
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                    entry = CacheEntry(rec["key"], rec["completion"], TokenUsage(**rec["usage"]), rec["created_at"])
                except (ValueError, KeyError, TypeError):
                    continue  # torn trailing line from an interrupted write
                self._entries[entry.key] = entry

    def get(self, key: str) -> CacheEntry | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, completion: str, usage: TokenUsage) -> CacheEntry:
        entry = CacheEntry(key, completion, usage, time.time())
        line = json.dumps(
            {"key": key, "completion": completion, "usage": asdict(usage), "created_at": entry.created_at},
            ensure_ascii=False,
        ) + "\n"
        with self._lock:
            fd = os.open(self.path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
            try:
                os.write(fd, line.encode("utf-8"))
            finally:
                os.close(fd)
            self._entries[key] = entry
        return entry

    def __len__(self) -> int:
        return len(self._entries)

    def stats(self) -> dict[str, int]:
        with self._lock:
            tokens = sum(e.usage.total_tokens for e in self._entries.values())
            return {"entries": len(self._entries), "total_tokens": tokens}

    def clear(self) -> None:
        with self._lock:
            if self.path.exists():
                doomed = self.path.with_suffix(".clearing")
                os.replace(self.path, doomed)
                doomed.unlink()
            self._entries.clear()
