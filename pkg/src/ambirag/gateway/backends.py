"""Completion backends: a scripted mock and an OpenAI-compatible HTTP client."""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from ..errors import BackendUnavailable, FixtureMiss


class BackendKind(str, Enum):
    HTTP_OPENAI_COMPATIBLE = "HttpOpenAiCompatible"
    SCRIPTED_MOCK = "ScriptedMock"


@dataclass(frozen=True, slots=True)
class CompletionParams:
    max_tokens: int = 300
    top_p: float = 1.0
    temperature: float = 0.3
    model_name: str = "gpt-4"

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not 0.0 <= self.top_p <= 1.0:
            raise ValueError("top_p must lie in [0, 1]")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True, slots=True)
class CallKey:
    """Identifies one model call within a run: question, stage and ordinal."""

    question_id: str
    template: str
    ordinal: int = 0

    def __str__(self) -> str:
        return f"{self.question_id}/{self.template}/{self.ordinal}"


@dataclass(frozen=True, slots=True)
class BackendReply:
    text: str
    input_tokens: int | None = None
    output_tokens: int | None = None
    latency: float = 0.0


class Backend(Protocol):
    kind: BackendKind

    def complete(self, prompt: str, params: CompletionParams, key: CallKey | None) -> BackendReply: ...


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedMock:
    """Replays completions from a fixture script.

    Keys look like ``q1/Iv/0``. Lookup falls back to ``q1/Iv/*`` and then to
    ``*/Iv/*``. In strict mode the key is the SHA-256 of the rendered prompt.
    """

    kind = BackendKind.SCRIPTED_MOCK

    def __init__(self, script: Mapping[str, str], strict: bool = False):
        self.script = dict(script)
        self.strict = strict

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = False) -> "ScriptedMock":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
            raise ValueError(f"fixture script {path} must map keys to completion strings")
        return cls(data, strict=strict)

    def lookup_keys(self, prompt: str, key: CallKey | None) -> list[str]:
        if self.strict or key is None:
            return [prompt_hash(prompt)]
        return [str(key), f"{key.question_id}/{key.template}/*", f"*/{key.template}/*"]

    def complete(self, prompt: str, params: CompletionParams, key: CallKey | None) -> BackendReply:
        candidates = self.lookup_keys(prompt, key)
        for k in candidates:
            if k in self.script:
                return BackendReply(self.script[k])
        raise FixtureMiss(candidates[0])


class HttpOpenAiCompatible:
    """Chat-completions client for any server speaking the OpenAI wire shape."""

    kind = BackendKind.HTTP_OPENAI_COMPATIBLE

    def __init__(self, base_url: str, api_key_env: str = "OPENAI_API_KEY",
                 path: str = "/v1/chat/completions", timeout: float = 60.0, retries: int = 2):
        if not base_url:
            raise ValueError("HTTP backend needs an endpoint URL")
        if not api_key_env:
            raise ValueError("HTTP backend needs a credential environment variable name")
        self.url = base_url.rstrip("/") + "/" + path.lstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.retries = retries
        self._client = httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str, params: CompletionParams, key: CallKey | None) -> BackendReply:
        payload = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": params.max_tokens,
            "top_p": params.top_p,
            "temperature": params.temperature,
        }
        start = time.perf_counter()
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(self.url, json=payload, headers=self._headers())
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if resp.status_code in (429, 500, 502, 503, 504) and attempt < self.retries:
                    last_error = BackendUnavailable(f"HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise BackendUnavailable(f"{self.url} returned HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    return self._parse(resp, time.perf_counter() - start)
            time.sleep(0.5 * 2**attempt)
        raise BackendUnavailable(f"{self.url}: {last_error}")

    def _parse(self, resp: httpx.Response, latency: float) -> BackendReply:
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed chat-completion response: {exc!r}") from exc
        usage = data.get("usage") or {}
        return BackendReply(
            text=content,
            input_tokens=usage.get("prompt_tokens"),
            output_tokens=usage.get("completion_tokens"),
            latency=latency,
        )
