"""The single entry point every pipeline stage uses to call a model."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass

from ..errors import BudgetExceeded
from ..types import TokenUsage
from .backends import Backend, CallKey, CompletionParams
from .cache import CompletionCache, cache_key


@dataclass(frozen=True, slots=True)
class Pricing:
    """Price per 1K tokens, as (input, output)."""

    input_per_1k: float = 0.0
    output_per_1k: float = 0.0

    def cost(self, input_tokens: int, output_tokens: int) -> float:
        return input_tokens / 1000.0 * self.input_per_1k + output_tokens / 1000.0 * self.output_per_1k


@dataclass(frozen=True, slots=True)
class CallRecord:
    key: CallKey | None
    cached: bool
    usage: TokenUsage


def count_tokens(text: str) -> int:
    """Whitespace token count, used when the backend reports no usage."""
    return len(text.split())


class Gateway:
    def __init__(self, backend: Backend, cache: CompletionCache | None = None,
                 pricing: Pricing = Pricing(), call_budget: int | None = None):
        self.backend = backend
        self.cache = cache
        self.pricing = pricing
        self.call_budget = call_budget
        self._lock = threading.Lock()
        self._per_question: Counter[str] = Counter()
        self.log: list[CallRecord] = []

    def _charge(self, key: CallKey | None) -> None:
        if self.call_budget is None or key is None:
            return
        with self._lock:
            self._per_question[key.question_id] += 1
            if self._per_question[key.question_id] > self.call_budget:
                raise BudgetExceeded(
                    f"question {key.question_id!r} exceeded the budget of {self.call_budget} calls"
                )

    def reset_budget(self, question_id: str) -> None:
        with self._lock:
            self._per_question.pop(question_id, None)

    def complete(self, prompt: str, params: CompletionParams, key: CallKey | None = None,
                 use_cache: bool = True) -> tuple[str, TokenUsage]:
        if not prompt.strip():
            raise ValueError("prompt is empty")
        self._charge(key)
        ckey = cache_key(prompt, params) if (use_cache and self.cache is not None) else None
        if ckey is not None:
            hit = self.cache.get(ckey)
            if hit is not None:
                usage = TokenUsage(hit.usage.input_tokens, hit.usage.output_tokens, 0, 0.0, 0.0)
                self._record(CallRecord(key, True, usage))
                return hit.completion, usage
        reply = self.backend.complete(prompt, params, key)
        n_in = reply.input_tokens if reply.input_tokens is not None else count_tokens(prompt)
        n_out = reply.output_tokens if reply.output_tokens is not None else count_tokens(reply.text)
        usage = TokenUsage(n_in, n_out, 1, reply.latency, self.pricing.cost(n_in, n_out))
        if ckey is not None:
            self.cache.put(ckey, reply.text, usage)
        self._record(CallRecord(key, False, usage))
        return reply.text, usage

    def _record(self, rec: CallRecord) -> None:
        with self._lock:
            self.log.append(rec)

    def calls_for(self, question_id: str, template: str | None = None) -> list[CallRecord]:
        with self._lock:
            return [
                r for r in self.log
                if r.key is not None and r.key.question_id == question_id
                and (template is None or r.key.template == template)
            ]
