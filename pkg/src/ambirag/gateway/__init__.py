from .backends import (
    BackendKind,
    BackendReply,
    CallKey,
    CompletionParams,
    HttpOpenAiCompatible,
    ScriptedMock,
    prompt_hash,
)
from .cache import CacheEntry, CompletionCache, cache_key
from .client import CallRecord, Gateway, Pricing, count_tokens
from .parsing import DISAMBIGUATIONS_MARKER, parse_ambiguity, parse_disambig_pairs, parse_interpretations, parse_yes_no
from .prompts import (
    TEMPLATES,
    Demo,
    PromptTemplate,
    TemplateId,
    format_context,
    format_interpretations,
    format_pairs,
    load_demo_bank,
    render_prompt,
    select_demos,
)
from .stub import StubServer

__all__ = [
    "DISAMBIGUATIONS_MARKER", "BackendKind", "BackendReply", "CacheEntry", "CallKey", "CallRecord", "CompletionCache",
    "CompletionParams", "Demo", "Gateway", "HttpOpenAiCompatible", "Pricing", "PromptTemplate",
    "ScriptedMock", "TEMPLATES", "TemplateId", "cache_key", "count_tokens", "format_context",
    "format_interpretations", "format_pairs", "load_demo_bank", "parse_ambiguity",
    "parse_disambig_pairs", "parse_interpretations", "parse_yes_no", "prompt_hash",
    "render_prompt", "select_demos", "StubServer",
]
