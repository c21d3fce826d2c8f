"""Retrieval diversification: infer pseudo-interpretations, retrieve for each,
and prune the union by relevance averaged over all interpretations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .config import PipelineConfig
from .embedding import Embedder, cosine
from .gateway import (
    TEMPLATES,
    CallKey,
    CompletionParams,
    Gateway,
    TemplateId,
    parse_ambiguity,
    parse_interpretations,
    render_prompt,
    select_demos,
)
from .gateway.parsing import DISAMBIGUATIONS_MARKER
from .retrieval import CorpusIndex, retrieve
from .types import (
    AmbiguityAnalysis,
    Interpretation,
    Origin,
    PassageSet,
    Question,
    SetRole,
    TokenUsage,
    normalize_text,
    sum_usage,
)


@dataclass(frozen=True, slots=True)
class StageCall:
    template: TemplateId
    ordinal: int
    usage: TokenUsage


@dataclass(frozen=True)
class DiversifiedRetrieval:
    analysis: AmbiguityAnalysis | None
    pseudo: tuple[Interpretation, ...]
    union_set: PassageSet
    final_set: PassageSet
    scores: dict[str, float]
    fallback: bool = False
    calls: tuple[StageCall, ...] = ()
    warnings: tuple[str, ...] = ()


def stage_demos(cfg: PipelineConfig, template: TemplateId, question: Question):
    k = min(cfg.demos_k, TEMPLATES[template].demo_slots)
    return select_demos(question, cfg.demo_bank.get(template, []), k, cfg.embedder)


def analyze_ambiguity(q: Question, gateway: Gateway, params: CompletionParams, demos=(),
                      warnings: list[str] | None = None) -> tuple[AmbiguityAnalysis, TokenUsage]:
    prompt = render_prompt(TEMPLATES[TemplateId.AMBIGUITY], {"question": q.text}, demos)
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.AMBIGUITY.value))
    return parse_ambiguity(text, warnings), usage


def infer_pseudo_interpretations(q: Question, analysis: AmbiguityAnalysis, gateway: Gateway,
                                 params: CompletionParams, demos=(), max_interpretations: int = 6,
                                 warnings: list[str] | None = None) -> tuple[list[Interpretation], TokenUsage]:
    prompt = render_prompt(
        TEMPLATES[TemplateId.PSEUDO], {"question": q.text, "reason": analysis.reason}, demos
    )
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.PSEUDO.value))
    # the prompt already ends with the marker, so completions usually omit it
    if DISAMBIGUATIONS_MARKER not in text and text.strip():
        text = f"{DISAMBIGUATIONS_MARKER}\n{text}"
    seen: set[str] = set()
    out: list[Interpretation] = []
    for interp in parse_interpretations(text, warnings):
        norm = normalize_text(interp.text)
        if norm in seen:
            continue
        seen.add(norm)
        if len(out) == max_interpretations:
            break
        out.append(Interpretation(interp.text, Origin.PSEUDO, len(out)))
    return out, usage


def diversified_retrieve(index: CorpusIndex, pseudo: Sequence[Interpretation], k_per: int,
                         rerank: Embedder | None = None) -> PassageSet:
    """Union of each interpretation's top-``k_per``, in first-appearance order."""
    if not pseudo:
        raise ValueError("need at least one interpretation")
    seen: dict[str, object] = {}
    for interp in pseudo:
        for sp in retrieve(index, interp.text, k_per, rerank):
            seen.setdefault(sp.passage.id, sp.passage)
    return PassageSet(tuple(seen.values()), SetRole.UNION)


def averaged_relevance(union_set: PassageSet, pseudo: Sequence[Interpretation],
                       embedder: Embedder) -> dict[str, float]:
    qvecs = [embedder.embed(q.text) for q in pseudo]
    scores = {}
    for p in union_set:
        pvec = embedder.embed(p.content)
        scores[p.id] = sum(cosine(qv, pvec) for qv in qvecs) / len(qvecs)
    return scores


def prune(union_set: PassageSet, pseudo: Sequence[Interpretation], embedder: Embedder,
          k_final: int) -> tuple[PassageSet, dict[str, float]]:
    """Keep the ``k_final`` passages with the highest averaged cosine relevance."""
    if not pseudo:
        raise ValueError("need at least one interpretation")
    scores = averaged_relevance(union_set, pseudo, embedder)
    ranked = sorted(union_set, key=lambda p: (-scores[p.id], p.id))
    return PassageSet(tuple(ranked[:k_final]), SetRole.FINAL), scores


def run_rd(q: Question, index: CorpusIndex, cfg: PipelineConfig) -> tuple[DiversifiedRetrieval, TokenUsage]:
    stage = cfg.diversify
    warnings: list[str] = []
    analysis, u_a = analyze_ambiguity(
        q, stage.gateway, stage.params, stage_demos(cfg, TemplateId.AMBIGUITY, q), warnings
    )
    pseudo, u_p = infer_pseudo_interpretations(
        q, analysis, stage.gateway, stage.params, stage_demos(cfg, TemplateId.PSEUDO, q),
        cfg.max_interpretations, warnings,
    )
    fallback = not pseudo
    if fallback:
        warnings.append("no pseudo-interpretations parsed; retrieving with the original question")
        pseudo = [Interpretation(q.text, Origin.PSEUDO, 0)]
    rerank = cfg.embedder if cfg.rerank else None
    union_set = diversified_retrieve(index, pseudo, cfg.k_per, rerank)
    final_set, scores = prune(union_set, pseudo, cfg.embedder, cfg.k_final)
    calls = (StageCall(TemplateId.AMBIGUITY, 0, u_a), StageCall(TemplateId.PSEUDO, 0, u_p))
    result = DiversifiedRetrieval(
        analysis=analysis,
        pseudo=tuple(pseudo),
        union_set=union_set,
        final_set=final_set,
        scores=scores,
        fallback=fallback,
        calls=calls,
        warnings=tuple(warnings),
    )
    return result, sum_usage([c.usage for c in calls])


def vanilla_retrieve(q: Question, index: CorpusIndex, cfg: PipelineConfig) -> PassageSet:
    """Single-query retrieval with the original question; no model calls."""
    rerank = cfg.embedder if cfg.rerank else None
    hits = retrieve(index, q.text, cfg.k_final, rerank)
    return PassageSet(tuple(sp.passage for sp in hits), SetRole.FINAL)
