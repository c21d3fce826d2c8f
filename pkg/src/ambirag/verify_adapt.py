"""Retrieval verification, quality aggregation, routing and answer generation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .config import PipelineConfig, VerifyMode
from .diversify import DiversifiedRetrieval, StageCall, run_rd, stage_demos
from .errors import EmptyVerdicts, UnparsableVerdict
from .gateway import (
    TEMPLATES,
    CallKey,
    CompletionParams,
    Gateway,
    TemplateId,
    format_context,
    format_pairs,
    parse_disambig_pairs,
    parse_yes_no,
    render_prompt,
)
from .retrieval import CorpusIndex
from .types import (
    DisambigPair,
    GeneratedResponse,
    Interpretation,
    PassageSet,
    QualityLabel,
    Question,
    Route,
    TokenUsage,
    Verdict,
    VerdictLabel,
    sum_usage,
)


@dataclass(frozen=True)
class VerificationReport:
    verdicts: tuple[Verdict, ...]
    quality: QualityLabel
    unparsable_count: int = 0


@dataclass(frozen=True)
class AnswerRecord:
    question: Question
    rd_trace: DiversifiedRetrieval
    report: VerificationReport
    response: GeneratedResponse
    usage: TokenUsage
    calls: tuple[StageCall, ...]


def verify_one(q: Question, interp: Interpretation, passages: PassageSet, gateway: Gateway,
               params: CompletionParams) -> tuple[VerdictLabel, TokenUsage]:
    """Ask whether ``passages`` answer one interpretation. May raise UnparsableVerdict.

    The usage of the call is attached to an UnparsableVerdict as ``usage``.
    """
    if not len(passages):
        raise ValueError("cannot verify an empty passage set")
    prompt = render_prompt(
        TEMPLATES[TemplateId.VERIFY],
        {"question": interp.text, "passages": format_context(passages.passages)},
    )
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.VERIFY.value, interp.index))
    try:
        return parse_yes_no(text), usage
    except UnparsableVerdict as exc:
        exc.usage = usage
        raise


def aggregate_quality(verdicts: Sequence[Verdict]) -> QualityLabel:
    if not verdicts:
        raise EmptyVerdicts("no verdicts to aggregate")
    yes = sum(v.label is VerdictLabel.YES for v in verdicts)
    if yes == len(verdicts):
        return QualityLabel.USEFUL
    if yes == 0:
        return QualityLabel.USELESS
    return QualityLabel.PARTIAL_USEFUL


def route(quality: QualityLabel) -> Route:
    return Route.CLOSED_BOOK if quality is QualityLabel.USELESS else Route.RAG_GENERATION


def verify_all(q: Question, pseudo: Sequence[Interpretation], passages: PassageSet, gateway: Gateway,
               params: CompletionParams, workers: int = 1) -> tuple[VerificationReport, list[StageCall]]:
    """One verification per interpretation; unreadable verdicts count as No."""
    if not pseudo:
        raise ValueError("need at least one interpretation")

    def run(interp: Interpretation):
        try:
            label, usage = verify_one(q, interp, passages, gateway, params)
            return label, usage, False
        except UnparsableVerdict as exc:
            return VerdictLabel.NO, exc.usage, True

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, pseudo))
    else:
        results = [run(i) for i in pseudo]
    verdicts = tuple(Verdict(i.index, label) for i, (label, _, _) in zip(pseudo, results))
    calls = [StageCall(TemplateId.VERIFY, i.index, usage) for i, (_, usage, _) in zip(pseudo, results)]
    report = VerificationReport(verdicts, aggregate_quality(verdicts), sum(bad for _, _, bad in results))
    return report, calls


def verify_whole_set(q: Question, passages: PassageSet, gateway: Gateway,
                     params: CompletionParams) -> tuple[VerificationReport, list[StageCall]]:
    """Single yes/no check of the passage set against the original question."""
    interp = Interpretation(q.text, index=0)
    try:
        label, usage = verify_one(q, interp, passages, gateway, params)
        bad = 0
    except UnparsableVerdict as exc:
        label, usage, bad = VerdictLabel.NO, exc.usage, 1
    verdicts = (Verdict(0, label),)
    return VerificationReport(verdicts, aggregate_quality(verdicts), bad), [StageCall(TemplateId.VERIFY, 0, usage)]


def extract_pairs(q: Question, passages: PassageSet, gateway: Gateway, params: CompletionParams,
                  demos=(), warnings: list[str] | None = None) -> tuple[list[DisambigPair], TokenUsage]:
    if not len(passages):
        raise ValueError("cannot extract from an empty passage set")
    prompt = render_prompt(
        TEMPLATES[TemplateId.EXTRACT],
        {"question": q.text, "passages": format_context(passages.passages)},
        demos,
    )
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.EXTRACT.value))
    return parse_disambig_pairs(text, warnings), usage


def generate_rag(q: Question, passages: PassageSet, pairs: Sequence[DisambigPair], gateway: Gateway,
                 params: CompletionParams, demos=()) -> tuple[GeneratedResponse, TokenUsage]:
    prompt = render_prompt(
        TEMPLATES[TemplateId.GENERATE],
        {"question": q.text, "passages": format_context(passages.passages), "pairs": format_pairs(pairs)},
        demos,
    )
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.GENERATE.value))
    return GeneratedResponse(text.strip(), Route.RAG_GENERATION, tuple(pairs), usage), usage


def generate_closed_book(q: Question, gateway: Gateway, params: CompletionParams,
                         demos=()) -> tuple[GeneratedResponse, TokenUsage]:
    prompt = render_prompt(TEMPLATES[TemplateId.CLOSED_BOOK], {"question": q.text}, demos)
    text, usage = gateway.complete(prompt, params, CallKey(q.id, TemplateId.CLOSED_BOOK.value))
    return GeneratedResponse(text.strip(), Route.CLOSED_BOOK, (), usage), usage


def answer(q: Question, index: CorpusIndex, cfg: PipelineConfig) -> AnswerRecord:
    """Diversify, verify, then generate along the route the verification picks."""
    for gw in cfg.gateways:
        gw.reset_budget(q.id)
    rd, _ = run_rd(q, index, cfg)
    calls = list(rd.calls)
    passages = rd.final_set
    if not len(passages):
        # nothing retrieved at all: nothing to verify, treat as useless evidence
        report = VerificationReport(
            tuple(Verdict(i.index, VerdictLabel.NO) for i in rd.pseudo),
            QualityLabel.USELESS,
        )
    elif cfg.verify_mode is VerifyMode.WHOLE_SET:
        report, vcalls = verify_whole_set(q, passages, cfg.verify.gateway, cfg.verify.params)
        calls.extend(vcalls)
    else:
        report, vcalls = verify_all(q, rd.pseudo, passages, cfg.verify.gateway, cfg.verify.params,
                                    cfg.verify_workers)
        calls.extend(vcalls)

    chosen = cfg.force_route or route(report.quality)
    if chosen is Route.RAG_GENERATION and not len(passages):
        chosen = Route.CLOSED_BOOK
    gen = cfg.generate
    if chosen is Route.RAG_GENERATION:
        pairs, u_e = extract_pairs(q, passages, gen.gateway, gen.params,
                                   stage_demos(cfg, TemplateId.EXTRACT, q))
        calls.append(StageCall(TemplateId.EXTRACT, 0, u_e))
        response, u_g = generate_rag(q, passages, pairs, gen.gateway, gen.params,
                                     stage_demos(cfg, TemplateId.GENERATE, q))
        calls.append(StageCall(TemplateId.GENERATE, 0, u_g))
    else:
        response, u_l = generate_closed_book(q, gen.gateway, gen.params,
                                             stage_demos(cfg, TemplateId.CLOSED_BOOK, q))
        calls.append(StageCall(TemplateId.CLOSED_BOOK, 0, u_l))
    total = sum_usage([c.usage for c in calls])
    return AnswerRecord(q, rd, report, response, total, tuple(calls))
