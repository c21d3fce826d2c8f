"""QA and retrieval metrics, coverage labels, and run-level aggregation."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence, Union

from . import kernels
from .errors import IdMismatch, NegativeInput
from .types import (
    CoverageLabel,
    DisambigPair,
    EvalResult,
    GeneratedResponse,
    Interpretation,
    Origin,
    Passage,
    Question,
    Route,
    normalize_text,
    tokenize,
)

Answer = Union[str, Sequence[str]]


@dataclass(frozen=True)
class GoldQuestion:
    question: Question
    gold_pairs: tuple[DisambigPair, ...]
    long_answer: str | None = None

    @property
    def answer_groups(self) -> list[tuple[str, ...]]:
        """One alias group per gold interpretation."""
        return [p.da for p in self.gold_pairs]

    @property
    def interpretations(self) -> list[Interpretation]:
        return [Interpretation(p.dq, Origin.GOLD, i) for i, p in enumerate(self.gold_pairs)]


def load_dataset(path: str | Path) -> list[GoldQuestion]:
    """JSON lines: ``{"id", "question", "pairs": [{"dq", "answers"}], "long_answer"?}``."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pairs = tuple(DisambigPair(p["dq"], tuple(p["answers"])) for p in rec.get("pairs", []))
                items.append(GoldQuestion(Question(str(rec["id"]), rec["question"]), pairs, rec.get("long_answer")))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad dataset record ({exc})") from exc
    ids = [g.question.id for g in items]
    if len(ids) != len(set(ids)):
        raise ValueError(f"{path}: duplicate question ids")
    return items


# ---------------------------------------------------------------- metrics


def rouge_l(hypothesis: str, reference: str) -> float:
    """LCS F-measure over normalized tokens."""
    hyp, ref = tokenize(hypothesis), tokenize(reference)
    if not hyp or not ref:
        return 0.0
    lcs = kernels.lcs_tokens(hyp, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(hyp), lcs / len(ref)
    return 2 * p * r / (p + r)


def _groups(answers: Iterable[Answer]) -> list[list[str]]:
    out = []
    for a in answers:
        aliases = [a] if isinstance(a, str) else list(a)
        out.append([n for n in (normalize_text(x) for x in aliases) if n])
    return out


def _recovered(haystack: str, answers: Iterable[Answer]) -> list[bool]:
    return [any(alias in haystack for alias in group) for group in _groups(answers)]


def disambig_f1(response: GeneratedResponse, gold_pairs: Sequence[DisambigPair]) -> float:
    """Answer-containment stand-in for extractive Disambig-F1.

    Recall is the share of gold pairs with an answer inside the response text;
    precision divides the same hits by the number of distinct questions the
    response claims (or by the hits themselves when it claims none).
    """
    if not gold_pairs:
        raise ValueError("gold_pairs must be non-empty")
    text = normalize_text(response.text)
    hits = sum(_recovered(text, [p.da for p in gold_pairs]))
    recall = hits / len(gold_pairs)
    if response.pairs:
        claimed = max(1, len({normalize_text(p.dq) for p in response.pairs}))
        precision = min(1.0, hits / claimed)
    else:
        precision = 1.0 if hits else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def dr_score(rl: float, df1: float) -> float:
    """Geometric mean of ROUGE-L and Disambig-F1 (any consistent scale)."""
    if rl < 0 or df1 < 0:
        raise NegativeInput(f"negative metric value ({rl}, {df1})")
    return math.sqrt(rl * df1)


def short_f1(predicted: Sequence[str], gold: Sequence[str]) -> float:
    pred = {n for n in map(normalize_text, predicted) if n}
    ref = {n for n in map(normalize_text, gold) if n}
    if not ref:
        raise ValueError("gold answers must be non-empty")
    common = len(pred & ref)
    if not pred or common == 0:
        return 0.0
    p, r = common / len(pred), common / len(ref)
    return 2 * p * r / (p + r)


def _haystack(passages: Iterable[Passage]) -> str:
    # normalized text has no newlines, so matches cannot straddle passages
    return "\n".join(normalize_text(p.content) for p in passages)


def mrecall_at_k(passages: Iterable[Passage], gold_answers: Sequence[Answer], k: int) -> int:
    """1 when all answers, or at least ``k`` of them, appear in the passages."""
    if not gold_answers:
        raise ValueError("gold_answers must be non-empty")
    if k < 1:
        raise ValueError("k must be at least 1")
    found = sum(_recovered(_haystack(passages), gold_answers))
    return int(found == len(gold_answers) or found >= k)


def coverage_label(passages: Iterable[Passage], gold_answers: Sequence[Answer]) -> CoverageLabel:
    if not gold_answers:
        raise ValueError("gold_answers must be non-empty")
    found = sum(_recovered(_haystack(passages), gold_answers))
    if found == len(gold_answers):
        return CoverageLabel.FULLY_COVER
    if found == 0:
        return CoverageLabel.NOT_COVER
    return CoverageLabel.PARTIALLY_COVER


def predicted_short_answers(response: GeneratedResponse, gold: GoldQuestion) -> list[str]:
    """Short answers a response commits to, mapped onto canonical gold strings.

    Closed-book responses carry no pairs, so gold answers found in their text
    are taken as predicted.
    """
    canonical = {}
    for group in gold.answer_groups:
        for alias in group:
            canonical.setdefault(normalize_text(alias), group[0])
    if response.pairs:
        raw = [a for p in response.pairs for a in p.da]
        return [canonical.get(normalize_text(a), a) for a in raw]
    text = normalize_text(response.text)
    return [g[0] for g, hit in zip(gold.answer_groups, _recovered(text, gold.answer_groups)) if hit]


def evaluate_one(response: GeneratedResponse, passages: Sequence[Passage], gold: GoldQuestion, k: int) -> EvalResult:
    rl = rouge_l(response.text, gold.long_answer) if gold.long_answer else None
    df1 = disambig_f1(response, gold.gold_pairs) if gold.gold_pairs else None
    dr = dr_score(rl, df1) if rl is not None and df1 is not None else None
    sf1 = mr = None
    if gold.gold_pairs:
        sf1 = short_f1(predicted_short_answers(response, gold), [g[0] for g in gold.answer_groups])
        mr = mrecall_at_k(passages, gold.answer_groups, k)
    return EvalResult(rouge_l=rl, disambig_f1=df1, dr=dr, short_f1=sf1, mrecall_hit=mr)


# ---------------------------------------------------------------- aggregation

METRICS = ("rouge_l", "disambig_f1", "dr", "short_f1", "mrecall_hit")


def _mean(values: Sequence[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return fmean(vals) if vals else None


def _means(rows: Sequence[dict]) -> dict:
    out = {m: _mean([r[m] for r in rows]) for m in METRICS}
    out["n"] = len(rows)
    out["dr_of_means"] = (
        dr_score(out["rouge_l"], out["disambig_f1"])
        if out["rouge_l"] is not None and out["disambig_f1"] is not None else None
    )
    out["undefined"] = sorted(k for k, v in out.items() if v is None)
    return out


def evaluate_run(records: Sequence, dataset: Sequence[GoldQuestion], k: int = 5) -> dict:
    """Score answer records against gold data.

    ``records`` may mix :class:`~ambirag.verify_adapt.AnswerRecord` and
    :class:`~ambirag.records.ErrorRecord` items.
    """
    from .records import ErrorRecord

    gold_by_id = {g.question.id: g for g in dataset}
    seen: set[str] = set()
    rows, errors = [], []
    for rec in records:
        qid = rec.question.id
        if qid not in gold_by_id:
            raise IdMismatch(f"record {qid!r} has no gold question")
        if qid in seen:
            raise IdMismatch(f"duplicate record for {qid!r}")
        seen.add(qid)
        if isinstance(rec, ErrorRecord):
            errors.append(qid)
            continue
        gold = gold_by_id[qid]
        passages = rec.rd_trace.final_set.passages
        res = evaluate_one(rec.response, passages, gold, k)
        cov = coverage_label(passages, gold.answer_groups).value if gold.gold_pairs else None
        u = rec.usage
        rows.append({
            "id": qid,
            "route": rec.response.route.value,
            "quality": rec.report.quality.value,
            "coverage": cov,
            **asdict(res),
            "input_tokens": u.input_tokens,
            "output_tokens": u.output_tokens,
            "llm_calls": u.llm_calls,
            "wall_seconds": u.wall_seconds,
            "cost_estimate": u.cost_estimate,
        })

    def usage_means(subset):
        keys = ("input_tokens", "output_tokens", "llm_calls", "wall_seconds", "cost_estimate")
        return {key: (fmean(r[key] for r in subset) if subset else None) for key in keys}

    by_route = {r.value: [row for row in rows if row["route"] == r.value] for r in Route}
    by_cov = {c.value: [row for row in rows if row["coverage"] == c.value] for c in CoverageLabel}
    coverage_counts = Counter(row["coverage"] for row in rows if row["coverage"])
    n_cov = sum(coverage_counts.values())
    return {
        "k": k,
        "n_records": len(records),
        "n_scored": len(rows),
        "n_errors": len(errors),
        "error_ids": errors,
        "n_missing": len(set(gold_by_id) - seen),
        "means": _means(rows),
        "usage": usage_means(rows),
        "coverage": {
            c.value: {"count": coverage_counts.get(c.value, 0),
                      "share": (coverage_counts.get(c.value, 0) / n_cov) if n_cov else None}
            for c in CoverageLabel
        },
        "by_route": {name: {"metrics": _means(sub), "usage": usage_means(sub)} for name, sub in by_route.items()},
        "by_coverage": {name: _means(sub) for name, sub in by_cov.items()},
        "per_question": rows,
    }


def _pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.1f}"


def _secs(x: float | None) -> str:
    return "-" if x is None else f"{x:.2f}"


def render_table(report: dict) -> str:
    """Aligned plain-text table: R-L, D-F1, DR, MRecall and time per query."""
    header = ("Subset", "N", "R-L", "D-F1", "DR", f"MRecall@{report['k']}", "Time")
    rows = [header]

    def add(name, metrics, usage):
        rows.append((name, str(metrics["n"]), _pct(metrics["rouge_l"]), _pct(metrics["disambig_f1"]),
                     _pct(metrics["dr_of_means"]), _pct(metrics["mrecall_hit"]), _secs(usage["wall_seconds"])))

    add("all", report["means"], report["usage"])
    for name, block in report["by_route"].items():
        add(name, block["metrics"], block["usage"])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)
