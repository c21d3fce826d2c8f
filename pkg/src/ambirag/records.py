"""JSON-lines encoding of answer records, one record per question."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

from .diversify import DiversifiedRetrieval, StageCall
from .gateway import TemplateId
from .types import (
    AmbiguityAnalysis,
    AmbiguityType,
    DisambigPair,
    GeneratedResponse,
    Interpretation,
    Origin,
    Passage,
    PassageSet,
    QualityLabel,
    Question,
    Route,
    SetRole,
    Source,
    TokenUsage,
    Verdict,
    VerdictLabel,
)
from .verify_adapt import AnswerRecord, VerificationReport


@dataclass(frozen=True)
class ErrorRecord:
    question: Question
    error_type: str
    message: str


def _usage(u: TokenUsage) -> dict:
    return asdict(u)


def _passage(p: Passage) -> dict:
    return {"id": p.id, "title": p.title, "text": p.text, "source": p.source.value}


def _pairs(pairs) -> list[dict]:
    return [{"dq": p.dq, "da": list(p.da)} for p in pairs]


def rd_to_dict(rd: DiversifiedRetrieval) -> dict:
    return {
        "analysis": None if rd.analysis is None else {
            "types": [t.value for t in rd.analysis.types], "reason": rd.analysis.reason,
        },
        "pseudo": [i.text for i in rd.pseudo],
        "fallback": rd.fallback,
        "union_ids": rd.union_set.ids,
        "scores": {pid: rd.scores[pid] for pid in rd.union_set.ids},
        "final": [_passage(p) for p in rd.final_set],
        "warnings": list(rd.warnings),
    }


def record_to_dict(rec: AnswerRecord | ErrorRecord) -> dict:
    if isinstance(rec, ErrorRecord):
        return {
            "id": rec.question.id,
            "question": rec.question.text,
            "error": {"type": rec.error_type, "message": rec.message},
        }
    return {
        "id": rec.question.id,
        "question": rec.question.text,
        "rd": rd_to_dict(rec.rd_trace),
        "verification": {
            "verdicts": [v.label.value for v in rec.report.verdicts],
            "quality": rec.report.quality.value,
            "unparsable_count": rec.report.unparsable_count,
        },
        "route": rec.response.route.value,
        "response": rec.response.text,
        "pairs": _pairs(rec.response.pairs),
        "calls": [
            {"template": c.template.value, "ordinal": c.ordinal, **_usage(c.usage)} for c in rec.calls
        ],
        "usage": _usage(rec.usage),
    }


def dumps_record(rec: AnswerRecord | ErrorRecord) -> str:
    return json.dumps(record_to_dict(rec), ensure_ascii=False)


def record_from_dict(d: dict) -> AnswerRecord | ErrorRecord:
    question = Question(d["id"], d["question"])
    if "error" in d:
        return ErrorRecord(question, d["error"]["type"], d["error"]["message"])
    rd = d["rd"]
    pseudo = tuple(Interpretation(t, Origin.PSEUDO, i) for i, t in enumerate(rd["pseudo"]))
    final = tuple(
        Passage(p["id"], p["title"], p["text"], Source(p.get("source", "Corpus"))) for p in rd["final"]
    )
    by_id = {p.id: p for p in final}
    # union members outside the final set are stored by id only
    union = tuple(by_id.get(pid) or Passage(pid, "", "(not stored)") for pid in rd["union_ids"])
    analysis = None
    if rd.get("analysis"):
        analysis = AmbiguityAnalysis(
            tuple(AmbiguityType(t) for t in rd["analysis"]["types"]), rd["analysis"]["reason"]
        )
    calls = tuple(
        StageCall(TemplateId(c["template"]), c["ordinal"],
                  TokenUsage(**{k: c[k] for k in asdict(TokenUsage())}))
        for c in d["calls"]
    )
    trace = DiversifiedRetrieval(
        analysis=analysis,
        pseudo=pseudo,
        union_set=PassageSet(union, SetRole.UNION),
        final_set=PassageSet(final, SetRole.FINAL),
        scores=dict(rd["scores"]),
        fallback=rd.get("fallback", False),
        calls=tuple(c for c in calls if c.template in (TemplateId.AMBIGUITY, TemplateId.PSEUDO)),
        warnings=tuple(rd.get("warnings", ())),
    )
    v = d["verification"]
    report = VerificationReport(
        tuple(Verdict(i, VerdictLabel(x)) for i, x in enumerate(v["verdicts"])),
        QualityLabel(v["quality"]),
        v["unparsable_count"],
    )
    pairs = tuple(DisambigPair(p["dq"], tuple(p["da"])) for p in d["pairs"])
    gen_usage = TokenUsage()
    for c in calls:
        if c.template in (TemplateId.GENERATE, TemplateId.CLOSED_BOOK):
            gen_usage = c.usage
    response = GeneratedResponse(d["response"], Route(d["route"]), pairs, gen_usage)
    return AnswerRecord(question, trace, report, response, TokenUsage(**d["usage"]), calls)


def read_records(path: str | Path) -> list[AnswerRecord | ErrorRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(record_from_dict(json.loads(line)))
    return out


def recorded_ids(path: str | Path) -> set[str]:
    if not Path(path).exists():
        return set()
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                ids.add(json.loads(line)["id"])
            except (ValueError, KeyError):
                continue
    return ids


def trim_torn_tail(path: str | Path) -> bool:
    """Drop a trailing line without a newline (a write cut short). Returns True if trimmed."""
    path = Path(path)
    if not path.exists():
        return False
    data = path.read_bytes()
    if not data or data.endswith(b"\n"):
        return False
    cut = data.rfind(b"\n") + 1
    with open(path, "r+b") as fh:
        fh.truncate(cut)
    return True


def write_records(path: str | Path, records: Iterable[AnswerRecord | ErrorRecord], append: bool = False) -> int:
    n = 0
    with open(path, "a" if append else "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")
            fh.flush()
            n += 1
    return n
