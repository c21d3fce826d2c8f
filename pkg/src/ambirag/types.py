"""Domain value types shared by every stage of the pipeline."""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class AmbiguityType(str, Enum):
    AMB_SUB = "AmbSub"
    AMB_OBJ = "AmbObj"
    AMB_PRED = "AmbPred"
    AMB_TIME = "AmbTime"
    AMB_LOC = "AmbLoc"
    NA = "NA"

    @classmethod
    def parse(cls, tag: str) -> "AmbiguityType":
        tag = tag.strip().strip("[]").strip()
        if tag.upper() in ("N/A", "NA"):
            return cls.NA
        return cls(tag)


class Origin(str, Enum):
    PSEUDO = "Pseudo"
    GOLD = "Gold"


class Source(str, Enum):
    CORPUS = "Corpus"
    EXTERNAL = "External"


class SetRole(str, Enum):
    CANDIDATES = "Candidates"
    UNION = "Union"
    FINAL = "Final"


class VerdictLabel(str, Enum):
    YES = "Yes"
    NO = "No"


class QualityLabel(str, Enum):
    USEFUL = "Useful"
    PARTIAL_USEFUL = "PartialUseful"
    USELESS = "Useless"


class CoverageLabel(str, Enum):
    FULLY_COVER = "FullyCover"
    PARTIALLY_COVER = "PartiallyCover"
    NOT_COVER = "NotCover"


class Route(str, Enum):
    RAG_GENERATION = "RagGeneration"
    CLOSED_BOOK = "ClosedBook"


@dataclass(frozen=True, slots=True)
class Question:
    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"question {self.id!r} has empty text")


@dataclass(frozen=True, slots=True)
class AmbiguityAnalysis:
    types: tuple[AmbiguityType, ...]
    reason: str

    def __post_init__(self) -> None:
        if not self.types:
            raise ValueError("ambiguity analysis needs at least one type")
        if AmbiguityType.NA in self.types and len(self.types) > 1:
            raise ValueError("NA cannot be combined with other ambiguity types")


@dataclass(frozen=True, slots=True)
class Interpretation:
    text: str
    origin: Origin = Origin.PSEUDO
    index: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("interpretation text is empty")


@dataclass(frozen=True, slots=True)
class Passage:
    id: str
    title: str
    text: str
    source: Source = Source.CORPUS

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"passage {self.id!r} has empty text")

    @property
    def content(self) -> str:
        """Title and body joined the way encoders and rerankers see them."""
        return f"{self.title} {self.text}"


@dataclass(frozen=True, slots=True)
class ScoredPassage:
    passage: Passage
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score for passage {self.passage.id!r}")


@dataclass(frozen=True, slots=True)
class PassageSet:
    passages: tuple[Passage, ...]
    role: SetRole

    def __post_init__(self) -> None:
        ids = [p.id for p in self.passages]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate passage ids in passage set")

    def __len__(self) -> int:
        return len(self.passages)

    def __iter__(self):
        return iter(self.passages)

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.passages]


@dataclass(frozen=True, slots=True)
class Verdict:
    interpretation_index: int
    label: VerdictLabel


@dataclass(frozen=True, slots=True)
class DisambigPair:
    dq: str
    da: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.da or any(not a.strip() for a in self.da):
            raise ValueError(f"disambiguation pair {self.dq!r} needs non-empty answers")


@dataclass(frozen=True, slots=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0
    llm_calls: int = 0
    wall_seconds: float = 0.0
    cost_estimate: float = 0.0

    def __post_init__(self) -> None:
        if min(self.input_tokens, self.output_tokens, self.llm_calls) < 0:
            raise ValueError("token counters must be non-negative")
        if self.wall_seconds < 0 or self.cost_estimate < 0:
            raise ValueError("wall time and cost must be non-negative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return accumulate_usage(self, other)

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens


ZERO_USAGE = TokenUsage()


@dataclass(frozen=True, slots=True)
class GeneratedResponse:
    text: str
    route: Route
    pairs: tuple[DisambigPair, ...] = ()
    usage: TokenUsage = ZERO_USAGE

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("generated response text is empty")
        if self.route is Route.CLOSED_BOOK and self.pairs:
            raise ValueError("closed-book responses carry no disambiguation pairs")


@dataclass(frozen=True, slots=True)
class EvalResult:
    rouge_l: float | None
    disambig_f1: float
    dr: float | None
    short_f1: float | None = None
    mrecall_hit: int | None = None


def accumulate_usage(a: TokenUsage, b: TokenUsage) -> TokenUsage:
    return TokenUsage(
        input_tokens=a.input_tokens + b.input_tokens,
        output_tokens=a.output_tokens + b.output_tokens,
        llm_calls=a.llm_calls + b.llm_calls,
        wall_seconds=a.wall_seconds + b.wall_seconds,
        cost_estimate=a.cost_estimate + b.cost_estimate,
    )


def sum_usage(parts: Sequence[TokenUsage]) -> TokenUsage:
    total = ZERO_USAGE
    for part in parts:
        total = accumulate_usage(total, part)
    return total


_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_text(s: str) -> str:
    """Lowercase, drop punctuation and English articles, collapse whitespace."""
    s = s.lower()
    s = _PUNCT.sub("", s)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def tokenize(s: str) -> list[str]:
    return normalize_text(s).split()


__all__ = [
    "AmbiguityAnalysis",
    "AmbiguityType",
    "CoverageLabel",
    "DisambigPair",
    "EvalResult",
    "GeneratedResponse",
    "Interpretation",
    "Origin",
    "Passage",
    "PassageSet",
    "QualityLabel",
    "Question",
    "Route",
    "ScoredPassage",
    "SetRole",
    "Source",
    "TokenUsage",
    "Verdict",
    "VerdictLabel",
    "ZERO_USAGE",
    "accumulate_usage",
    "normalize_text",
    "sum_usage",
    "tokenize",
]
