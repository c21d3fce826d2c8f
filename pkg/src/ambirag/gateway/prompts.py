"""Prompt templates for the six pipeline stages and few-shot demo selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ..embedding import Embedder, HashedBagOfWords, cosine
from ..errors import MissingSlot
from ..types import DisambigPair, Passage, Question


class TemplateId(str, Enum):
    AMBIGUITY = "Ia"
    PSEUDO = "Ip"
    VERIFY = "Iv"
    EXTRACT = "Ie"
    GENERATE = "Ig"
    CLOSED_BOOK = "Il"


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    """An instruction, up to ``demo_slots`` demos, then the actual-question block.

    ``render_rules`` is an ordered list of ``(slot, fragment)``. A ``None`` slot
    emits the fragment verbatim; otherwise ``{}`` in the fragment is replaced by
    the slot value. Slots ending in ``?`` are optional and their fragment is
    dropped when the value is missing or empty.
    """

    id: TemplateId
    instruction: str
    demo_slots: int
    render_rules: tuple[tuple[str | None, str], ...]

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError(f"template {self.id} has an empty instruction")

    @property
    def required_slots(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.render_rules if s and not s.endswith("?"))


@dataclass(frozen=True, slots=True)
class Demo:
    question: str
    exemplar_text: str
    embedding_key: str = ""

    def __post_init__(self) -> None:
        if not self.exemplar_text.strip():
            raise ValueError("demo exemplar text is empty")

    @property
    def key_text(self) -> str:
        return self.embedding_key or self.question


AMBIGUITY_HEADER = (
    "Given the ambiguous question that can be interpreted in multiple ways, which types of "
    "ambiguity are related to the question? Suggest the types and provide reasons for your "
    "suggestions. Please use the format of: ##Reason: {reason} ##Answer: {answer}."
)

_AMBIGUITY_INSTRUCTION = """\
Your task is to determine which types of ambiguity are related to a given question. Types of ambiguity in a question can be defined as follows:

1. [AmbSub]: This type of ambiguity arises when the subject of the question is not clear. The subject is the person, place, thing, or idea that is doing or being something. It's the entity about which information is being sought.
2. [AmbObj]: This type of ambiguity arises when the object of the question is unclear. The object refers to the entity that the action or state expressed by the verb is directed towards.
3. [AmbPred]: This type of ambiguity arises when the predicate of the question is unclear. The predicate is the part of a sentence that tells us what the subject does or is. It includes the verb and everything else that comes after the subject.
4. [AmbTime]: This type of ambiguity arises when the time frame of the question is unclear. This can lead to confusion because many actions or states can change over time.
5. [AmbLoc]: This type of ambiguity arises when the location referred to in the question is unclear. Many events or entities can exist in different locations, leading to confusion.
6. [N/A]: This type of ambiguity arises when there is no ambiguous point in the given question.

Below are some examples that map the question to the types.

Question: Who has scored the most goals in international soccer
Types: [AmbSub]. The subject "Who" may refer to either men or women.

Question: What is the date of the queen's birthday?
Types: [AmbObj]. The object "the date of the queen's birthday" may refer to the date of Queen Elizabeth II's birthday or Queen Victoria's birthday.

Question: Who appeared in the Wimbledon finals 2017?
Types: [AmbPred]. The predicate "appeared" could refer to the tennis players or celebrities in the audience.

Question: Where is the u21 euro championships being held?
Types: [AmbTime]. You may need to clarify whether it refers to the championships being held in 2015, 2017, or 2019.

Question: When is the new iPhone being released?
Types: [AmbLoc]. This may need clarification on whether it refers to the release date in the United States, Europe, Asia, or another region."""

_PSEUDO_INSTRUCTION = (
    "I will provide an ambiguous question that can have multiple answers based on different "
    "possible interpretations. Additionally, I will provide corresponding reasons why the question "
    "is ambiguous. Clarify the given question into several disambiguated questions based on the "
    "reasons for its ambiguity. Please use the format of: ##Disambiguations: {disambiguations}:"
)

_VERIFY_INSTRUCTION = (
    "Given the question and its relevant passages, determine whether the passage contains the "
    "answer to the question. Please answer with Yes or No."
)

_LONG_FORM_INSTRUCTION = (
    "I will provide ambiguous questions that can have multiple answers based on their different "
    "possible interpretations. Clarify the given question into disambiguated questions as many as "
    "possible and provide short factoid answers to each question. Subsequently, summarize them into "
    "a detailed long-form answer of at least three sentences. Here are some examples."
)

_CLOSED_BOOK_INSTRUCTION = (
    "I will provide ambiguous questions that have multiple answers regarding different aspects of "
    "the question. Your task is to generate an answer that includes as many aspects as possible "
    "from the ambiguous questions."
)

TEMPLATES: dict[TemplateId, PromptTemplate] = {
    TemplateId.AMBIGUITY: PromptTemplate(
        TemplateId.AMBIGUITY, _AMBIGUITY_INSTRUCTION, 5,
        ((None, AMBIGUITY_HEADER + "\n\n"), ("question", "question: {}\n")),
    ),
    TemplateId.PSEUDO: PromptTemplate(
        TemplateId.PSEUDO, _PSEUDO_INSTRUCTION, 5,
        (("question", "##Question: {}\n\n"), ("reason", "##Reason: {}\n\n"), (None, "##Disambiguations:\n")),
    ),
    TemplateId.VERIFY: PromptTemplate(
        TemplateId.VERIFY, _VERIFY_INSTRUCTION, 0,
        (("question", "Question: {}\n\n"), ("passages", "Passage:\n{}\n\n"), (None, "Response:\n")),
    ),
    TemplateId.EXTRACT: PromptTemplate(
        TemplateId.EXTRACT, _LONG_FORM_INSTRUCTION, 5,
        (("passages", "Context:\n{}\n\n"), ("question", "Question: {}\n\n"), (None, "Disambiguations:\n")),
    ),
    TemplateId.GENERATE: PromptTemplate(
        TemplateId.GENERATE, _LONG_FORM_INSTRUCTION, 5,
        (
            ("passages", "Context:\n{}\n\n"),
            ("question", "Question: {}\n\n"),
            ("pairs?", "Disambiguations:\n{}\n\n"),
            (None, "Answer:\n"),
        ),
    ),
    TemplateId.CLOSED_BOOK: PromptTemplate(
        TemplateId.CLOSED_BOOK, _CLOSED_BOOK_INSTRUCTION, 5,
        (
            ("question", "Question: {}\n\n"),
            (None, "Given the question, generate a comprehensive long-form answer.\n\nFinal Answer:\n"),
        ),
    ),
}


def render_prompt(template: PromptTemplate, slots: Mapping[str, str], demos: Sequence[Demo] = ()) -> str:
    for name in template.required_slots:
        if name not in slots:
            raise MissingSlot(name)
    blocks = [template.instruction.rstrip("\n")]
    blocks.extend(d.exemplar_text.strip("\n") for d in list(demos)[: template.demo_slots])
    actual = []
    for slot, fragment in template.render_rules:
        if slot is None:
            actual.append(fragment)
            continue
        value = slots.get(slot.rstrip("?"))
        if slot.endswith("?") and not value:
            continue
        actual.append(fragment.replace("{}", str(value), 1))
    blocks.append("".join(actual))
    return "\n\n".join(blocks)


def format_context(passages: Sequence[Passage]) -> str:
    """Numbered context lines, ``[n] title | text``."""
    return "\n".join(f"[{n}] {p.title} | {p.text}" for n, p in enumerate(passages, start=1))


def format_pairs(pairs: Sequence[DisambigPair]) -> str:
    lines = []
    for n, pair in enumerate(pairs, start=1):
        lines.append(f"DQ {n}: {pair.dq}")
        lines.append(f"DA {n}: {'; '.join(pair.da)}")
    return "\n".join(lines)


def format_interpretations(questions: Sequence[str]) -> str:
    """Inverse of :func:`~ambirag.gateway.parsing.parse_interpretations`."""
    return "##Disambiguations:\n" + "\n".join(f"{n}: {q}" for n, q in enumerate(questions, start=1))


def select_demos(question: Question | str, bank: Sequence[Demo], k: int,
                 embedder: Embedder | None = None) -> list[Demo]:
    """Nearest-neighbour few-shot selection; ties keep bank order."""
    if k <= 0 or not bank:
        return []
    embedder = embedder or _DEFAULT_EMBEDDER
    text = question.text if isinstance(question, Question) else question
    qvec = embedder.embed(text)
    scored = [(cosine(qvec, embedder.embed(d.key_text)), i) for i, d in enumerate(bank)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [bank[i] for _, i in scored[:k]]


_DEFAULT_EMBEDDER = HashedBagOfWords()


def load_demo_bank(path: str | Path | None = None) -> dict[TemplateId, list[Demo]]:
    """Read a JSON-lines demo bank; the packaged bank when ``path`` is None."""
    if path is None:
        text = resources.files("ambirag").joinpath("data/demos.jsonl").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    bank: dict[TemplateId, list[Demo]] = {t: [] for t in TemplateId}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        bank[TemplateId(rec["template"])].append(
            Demo(question=rec["question"], exemplar_text=rec["exemplar_text"],
                 embedding_key=rec.get("embedding_key", ""))
        )
    return bank
