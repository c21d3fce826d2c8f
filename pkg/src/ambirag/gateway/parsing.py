"""Lenient parsers for the structured parts of model completions.

Parsers never raise on malformed input (except :func:`parse_yes_no`); lines
they cannot use are skipped and described in the optional ``warnings`` list.
"""

from __future__ import annotations

import re

from ..errors import UnparsableVerdict
from ..types import AmbiguityAnalysis, AmbiguityType, DisambigPair, Interpretation, Origin, VerdictLabel

DISAMBIGUATIONS_MARKER = "##Disambiguations:"

_NUMBERED = re.compile(r"^\s*(\d+)\s*[:.)]\s*(\S.*?)\s*$")
_PAIR_LINE = re.compile(r"^\s*(DQ|DA)\s*(\d+)\s*:\s*(.*?)\s*$", re.IGNORECASE)
_REASON_ANSWER = re.compile(r"##\s*Reason\s*:\s*(.*?)\s*##\s*Answer\s*:\s*(.*)", re.DOTALL | re.IGNORECASE)
_BRACKETED = re.compile(r"\[([^\]]*)\]")
_WORD = re.compile(r"[A-Za-z]+")


def _warn(warnings: list[str] | None, message: str) -> None:
    if warnings is not None:
        warnings.append(message)


def parse_interpretations(text: str, warnings: list[str] | None = None) -> list[Interpretation]:
    """Numbered ``<n>: <question>`` lines following the disambiguations marker."""
    marker = text.find(DISAMBIGUATIONS_MARKER)
    if marker < 0:
        return []
    out: list[Interpretation] = []
    for line in text[marker + len(DISAMBIGUATIONS_MARKER):].splitlines():
        if not line.strip():
            continue
        m = _NUMBERED.match(line)
        if m is None:
            _warn(warnings, f"skipped interpretation line {line.strip()!r}")
            continue
        out.append(Interpretation(text=m.group(2), origin=Origin.PSEUDO, index=len(out)))
    return out


def parse_yes_no(text: str) -> VerdictLabel:
    m = _WORD.search(text)
    word = m.group(0).lower() if m else ""
    if word == "yes":
        return VerdictLabel.YES
    if word == "no":
        return VerdictLabel.NO
    raise UnparsableVerdict(text)


def parse_disambig_pairs(text: str, warnings: list[str] | None = None) -> list[DisambigPair]:
    """``DQ n:`` / ``DA n:`` lines; answers on one DA line are split on ``;``.

    A line that matches neither is treated as a continuation of a DQ still
    waiting for its DA (long questions get wrapped). Parsing stops at a line
    starting with ``Answer:``.
    """
    questions: dict[str, str] = {}
    answers: dict[str, list[str]] = {}
    order: list[str] = []
    open_dq: str | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.lower().startswith("answer:"):
            break
        m = _PAIR_LINE.match(line)
        if m is None:
            if open_dq is not None:
                questions[open_dq] = f"{questions[open_dq]} {stripped}"
            else:
                _warn(warnings, f"skipped line {stripped!r}")
            continue
        tag, num, body = m.group(1).upper(), m.group(2), m.group(3)
        if tag == "DQ":
            if num in questions:
                _warn(warnings, f"repeated DQ {num}")
                continue
            questions[num] = body
            order.append(num)
            open_dq = num
        else:
            if num not in questions:
                _warn(warnings, f"DA {num} without a DQ")
                continue
            answers[num] = [a.strip() for a in body.split(";") if a.strip()]
            open_dq = None
    pairs = []
    for num in order:
        da = answers.get(num)
        if not da or not questions[num]:
            _warn(warnings, f"DQ {num} has no answer; dropped")
            continue
        pairs.append(DisambigPair(dq=questions[num], da=tuple(da)))
    return pairs


def parse_ambiguity(text: str, warnings: list[str] | None = None) -> AmbiguityAnalysis:
    """``##Reason: ... ##Answer: [Type, ...]``; falls back to NA with the raw text."""
    m = _REASON_ANSWER.search(text)
    if m is None:
        _warn(warnings, "no ##Reason/##Answer structure in ambiguity analysis")
        return AmbiguityAnalysis(types=(AmbiguityType.NA,), reason=text.strip())
    reason, answer = m.group(1).strip(), m.group(2)
    types: list[AmbiguityType] = []
    for group in _BRACKETED.findall(answer):
        for tag in group.split(","):
            if not tag.strip():
                continue
            try:
                t = AmbiguityType.parse(tag)
            except ValueError:
                _warn(warnings, f"unknown ambiguity tag {tag.strip()!r}")
                continue
            if t not in types:
                types.append(t)
    if len(types) > 1 and AmbiguityType.NA in types:
        types.remove(AmbiguityType.NA)
    if not types:
        _warn(warnings, "no known ambiguity type in answer")
        types = [AmbiguityType.NA]
    return AmbiguityAnalysis(types=tuple(types), reason=reason or text.strip())
