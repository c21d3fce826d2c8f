"""Batch answering with per-question error isolation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Sequence

from .config import PipelineConfig
from .errors import AmbiragError
from .records import ErrorRecord
from .retrieval import CorpusIndex
from .types import Question
from .verify_adapt import AnswerRecord, answer

log = logging.getLogger(__name__)


def answer_or_error(q: Question, index: CorpusIndex, cfg: PipelineConfig) -> tuple[AnswerRecord | ErrorRecord, float]:
    start = time.perf_counter()
    try:
        rec = answer(q, index, cfg)
    except (AmbiragError, ValueError) as exc:
        log.warning("question %s failed: %s", q.id, exc)
        rec = ErrorRecord(q, type(exc).__name__, str(exc))
    return rec, time.perf_counter() - start


def run_batch(questions: Sequence[Question], index: CorpusIndex, cfg: PipelineConfig,
              parallelism: int = 1) -> Iterator[tuple[AnswerRecord | ErrorRecord, float]]:
    """Yield ``(record, wall_seconds)`` in input order."""
    if parallelism <= 1:
        for q in questions:
            yield answer_or_error(q, index, cfg)
        return
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        yield from pool.map(lambda q: answer_or_error(q, index, cfg), questions)
