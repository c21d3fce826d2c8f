"""Corpus ingestion, BM25 inverted index and embedding rerank."""

from __future__ import annotations

import hashlib
import json
import math
from array import array
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import kernels
from .embedding import Embedder, cosine
from .errors import CorpusFormatError, DuplicatePassageId, UnknownPassage
from .types import Passage, ScoredPassage, tokenize

K1 = 1.2
B = 0.75


@dataclass
class _Postings:
    docs: array = field(default_factory=lambda: array("q"))
    tfs: array = field(default_factory=lambda: array("q"))


class CorpusIndex:
    """Immutable inverted index over a passage collection."""

    def __init__(self, passages: Iterable[Passage]):
        self._passages: list[Passage] = []
        self._pos: dict[str, int] = {}
        self._postings: dict[str, _Postings] = {}
        lengths = array("d")
        for passage in passages:
            if passage.id in self._pos:
                raise DuplicatePassageId(passage.id)
            idx = len(self._passages)
            self._pos[passage.id] = idx
            self._passages.append(passage)
            tokens = tokenize(passage.content)
            lengths.append(float(len(tokens)))
            for term, tf in Counter(tokens).items():
                post = self._postings.setdefault(term, _Postings())
                post.docs.append(idx)
                post.tfs.append(tf)
        self._lengths = lengths
        n = len(self._passages)
        self.avg_doc_length = (sum(lengths) / n) if n else 0.0
        digest = hashlib.sha256()
        for p in self._passages:
            digest.update(json.dumps([p.id, p.title, p.text]).encode("utf-8"))
        self.content_hash = digest.hexdigest()

    @property
    def doc_count(self) -> int:
        return len(self._passages)

    @property
    def store(self) -> dict[str, Passage]:
        return {p.id: p for p in self._passages}

    @property
    def doc_lengths(self) -> dict[str, int]:
        return {p.id: int(n) for p, n in zip(self._passages, self._lengths)}

    @property
    def postings(self) -> dict[str, list[tuple[str, int]]]:
        return {
            term: [(self._passages[d].id, tf) for d, tf in zip(post.docs, post.tfs)]
            for term, post in self._postings.items()
        }

    def passage(self, pid: str) -> Passage:
        try:
            return self._passages[self._pos[pid]]
        except KeyError:
            raise UnknownPassage(pid) from None

    def __iter__(self):
        return iter(self._passages)

    def idf(self, term: str) -> float:
        post = self._postings.get(term)
        df = len(post.docs) if post else 0
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def bm25_scores(self, query: str) -> array:
        """BM25 score of every passage, in ingestion order."""
        scores = array("d", bytes(8 * self.doc_count))
        if not self.doc_count or self.avg_doc_length <= 0:
            return scores
        for term in tokenize(query):
            post = self._postings.get(term)
            if post is None:
                continue
            kernels.bm25_accumulate(
                scores, post.docs, post.tfs, self._lengths,
                self.idf(term), K1, B, self.avg_doc_length,
            )
        return scores


def read_corpus(path: str | Path) -> list[Passage]:
    """Parse a JSON-lines corpus of ``{"id", "title", "text"}`` records."""
    passages = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_no, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise CorpusFormatError(line_no, "record is not an object")
            pid, text = rec.get("id"), rec.get("text")
            if not isinstance(pid, str) or not pid:
                raise CorpusFormatError(line_no, "missing string field 'id'")
            if not isinstance(text, str) or not text.strip():
                raise CorpusFormatError(line_no, "missing non-empty field 'text'")
            passages.append(Passage(id=pid, title=str(rec.get("title") or ""), text=text))
    return passages


def ingest_corpus(path: str | Path) -> CorpusIndex:
    return CorpusIndex(read_corpus(path))


def save_index(index: CorpusIndex, path: str | Path) -> None:
    payload = {
        "content_hash": index.content_hash,
        "passages": [{"id": p.id, "title": p.title, "text": p.text} for p in index],
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    tmp.replace(path)


def load_index(path: str | Path) -> CorpusIndex:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    index = CorpusIndex(Passage(**rec) for rec in payload["passages"])
    if index.content_hash != payload.get("content_hash"):
        raise CorpusFormatError(0, f"index file {path} is corrupt (content hash mismatch)")
    return index


def bm25_score(index: CorpusIndex, query: str, pid: str) -> float:
    index.passage(pid)
    return index.bm25_scores(query)[index._pos[pid]]


def _rank_key(sp: ScoredPassage):
    return (-sp.score, sp.passage.id)


def retrieve(index: CorpusIndex, query: str, k: int, rerank: Embedder | None = None) -> list[ScoredPassage]:
    """Top-``k`` passages by BM25, optionally reranked by embedding cosine.

    Reranking rescores a BM25 shortlist of ``max(4k, 20)`` passages. Passages
    sharing no term with the query are never returned.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return []
    scores = index.bm25_scores(query)
    hits = sorted(
        (ScoredPassage(p, s) for p, s in zip(index, scores) if s > 0.0),
        key=_rank_key,
    )
    if rerank is None:
        return hits[:k]
    shortlist = hits[: max(4 * k, 20)]
    qvec = rerank.embed(query)
    rescored = [ScoredPassage(sp.passage, cosine(qvec, rerank.embed(sp.passage.content))) for sp in shortlist]
    rescored.sort(key=_rank_key)
    return rescored[:k]
