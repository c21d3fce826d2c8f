"""Hot loops, backed by the compiled extension when it is importable.

Set ``AMBIRAG_PURE_PYTHON=1`` to force the pure-Python implementations.
"""

from __future__ import annotations

import os
from array import array
from typing import Sequence

from . import _pykernels

if os.environ.get("AMBIRAG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def _intern(a: Sequence[str], b: Sequence[str]) -> tuple[array, array]:
    vocab: dict[str, int] = {}
    ia = array("q", (vocab.setdefault(t, len(vocab)) for t in a))
    ib = array("q", (vocab.setdefault(t, len(vocab)) for t in b))
    return ia, ib


def lcs_tokens(a: Sequence[str], b: Sequence[str], impl=None) -> int:
    """Length of the longest common subsequence of two token sequences."""
    impl = impl or _impl
    ia, ib = _intern(a, b)
    return int(impl.lcs_length(ia, ib))


def bm25_accumulate(scores: array, docs: array, tfs: array, doc_len: array,
                    idf: float, k1: float, b: float, avgdl: float, impl=None) -> None:
    """Add one query term's BM25 contribution to ``scores`` in place."""
    (impl or _impl).bm25_accumulate(scores, docs, tfs, doc_len, idf, k1, b, avgdl)
