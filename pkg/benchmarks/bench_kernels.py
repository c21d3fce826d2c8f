"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import timeit
from array import array

from ambirag import _pykernels, kernels

try:
    from ambirag import _ckernels
except ImportError:
    _ckernels = None

VOCAB = [f"w{i}" for i in range(400)]


def lcs_case(rng: random.Random, n: int):
    return rng.choices(VOCAB, k=n), rng.choices(VOCAB, k=n)


def bm25_case(rng: random.Random, n_docs: int):
    docs = array("q", sorted(rng.sample(range(n_docs), n_docs // 3)))
    tfs = array("q", (rng.randint(1, 6) for _ in docs))
    doc_len = array("d", (float(rng.randint(20, 200)) for _ in range(n_docs)))
    avgdl = sum(doc_len) / n_docs
    return docs, tfs, doc_len, avgdl


def bench(label: str, fn, repeat: int) -> float:
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8} {best * 1e3:9.3f} ms")
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = random.Random(0)
    impls = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled kernels not built; timing the fallback only")

    for n in (50, 200, 800):
        a, b = lcs_case(rng, n)
        print(f"LCS, two sequences of {n} tokens")
        times = {name: bench(name, lambda impl=impl: kernels.lcs_tokens(a, b, impl=impl), args.repeat)
                 for name, impl in impls}
        if len(times) == 2:
            print(f"  speedup  {times['python'] / times['cython']:9.1f}x")

    for n_docs in (10_000, 100_000):
        docs, tfs, doc_len, avgdl = bm25_case(rng, n_docs)
        print(f"BM25 posting accumulate, {len(docs)} postings over {n_docs} docs")
        times = {}
        for name, impl in impls:
            def run(impl=impl):
                scores = array("d", bytes(8 * n_docs))
                kernels.bm25_accumulate(scores, docs, tfs, doc_len, 1.7, 1.2, 0.75, avgdl, impl=impl)
            times[name] = bench(name, run, args.repeat)
        if len(times) == 2:
            print(f"  speedup  {times['python'] / times['cython']:9.1f}x")


if __name__ == "__main__":
    main()
